#include "rvosfuse/pseudo_label.hpp"

#include <algorithm>
#include <sstream>

#include "rvosfuse/error.hpp"

namespace rvos {
namespace {

const MaskSequence* FindSequence(const std::vector<MaskSequence>& fused, const std::string& video,
                                 const std::string& expression) {
  for (const auto& s : fused) {
    if (s.video_id() == video && s.expression_id() == expression) return &s;
  }
  return nullptr;
}

Annotation InlineAnnotation(const PseudoLabel& label) {
  Annotation a{label.video.video_id, label.expression.expression_id, Origin::kPseudo, {}};
  for (std::size_t t = 0; t < label.video.frame_count(); ++t) {
    a.frames.push_back({label.video.frame_names[t], RleEncode(label.masks.frame(t))});
  }
  return a;
}

[[noreturn]] void Conflict(const std::string& what) {
  throw Error(ErrorCode::kConflictingAnnotation, what);
}

}  // namespace

PseudoLabelSet BuildPseudoLabels(const std::vector<MaskSequence>& fused,
                                 const DatasetManifest& split, Provenance provenance) {
  PseudoLabelSet set;
  set.provenance = std::move(provenance);
  set.entries.reserve(split.expressions.size());
  for (const ExpressionRef& e : split.expressions) {
    const MaskSequence* seq = FindSequence(fused, e.video_id, e.expression_id);
    if (seq == nullptr) {
      throw Error(ErrorCode::kMissingPrediction,
                  "no fused sequence for " + e.video_id + "/" + e.expression_id);
    }
    const VideoRef& video = split.Video(e.video_id);
    if (seq->frame_count() != video.frame_count() || seq->width() != video.width ||
        seq->height() != video.height) {
      throw Error(ErrorCode::kDimensionMismatch,
                  e.video_id + "/" + e.expression_id + " does not match its video");
    }
    set.entries.push_back({video, e, *seq});
  }
  return set;
}

PseudoLabelSet CombinePseudoLabels(const PseudoLabelSet& a, const PseudoLabelSet& b) {
  PseudoLabelSet out = a;
  for (const PseudoLabel& label : b.entries) {
    const auto it = std::find_if(out.entries.begin(), out.entries.end(), [&](const PseudoLabel& x) {
      return x.video.video_id == label.video.video_id &&
             x.expression.expression_id == label.expression.expression_id;
    });
    if (it == out.entries.end()) {
      out.entries.push_back(label);
    } else if (!(*it == label)) {
      Conflict("pseudo labels disagree on " + label.video.video_id + "/" +
               label.expression.expression_id);
    }
  }
  return out;
}

DatasetManifest MergeManifests(const DatasetManifest& labeled, const PseudoLabelSet& pseudo) {
  DatasetManifest out = labeled;
  for (const PseudoLabel& label : pseudo.entries) {
    const std::string key = label.video.video_id + "/" + label.expression.expression_id;
    if (const VideoRef* v = out.FindVideo(label.video.video_id)) {
      if (!(*v == label.video)) Conflict("video " + label.video.video_id + " differs between inputs");
    } else {
      out.videos.push_back(label.video);
    }
    const auto e = std::find_if(out.expressions.begin(), out.expressions.end(),
                                [&](const ExpressionRef& x) {
                                  return x.video_id == label.expression.video_id &&
                                         x.expression_id == label.expression.expression_id;
                                });
    if (e == out.expressions.end()) {
      out.expressions.push_back(label.expression);
    } else if (!(*e == label.expression)) {
      Conflict("expression " + key + " differs between inputs");
    }
    if (const Annotation* existing =
            out.FindAnnotation(label.video.video_id, label.expression.expression_id)) {
      if (!(LoadAnnotation(out, *existing) == label.masks)) {
        Conflict(key + " is annotated with different masks");
      }
      continue;
    }
    out.annotations.push_back(InlineAnnotation(label));
  }
  ValidateDataset(out);
  return out;
}

PseudoLabelSet FilterByConfidence(const PseudoLabelSet& pseudo,
                                  const std::map<SequenceKey, ConfidenceTrack>& tracks,
                                  double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "confidence threshold must lie in [0, 1]");
  }
  PseudoLabelSet out;
  out.provenance = pseudo.provenance;
  for (const PseudoLabel& label : pseudo.entries) {
    const auto it =
        tracks.find(SequenceKey{label.video.video_id, label.expression.expression_id});
    const double best = it == tracks.end() || it->second.empty() ? 0.0 : it->second.max();
    if (best >= threshold) out.entries.push_back(label);
  }
  return out;
}

std::string RenderRecipe(const std::string& manifest_path, const DatasetManifest& merged,
                         const Provenance& provenance) {
  std::size_t human = 0;
  std::size_t pseudo = 0;
  for (const auto& a : merged.annotations) (a.origin == Origin::kHuman ? human : pseudo)++;
  std::ostringstream out;
  out << "# Re-finetuning recipe. Hyperparameters are advisory; this tool does not train.\n"
      << "dataset_manifest = " << manifest_path << '\n'
      << "videos = " << merged.videos.size() << '\n'
      << "expressions = " << merged.expressions.size() << '\n'
      << "human_annotations = " << human << '\n'
      << "pseudo_annotations = " << pseudo << '\n'
      << "run_id = " << provenance.run_id << '\n'
      << "config_hash = " << provenance.config_hash << '\n'
      << "init = first-round finetuned weights\n"
      << "optimizer = AdamW\n"
      << "learning_rate = 1e-4\n"
      << "weight_decay = 0.05\n"
      << "batch_size = 8\n"
      << "iterations = 50000\n"
      << "lr_decay_at = 40000\n"
      << "lr_decay_factor = 0.1\n"
      << "frozen_encoders = visual,text\n";
  return out.str();
}

}  // namespace rvos
