#include "rvosfuse/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "rvosfuse/adapter.hpp"
#include "rvosfuse/error.hpp"
#include "rvosfuse/mask_store.hpp"
#include "rvosfuse/png.hpp"
#include "rvosfuse/pseudo_label.hpp"

namespace rvos {
namespace fs = std::filesystem;

namespace {

[[noreturn]] void Usage(const std::string& what) { throw Error(ErrorCode::kUsage, what); }

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool ParseBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  Usage("config key " + key + ": expected a boolean, got \"" + v + "\"");
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  T out{};
  in >> out;
  if (in.fail() || !in.eof()) Usage("config key " + key + ": bad number \"" + v + "\"");
  return out;
}

void Log(const std::string& line) {
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << "[rvosfuse] " << line << '\n';
}

std::string Hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return buf;
}

std::uint64_t Fnv1a(std::string_view data, std::uint64_t h = 1469598103934665603ull) {
  for (const unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void WriteText(const fs::path& path, const std::string& text) { WriteFileBytes(path, text); }

std::string JsonText(const Json& doc) { return doc.dump() + "\n"; }

const PredictionEntry& NeedPrediction(const PredictionManifest& predictions,
                                      const SequenceKey& key) {
  const PredictionEntry* e = predictions.Find(key.video_id, key.expression_id);
  if (e == nullptr) {
    throw Error(ErrorCode::kMissingPrediction,
                "no prediction for " + key.video_id + "/" + key.expression_id);
  }
  return *e;
}

struct Inputs {
  DatasetManifest dataset;
  PredictionManifest predictions;
};

Inputs LoadInputs(const PipelineConfig& config) {
  Inputs in{ReadDataset(config.dataset), ReadPredictions(config.predictions)};
  CheckPredictions(in.predictions, in.dataset);
  return in;
}

std::vector<KeyframeEntry> KeyframesFor(const PipelineConfig& config, const Inputs& in) {
  if (!config.keyframes.empty()) {
    return ParseKeyframes(ReadJsonFile(config.keyframes), config.keyframes.string());
  }
  return ComputeKeyframes(in.dataset, in.predictions, config.n);
}

void RequireOut(const PipelineConfig& config) {
  if (config.out.empty()) Usage("--out is required");
}

}  // namespace

void ApplyConfigFile(const fs::path& file, PipelineConfig& config,
                     const std::vector<std::string>& skip) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kNotFound, "config file " + file.string());
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = Trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      Usage(file.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = Trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '-', '_');
    const std::string value = Trim(line.substr(eq + 1));
    if (std::find(skip.begin(), skip.end(), key) != skip.end()) continue;
    if (key == "dataset") config.dataset = value;
    else if (key == "predictions") config.predictions = value;
    else if (key == "adapter_cmd") config.adapter_cmd = value;
    else if (key == "n") config.n = ParseNumber<std::size_t>(key, value);
    else if (key == "include_source_voter") config.include_source_voter = ParseBool(key, value);
    else if (key == "post_process") config.post_process = ParseBool(key, value);
    else if (key == "tolerance") config.tolerance = ParseNumber<double>(key, value);
    else if (key == "out") config.out = value;
    else if (key == "jobs") config.jobs = ParseNumber<std::size_t>(key, value);
    else if (key == "seed") config.seed = ParseNumber<std::uint64_t>(key, value);
    else if (key == "keyframes") config.keyframes = value;
    else if (key == "candidates") config.candidates = value;
    else if (key == "fused") config.fused = value;
    else if (key == "labeled") config.labeled = value;
    else if (key == "min_confidence") config.min_confidence = ParseNumber<double>(key, value);
    else if (key == "inline_masks") config.inline_masks = ParseBool(key, value);
    else Usage(file.string() + ":" + std::to_string(lineno) + ": unknown key \"" + key + "\"");
  }
}

void ValidateConfig(const PipelineConfig& config) {
  if (config.n < 1 || config.n > 9) Usage("N must be within 1..9, got " + std::to_string(config.n));
  if (config.jobs < 1) Usage("jobs must be at least 1");
  if (config.tolerance && !(*config.tolerance >= 0.0)) Usage("tolerance must be >= 0");
  if (!(config.min_confidence >= 0.0 && config.min_confidence <= 1.0)) {
    Usage("min_confidence must lie in [0, 1]");
  }
  if (config.adapter_cmd.empty()) Usage("adapter command is empty");
}

std::string CanonicalConfig(const PipelineConfig& c) {
  std::ostringstream out;
  out << "adapter_cmd=" << c.adapter_cmd << '\n'
      << "n=" << c.n << '\n'
      << "include_source_voter=" << c.include_source_voter << '\n'
      << "post_process=" << c.post_process << '\n'
      << "tolerance=" << (c.tolerance ? std::to_string(*c.tolerance) : "default") << '\n'
      << "seed=" << c.seed << '\n'
      << "min_confidence=" << c.min_confidence << '\n';
  return out.str();
}

std::string ConfigHash(const PipelineConfig& config) { return Hex64(Fnv1a(CanonicalConfig(config))); }

std::vector<SequenceKey> JobOrder(const DatasetManifest& dataset,
                                  const PredictionManifest& predictions) {
  std::vector<SequenceKey> order;
  order.reserve(dataset.expressions.size());
  for (const ExpressionRef& e : dataset.expressions) {
    SequenceKey key{e.video_id, e.expression_id};
    NeedPrediction(predictions, key);
    order.push_back(std::move(key));
  }
  return order;
}

std::vector<KeyframeEntry> ComputeKeyframes(const DatasetManifest& dataset,
                                            const PredictionManifest& predictions, std::size_t n) {
  std::vector<KeyframeEntry> out;
  for (SequenceKey& key : JobOrder(dataset, predictions)) {
    const PredictionEntry& e = NeedPrediction(predictions, key);
    const std::size_t take = std::min(n, e.track.size());
    out.push_back({std::move(key), SelectTopN(e.track, take)});
  }
  return out;
}

Json KeyframesToJson(const std::vector<KeyframeEntry>& entries, std::size_t n) {
  Json doc;
  doc["schema"] = kSchemaVersion;
  doc["n"] = n;
  Json& list = doc["entries"] = Json::array();
  for (const auto& e : entries) {
    Json rec;
    rec["video_id"] = e.key.video_id;
    rec["expression_id"] = e.key.expression_id;
    Json& choices = rec["choices"] = Json::array();
    for (const auto& c : e.choices) choices.push_back(Json{{"index", c.index}, {"score", c.score}});
    list.push_back(std::move(rec));
  }
  return doc;
}

std::vector<KeyframeEntry> ParseKeyframes(const Json& doc, const std::string& origin) {
  auto bad = [&](const std::string& what) -> void {
    throw Error(ErrorCode::kParseError, origin + ": " + what);
  };
  if (!doc.is_object() || doc.value("schema", 0) != kSchemaVersion || !doc.contains("entries") ||
      !doc["entries"].is_array()) {
    bad("not a schema-1 key-frame document");
  }
  std::vector<KeyframeEntry> out;
  for (const Json& rec : doc["entries"]) {
    if (!rec.is_object() || !rec.contains("video_id") || !rec["video_id"].is_string() ||
        !rec.contains("expression_id") || !rec["expression_id"].is_string() ||
        !rec.contains("choices") || !rec["choices"].is_array() || rec["choices"].empty()) {
      bad("malformed key-frame entry");
    }
    KeyframeEntry entry{{rec["video_id"].get<std::string>(), rec["expression_id"].get<std::string>()},
                        {}};
    for (const Json& c : rec["choices"]) {
      if (!c.is_object() || !c.contains("index") || !c["index"].is_number_unsigned() ||
          !c.contains("score") || !c["score"].is_number()) {
        bad("malformed choice in " + entry.key.video_id + "/" + entry.key.expression_id);
      }
      entry.choices.push_back({c["index"].get<std::size_t>(), c["score"].get<double>()});
    }
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<CandidateEntry> RunPropagation(const DatasetManifest& dataset,
                                           const PredictionManifest& predictions,
                                           const std::vector<KeyframeEntry>& keyframes,
                                           const PropagatorFactory& factory, std::size_t jobs) {
  // Resolve inputs up front so workers only read shared state.
  std::vector<MaskSequence> sources;
  sources.reserve(keyframes.size());
  for (const auto& kf : keyframes) {
    const PredictionEntry& e = NeedPrediction(predictions, kf.key);
    sources.push_back(EntrySequence(e, dataset.Video(kf.key.video_id)));
  }

  std::vector<std::optional<CandidateEntry>> results(keyframes.size());
  std::vector<std::exception_ptr> errors(keyframes.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr setup_error;
  std::mutex setup_mu;

  auto worker = [&] {
    std::unique_ptr<Propagator> propagator;
    try {
      propagator = factory();
    } catch (...) {
      std::lock_guard lock(setup_mu);
      if (!setup_error) setup_error = std::current_exception();
      return;
    }
    for (std::size_t i = next++; i < keyframes.size(); i = next++) {
      const KeyframeEntry& kf = keyframes[i];
      try {
        const VideoRef& video = dataset.Video(kf.key.video_id);
        CandidateOutcome outcome =
            RunCandidatesOrFallback(*propagator, video, kf.choices, sources[i]);
        if (outcome.failure) {
          Log("post-process skipped for " + kf.key.video_id + "/" + kf.key.expression_id + ": " +
              *outcome.failure);
          // The connection may be unusable after a failure; start a fresh one.
          propagator = factory();
        }
        results[i] = CandidateEntry{kf.key, kf.choices, std::move(outcome.set.candidates),
                                    std::move(outcome.failure)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const std::size_t width = std::max<std::size_t>(1, std::min(jobs, keyframes.size()));
  if (width == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(width);
    for (std::size_t w = 0; w < width; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (setup_error) std::rethrow_exception(setup_error);
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<CandidateEntry> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

Json CandidatesToJson(const std::vector<CandidateEntry>& entries, const DatasetManifest& dataset) {
  Json doc;
  doc["schema"] = kSchemaVersion;
  Json& list = doc["entries"] = Json::array();
  for (const auto& e : entries) {
    const VideoRef& video = dataset.Video(e.key.video_id);
    Json rec;
    rec["video_id"] = e.key.video_id;
    rec["expression_id"] = e.key.expression_id;
    rec["status"] = e.failure ? "failed" : "ok";
    if (e.failure) rec["error"] = *e.failure;
    Json& cands = rec["candidates"] = Json::array();
    for (std::size_t c = 0; c < e.choices.size(); ++c) {
      Json cand;
      cand["key_index"] = e.choices[c].index;
      cand["score"] = e.choices[c].score;
      if (!e.failure) {
        Json& frames = cand["frames"] = Json::object();
        for (std::size_t t = 0; t < video.frame_count(); ++t) {
          frames[video.frame_names[t]] = MaskToJson(e.candidates.at(c).frame(t));
        }
      }
      cands.push_back(std::move(cand));
    }
    list.push_back(std::move(rec));
  }
  return doc;
}

std::vector<CandidateEntry> ParseCandidates(const Json& doc, const DatasetManifest& dataset,
                                            const std::string& origin) {
  auto bad = [&](const std::string& what) { throw Error(ErrorCode::kParseError, origin + ": " + what); };
  if (!doc.is_object() || doc.value("schema", 0) != kSchemaVersion || !doc.contains("entries") ||
      !doc["entries"].is_array()) {
    bad("not a schema-1 candidate document");
  }
  std::vector<CandidateEntry> out;
  for (const Json& rec : doc["entries"]) {
    if (!rec.is_object() || !rec.contains("video_id") || !rec.contains("expression_id") ||
        !rec.contains("status") || !rec.contains("candidates") || !rec["candidates"].is_array()) {
      bad("malformed candidate entry");
    }
    CandidateEntry entry;
    entry.key = {rec["video_id"].get<std::string>(), rec["expression_id"].get<std::string>()};
    const std::string where = entry.key.video_id + "/" + entry.key.expression_id;
    const std::string status = rec["status"].get<std::string>();
    if (status == "failed") {
      entry.failure = rec.value("error", std::string("unspecified failure"));
    } else if (status != "ok") {
      bad(where + ": unknown status \"" + status + "\"");
    }
    const VideoRef* video = dataset.FindVideo(entry.key.video_id);
    if (video == nullptr) bad(where + ": unknown video");
    for (const Json& cand : rec["candidates"]) {
      if (!cand.is_object() || !cand.contains("key_index") || !cand["key_index"].is_number_unsigned() ||
          !cand.contains("score") || !cand["score"].is_number()) {
        bad(where + ": malformed candidate");
      }
      entry.choices.push_back({cand["key_index"].get<std::size_t>(), cand["score"].get<double>()});
      if (entry.failure) continue;
      if (!cand.contains("frames") || !cand["frames"].is_object()) bad(where + ": candidate lacks frames");
      std::vector<BinaryMask> frames;
      for (const auto& name : video->frame_names) {
        const auto it = cand["frames"].find(name);
        if (it == cand["frames"].end()) bad(where + ": candidate lacks frame " + name);
        BinaryMask mask = MaskFromJson(*it);
        if (mask.width() != video->width || mask.height() != video->height) {
          throw Error(ErrorCode::kDimensionMismatch, origin + ": " + where + " frame " + name +
                                                         " does not match the video size");
        }
        frames.push_back(std::move(mask));
      }
      if (cand["frames"].size() != video->frame_count()) bad(where + ": candidate has extra frames");
      entry.candidates.emplace_back(entry.key.video_id, entry.key.expression_id, std::move(frames));
    }
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<MaskSequence> FuseAll(const DatasetManifest& dataset,
                                  const PredictionManifest& predictions,
                                  const std::vector<CandidateEntry>& candidates,
                                  const FusionOptions& options) {
  std::vector<MaskSequence> fused;
  fused.reserve(candidates.size());
  for (const CandidateEntry& c : candidates) {
    const PredictionEntry& e = NeedPrediction(predictions, c.key);
    PredictionSet set{EntrySequence(e, dataset.Video(c.key.video_id)), {}};
    if (!c.failure) set.candidates = c.candidates;
    fused.push_back(FuseOrFallback(set, options));
  }
  return fused;
}

EvalReport EvaluateSequences(const std::vector<MaskSequence>& predicted,
                             const DatasetManifest& ground_truth,
                             std::optional<double> tolerance) {
  std::vector<SequenceScore> scores;
  for (const Annotation& a : ground_truth.annotations) {
    const auto it = std::find_if(predicted.begin(), predicted.end(), [&](const MaskSequence& s) {
      return s.video_id() == a.video_id && s.expression_id() == a.expression_id;
    });
    if (it == predicted.end()) {
      throw Error(ErrorCode::kMissingPrediction,
                  "no prediction for annotated " + a.video_id + "/" + a.expression_id);
    }
    const MaskSequence gt = LoadAnnotation(ground_truth, a);
    scores.push_back({{a.video_id, a.expression_id}, ScoreSequence(*it, gt, tolerance.value_or(-1.0))});
  }
  return Aggregate(scores);
}

PropagatorFactory MakePropagatorFactory(const PipelineConfig& config,
                                        const DatasetManifest& dataset) {
  if (config.adapter_cmd == kBuiltinIdentity) {
    return [] { return MakeIdentityPropagator(); };
  }
  const fs::path frames_root = dataset.base_dir / "JPEGImages";
  FramePathResolver resolver = [frames_root](const VideoRef& video, std::size_t t) {
    return (frames_root / video.video_id / (video.frame_names.at(t) + ".jpg")).string();
  };
  const std::string command = config.adapter_cmd;
  const std::uint64_t seed = config.seed;
  return [command, resolver, seed]() -> std::unique_ptr<Propagator> {
    AdapterOptions options;
    options.environment.push_back("RVOSFUSE_SEED=" + std::to_string(seed));
    return std::make_unique<AdapterPropagator>(command, resolver, options);
  };
}

EvaluateOutcome CmdEvaluate(const fs::path& predictions, const fs::path& ground_truth,
                            std::optional<double> tolerance, const fs::path& out) {
  const DatasetManifest gt = ReadDataset(ground_truth);
  if (gt.annotations.empty()) {
    throw Error(ErrorCode::kEmptyInput, ground_truth.string() + " has no annotations");
  }
  const SequenceMap loaded = ReadMaskSet(predictions, gt);
  std::vector<MaskSequence> predicted;
  for (const auto& [key, seq] : loaded) predicted.push_back(seq);
  EvaluateOutcome outcome;
  outcome.report = EvaluateSequences(predicted, gt, tolerance);
  outcome.table = RenderTable(outcome.report);
  outcome.json = RenderJson(outcome.report);
  if (!out.empty()) {
    WriteText(out / "report.txt", outcome.table);
    WriteText(out / "report.json", outcome.json);
  }
  return outcome;
}

fs::path CmdKeyframes(const PipelineConfig& config) {
  ValidateConfig(config);
  RequireOut(config);
  const Inputs in = LoadInputs(config);
  const fs::path path = config.out / "keyframes.json";
  WriteText(path, JsonText(KeyframesToJson(ComputeKeyframes(in.dataset, in.predictions, config.n),
                                           config.n)));
  return path;
}

fs::path CmdPropagate(const PipelineConfig& config) {
  ValidateConfig(config);
  RequireOut(config);
  const Inputs in = LoadInputs(config);
  const auto keyframes = KeyframesFor(config, in);
  const auto candidates = RunPropagation(in.dataset, in.predictions, keyframes,
                                         MakePropagatorFactory(config, in.dataset), config.jobs);
  const fs::path path = config.out / "candidates.json";
  WriteText(path, JsonText(CandidatesToJson(candidates, in.dataset)));
  return path;
}

fs::path CmdFuse(const PipelineConfig& config) {
  ValidateConfig(config);
  RequireOut(config);
  if (config.candidates.empty()) Usage("fuse needs --candidates");
  const Inputs in = LoadInputs(config);
  const auto candidates =
      ParseCandidates(ReadJsonFile(config.candidates), in.dataset, config.candidates.string());
  const auto fused = FuseAll(in.dataset, in.predictions, candidates,
                             {config.post_process, config.include_source_voter});
  const fs::path path = config.out / "fused.zip";
  WriteArchive(fused, in.dataset, path);
  return path;
}

fs::path CmdPipeline(const PipelineConfig& config) {
  ValidateConfig(config);
  RequireOut(config);
  const Inputs in = LoadInputs(config);
  const auto keyframes = ComputeKeyframes(in.dataset, in.predictions, config.n);
  WriteText(config.out / "keyframes.json", JsonText(KeyframesToJson(keyframes, config.n)));
  Log("propagating " + std::to_string(keyframes.size()) + " sequences with " +
      std::to_string(config.jobs) + " job(s)");
  const auto candidates = RunPropagation(in.dataset, in.predictions, keyframes,
                                         MakePropagatorFactory(config, in.dataset), config.jobs);
  WriteText(config.out / "candidates.json", JsonText(CandidatesToJson(candidates, in.dataset)));
  const auto fused = FuseAll(in.dataset, in.predictions, candidates,
                             {config.post_process, config.include_source_voter});
  const fs::path archive = config.out / "fused.zip";
  WriteArchive(fused, in.dataset, archive);
  if (!in.dataset.annotations.empty()) {
    const EvalReport report = EvaluateSequences(fused, in.dataset, config.tolerance);
    WriteText(config.out / "report.txt", RenderTable(report));
    WriteText(config.out / "report.json", RenderJson(report));
    Log("J&F " + FormatPercent(report.global.jf));
  }
  return archive;
}

fs::path CmdPseudoLabel(const PipelineConfig& config) {
  ValidateConfig(config);
  RequireOut(config);
  if (config.fused.empty()) Usage("pseudo-label needs --fused");
  const DatasetManifest split = ReadDataset(config.dataset);
  const SequenceMap loaded = ReadMaskSet(config.fused, split);
  std::vector<MaskSequence> fused;
  for (const auto& [key, seq] : loaded) fused.push_back(seq);

  const auto fused_bytes = ReadFileBytes(config.fused);
  const std::string hash = ConfigHash(config);
  const Provenance provenance{
      "pseudo-" + Hex64(Fnv1a(std::string_view(reinterpret_cast<const char*>(fused_bytes.data()),
                                               fused_bytes.size()),
                              Fnv1a(hash))),
      hash};
  PseudoLabelSet pseudo = BuildPseudoLabels(fused, split, provenance);

  if (config.min_confidence > 0.0) {
    if (config.predictions.empty()) Usage("--min-confidence needs --predictions for the tracks");
    const PredictionManifest predictions = ReadPredictions(config.predictions);
    std::map<SequenceKey, ConfidenceTrack> tracks;
    for (const auto& e : predictions.entries) tracks[{e.video_id, e.expression_id}] = e.track;
    pseudo = FilterByConfidence(pseudo, tracks, config.min_confidence);
  }

  DatasetManifest labeled;
  if (!config.labeled.empty()) labeled = ReadDataset(config.labeled);
  DatasetManifest merged = MergeManifests(labeled, pseudo);

  const fs::path out_abs = fs::absolute(config.out);
  for (Annotation& a : merged.annotations) {
    if (a.origin == Origin::kHuman) {
      // Human PNG bindings move with the manifest: re-anchor them at the output directory.
      for (FrameBinding& f : a.frames) {
        if (auto* rel = std::get_if<std::string>(&f.source)) {
          *rel = (fs::absolute(labeled.base_dir) / *rel).lexically_normal().lexically_relative(out_abs).generic_string();
        }
      }
      continue;
    }
    if (config.inline_masks) continue;
    const VideoRef& video = merged.Video(a.video_id);
    for (std::size_t t = 0; t < a.frames.size(); ++t) {
      const std::string rel = "pseudo/" + MaskEntryName(video, a.expression_id, t);
      const auto png = EncodePng(RleDecode(std::get<RleMask>(a.frames[t].source)));
      WriteFileBytes(config.out / rel,
                     std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
      a.frames[t].source = rel;
    }
  }
  const fs::path manifest = config.out / "manifest.json";
  WriteDataset(merged, manifest);
  WriteText(config.out / "recipe.txt", RenderRecipe("manifest.json", merged, provenance));
  Log("pseudo-labeled " + std::to_string(pseudo.size()) + " expressions");
  return manifest;
}

}  // namespace rvos
