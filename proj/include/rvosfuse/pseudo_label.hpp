#pragma once

#include <map>
#include <string>
#include <vector>

#include "rvosfuse/keyframe.hpp"
#include "rvosfuse/manifest.hpp"
#include "rvosfuse/metrics.hpp"

namespace rvos {

struct Provenance {
  std::string run_id;
  std::string config_hash;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct PseudoLabel {
  VideoRef video;
  ExpressionRef expression;
  MaskSequence masks;

  friend bool operator==(const PseudoLabel&, const PseudoLabel&) = default;
};

/// Fused predictions promoted to training targets, in split order.
struct PseudoLabelSet {
  std::vector<PseudoLabel> entries;
  Provenance provenance;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
};

/// One entry per expression of `split`, in split order. Throws
/// MissingPrediction when an expression has no fused sequence and
/// DimensionMismatch when a sequence does not fit its video.
PseudoLabelSet BuildPseudoLabels(const std::vector<MaskSequence>& fused,
                                 const DatasetManifest& split, Provenance provenance);

/// Union of two pseudo-label sets. Throws ConflictingAnnotation when both
/// bind the same key to different masks. Provenance is taken from `a`.
PseudoLabelSet CombinePseudoLabels(const PseudoLabelSet& a, const PseudoLabelSet& b);

/// `labeled` plus every pseudo entry as an inline-RLE annotation with origin
/// pseudo. Videos and expressions missing from `labeled` are appended. A key
/// already annotated in `labeled` must carry identical masks (and is kept
/// as is); otherwise ConflictingAnnotation is thrown. The same applies to
/// differing video or expression records under the same id.
DatasetManifest MergeManifests(const DatasetManifest& labeled, const PseudoLabelSet& pseudo);

/// Keeps entries whose track maximum reaches `threshold`. Entries without a
/// track count as maximum 0. Throws InvalidArgument unless threshold is in
/// [0, 1].
PseudoLabelSet FilterByConfidence(const PseudoLabelSet& pseudo,
                                  const std::map<SequenceKey, ConfidenceTrack>& tracks,
                                  double threshold);

/// Flat `key = value` run recipe for the external re-finetuning job. The
/// training hyperparameters are advisory metadata; nothing here runs them.
std::string RenderRecipe(const std::string& manifest_path, const DatasetManifest& merged,
                         const Provenance& provenance);

}  // namespace rvos
