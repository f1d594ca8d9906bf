#pragma once

#include <vector>

#include "rvosfuse/mask.hpp"

namespace rvos {

/// The RVOS source sequence plus propagated candidate sequences awaiting
/// fusion. All members must share ids, frame count and frame shape.
struct PredictionSet {
  MaskSequence source;
  std::vector<MaskSequence> candidates;
};

/// Throws InconsistentSet when the members of `set` disagree on ids, frame
/// count or shape.
void ValidatePredictionSet(const PredictionSet& set);

/// Strict pixel majority over explicit voters: foreground iff more than half
/// of them vote foreground, so ties resolve to background.
/// Throws InconsistentSet on an empty or inconsistent voter list.
MaskSequence MajorityVote(const std::vector<const MaskSequence*>& voters);

/// Majority over V = 1 + |candidates| voters with the source included.
MaskSequence MajorityFuse(const PredictionSet& set);

struct FusionOptions {
  bool enabled = true;
  /// When false, only the candidates vote and the source is used only as a
  /// fallback for an empty candidate list.
  bool include_source_voter = true;
};

/// Source unchanged when disabled or without candidates, majority vote
/// otherwise.
MaskSequence FuseOrFallback(const PredictionSet& set, const FusionOptions& options = {});

}  // namespace rvos
