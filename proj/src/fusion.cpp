#include "rvosfuse/fusion.hpp"

#include <string>

#include "rvosfuse/error.hpp"

namespace rvos {
namespace {

void CheckAgainst(const MaskSequence& ref, const MaskSequence& other, std::size_t voter) {
  if (other.video_id() != ref.video_id() || other.expression_id() != ref.expression_id()) {
    throw Error(ErrorCode::kInconsistentSet,
                "voter " + std::to_string(voter) + " belongs to " + other.video_id() + "/" +
                    other.expression_id() + ", expected " + ref.video_id() + "/" +
                    ref.expression_id());
  }
  if (other.frame_count() != ref.frame_count()) {
    throw Error(ErrorCode::kInconsistentSet,
                "voter " + std::to_string(voter) + " has " + std::to_string(other.frame_count()) +
                    " frames, expected " + std::to_string(ref.frame_count()));
  }
  if (!other.frame(0).SameShape(ref.frame(0))) {
    throw Error(ErrorCode::kInconsistentSet,
                "voter " + std::to_string(voter) + " frame shape differs");
  }
}

}  // namespace

void ValidatePredictionSet(const PredictionSet& set) {
  for (std::size_t i = 0; i < set.candidates.size(); ++i) {
    CheckAgainst(set.source, set.candidates[i], i + 1);
  }
}

MaskSequence MajorityVote(const std::vector<const MaskSequence*>& voters) {
  if (voters.empty()) throw Error(ErrorCode::kInconsistentSet, "no voters");
  const MaskSequence& ref = *voters.front();
  for (std::size_t v = 1; v < voters.size(); ++v) CheckAgainst(ref, *voters[v], v);
  if (voters.size() == 1) return ref;

  const std::size_t total = voters.size();
  const int w = ref.width();
  const int h = ref.height();
  std::vector<BinaryMask> fused;
  fused.reserve(ref.frame_count());
  std::vector<std::uint32_t> votes;
  for (std::size_t t = 0; t < ref.frame_count(); ++t) {
    votes.assign(ref.frame(t).size(), 0);
    for (const MaskSequence* voter : voters) {
      const auto bits = voter->frame(t).bits();
      for (std::size_t i = 0; i < bits.size(); ++i) votes[i] += bits[i];
    }
    // votes > total / 2, i.e. 2 * votes > total.
    std::vector<std::uint8_t> out(votes.size());
    for (std::size_t i = 0; i < votes.size(); ++i) out[i] = 2 * std::size_t{votes[i]} > total ? 1 : 0;
    fused.emplace_back(w, h, std::move(out));
  }
  return MaskSequence(ref.video_id(), ref.expression_id(), std::move(fused));
}

MaskSequence MajorityFuse(const PredictionSet& set) {
  ValidatePredictionSet(set);
  std::vector<const MaskSequence*> voters;
  voters.reserve(1 + set.candidates.size());
  voters.push_back(&set.source);
  for (const auto& c : set.candidates) voters.push_back(&c);
  return MajorityVote(voters);
}

MaskSequence FuseOrFallback(const PredictionSet& set, const FusionOptions& options) {
  ValidatePredictionSet(set);
  if (!options.enabled || set.candidates.empty()) return set.source;
  if (options.include_source_voter) return MajorityFuse(set);
  std::vector<const MaskSequence*> voters;
  for (const auto& c : set.candidates) voters.push_back(&c);
  return MajorityVote(voters);
}

}  // namespace rvos
