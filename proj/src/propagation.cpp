#include "rvosfuse/propagation.hpp"

#include <exception>
#include <string>
#include <utility>

#include "rvosfuse/error.hpp"

namespace rvos {
namespace {

class IdentityPropagator final : public Propagator {
 public:
  std::string name() const override { return "identity"; }
  std::string version() const override { return "1"; }

  std::vector<BinaryMask> Propagate(const PropagationRequest& request) override {
    return std::vector<BinaryMask>(request.FrameRange().size(), request.key_mask);
  }
};

std::vector<BinaryMask> RunOne(Propagator& propagator, const PropagationRequest& request) {
  const std::size_t expected = request.FrameRange().size();
  std::vector<BinaryMask> masks;
  try {
    masks = propagator.Propagate(request);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kPropagatorFailure) throw;
    throw Error(ErrorCode::kPropagatorFailure, propagator.name() + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kPropagatorFailure, propagator.name() + ": " + e.what());
  }
  if (masks.size() != expected) {
    throw Error(ErrorCode::kPropagatorFailure,
                propagator.name() + " returned " + std::to_string(masks.size()) +
                    " masks for a " + std::to_string(expected) + "-frame " +
                    std::string(ToString(request.direction)) + " run");
  }
  for (const BinaryMask& m : masks) {
    if (m.width() != request.video.width || m.height() != request.video.height) {
      throw Error(ErrorCode::kPropagatorFailure,
                  propagator.name() + " returned a " + std::to_string(m.width()) + "x" +
                      std::to_string(m.height()) + " mask for a " +
                      std::to_string(request.video.width) + "x" +
                      std::to_string(request.video.height) + " video");
    }
  }
  return masks;
}

}  // namespace

std::string_view ToString(Direction d) {
  return d == Direction::kForward ? "forward" : "backward";
}

std::vector<std::size_t> PropagationRequest::FrameRange() const {
  std::vector<std::size_t> range;
  const std::size_t t = video.frame_count();
  if (key_index >= t) return range;
  if (direction == Direction::kForward) {
    for (std::size_t i = key_index; i < t; ++i) range.push_back(i);
  } else {
    for (std::size_t i = key_index + 1; i-- > 0;) range.push_back(i);
  }
  return range;
}

std::unique_ptr<Propagator> MakeIdentityPropagator() {
  return std::make_unique<IdentityPropagator>();
}

MaskSequence PropagateBidirectional(Propagator& propagator, const VideoRef& video,
                                    std::size_t key_index, const BinaryMask& key_mask,
                                    const std::string& expression_id) {
  const std::size_t t = video.frame_count();
  if (key_index >= t) {
    throw Error(ErrorCode::kInvalidArgument, "key index " + std::to_string(key_index) +
                                                 " outside " + std::to_string(t) +
                                                 "-frame video " + video.video_id);
  }
  if (key_mask.width() != video.width || key_mask.height() != video.height) {
    throw Error(ErrorCode::kDimensionMismatch, "key mask does not match video " + video.video_id);
  }

  std::vector<std::optional<BinaryMask>> slots(t);
  slots[key_index] = key_mask;

  if (key_index > 0) {
    PropagationRequest request{video, key_index, key_mask, Direction::kBackward};
    auto masks = RunOne(propagator, request);
    const auto range = request.FrameRange();
    for (std::size_t i = 1; i < range.size(); ++i) slots[range[i]] = std::move(masks[i]);
  }
  if (key_index + 1 < t) {
    PropagationRequest request{video, key_index, key_mask, Direction::kForward};
    auto masks = RunOne(propagator, request);
    const auto range = request.FrameRange();
    for (std::size_t i = 1; i < range.size(); ++i) slots[range[i]] = std::move(masks[i]);
  }

  std::vector<BinaryMask> frames;
  frames.reserve(t);
  for (auto& slot : slots) frames.push_back(std::move(*slot));
  return MaskSequence(video.video_id, expression_id, std::move(frames));
}

PredictionSet RunCandidates(Propagator& propagator, const VideoRef& video,
                            const std::vector<KeyframeChoice>& choices,
                            const MaskSequence& source) {
  if (choices.empty()) throw Error(ErrorCode::kInvalidArgument, "no key-frame choices");
  if (source.frame_count() != video.frame_count()) {
    throw Error(ErrorCode::kSequenceMismatch,
                source.video_id() + "/" + source.expression_id() + " has " +
                    std::to_string(source.frame_count()) + " frames, video has " +
                    std::to_string(video.frame_count()));
  }
  PredictionSet set{source, {}};
  set.candidates.reserve(choices.size());
  for (std::size_t c = 0; c < choices.size(); ++c) {
    const std::size_t key = choices[c].index;
    if (key >= source.frame_count()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "candidate " + std::to_string(c) + " key index out of range");
    }
    try {
      set.candidates.push_back(PropagateBidirectional(propagator, video, key, source.frame(key),
                                                      source.expression_id()));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kPropagatorFailure) throw;
      throw Error(ErrorCode::kPropagatorFailure,
                  "candidate " + std::to_string(c) + " (key frame " + std::to_string(key) +
                      ") of " + source.video_id() + "/" + source.expression_id() + ": " +
                      e.what());
    }
  }
  return set;
}

CandidateOutcome RunCandidatesOrFallback(Propagator& propagator, const VideoRef& video,
                                         const std::vector<KeyframeChoice>& choices,
                                         const MaskSequence& source) {
  try {
    return {RunCandidates(propagator, video, choices, source), std::nullopt};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kPropagatorFailure) throw;
    return {PredictionSet{source, {}}, std::string(e.what())};
  }
}

}  // namespace rvos
