#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rvosfuse/fusion.hpp"
#include "rvosfuse/keyframe.hpp"
#include "rvosfuse/mask.hpp"

namespace rvos {

enum class Direction { kForward, kBackward };

std::string_view ToString(Direction d);

struct PropagationRequest {
  VideoRef video;
  std::size_t key_index = 0;
  BinaryMask key_mask;
  Direction direction = Direction::kForward;

  /// Frame indices covered by this run in propagation order, key frame
  /// first: key..T-1 forward, key..0 backward.
  std::vector<std::size_t> FrameRange() const;
};

/// A VOS model seen from the orchestrator. Implementations return one mask
/// per index of request.FrameRange(), in that order.
class Propagator {
 public:
  virtual ~Propagator() = default;

  virtual std::string name() const = 0;
  virtual std::string version() const = 0;

  virtual std::vector<BinaryMask> Propagate(const PropagationRequest& request) = 0;
};

/// Makes a fresh propagator; the pipeline calls it once per worker so that
/// every connection serves one request at a time.
using PropagatorFactory = std::function<std::unique_ptr<Propagator>()>;

/// Returns the key mask for every requested frame.
std::unique_ptr<Propagator> MakeIdentityPropagator();

/// Runs the backward pass over frames key..0 and the forward pass over
/// key..T-1, then stitches them into a T-frame sequence. The key frame keeps
/// `key_mask` exactly; both runs' key-frame outputs are dropped. A run is
/// skipped when it would cover only the key frame.
///
/// Throws DimensionMismatch for a key mask that does not match the video and
/// PropagatorFailure when the propagator throws, returns the wrong number of
/// masks, or returns masks of the wrong shape.
MaskSequence PropagateBidirectional(Propagator& propagator, const VideoRef& video,
                                    std::size_t key_index, const BinaryMask& key_mask,
                                    const std::string& expression_id);

/// One propagated sequence per choice, each seeded with
/// source.frame(choice.index); the source is kept as the first voter.
/// Throws PropagatorFailure naming the failing candidate.
PredictionSet RunCandidates(Propagator& propagator, const VideoRef& video,
                            const std::vector<KeyframeChoice>& choices,
                            const MaskSequence& source);

struct CandidateOutcome {
  PredictionSet set;
  /// Set when a candidate failed; `set.candidates` is then empty so fusion
  /// falls back to the source.
  std::optional<std::string> failure;
};

CandidateOutcome RunCandidatesOrFallback(Propagator& propagator, const VideoRef& video,
                                         const std::vector<KeyframeChoice>& choices,
                                         const MaskSequence& source);

}  // namespace rvos
