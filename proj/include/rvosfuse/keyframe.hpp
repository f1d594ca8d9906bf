#pragma once

#include <cstddef>
#include <vector>

namespace rvos {

/// Per-frame confidence scores of an RVOS prediction. Every score must be
/// finite and within [0, 1]; construction rejects anything else.
class ConfidenceTrack {
 public:
  ConfidenceTrack() = default;
  explicit ConfidenceTrack(std::vector<double> scores);

  const std::vector<double>& scores() const noexcept { return scores_; }
  std::size_t size() const noexcept { return scores_.size(); }
  bool empty() const noexcept { return scores_.empty(); }
  double max() const;

  friend bool operator==(const ConfidenceTrack&, const ConfidenceTrack&) = default;

 private:
  std::vector<double> scores_;
};

struct KeyframeChoice {
  std::size_t index = 0;
  double score = 0.0;

  friend bool operator==(const KeyframeChoice&, const KeyframeChoice&) = default;
};

/// Argmax of the track, lowest index on ties. Throws EmptyTrack.
KeyframeChoice SelectKeyframe(const ConfidenceTrack& track);

/// The n highest-scoring frames ordered by (score desc, index asc).
/// Throws EmptyTrack, or NTooLarge unless 1 <= n <= size.
std::vector<KeyframeChoice> SelectTopN(const ConfidenceTrack& track, std::size_t n);

}  // namespace rvos
