#include "rvosfuse/keyframe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rvosfuse/error.hpp"

namespace rvos {

ConfidenceTrack::ConfidenceTrack(std::vector<double> scores) : scores_(std::move(scores)) {
  for (std::size_t i = 0; i < scores_.size(); ++i) {
    const double s = scores_[i];
    if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "confidence score " + std::to_string(s) + " at frame " + std::to_string(i) +
                      " is outside [0, 1]");
    }
  }
}

double ConfidenceTrack::max() const {
  if (scores_.empty()) throw Error(ErrorCode::kEmptyTrack, "empty confidence track");
  return *std::max_element(scores_.begin(), scores_.end());
}

KeyframeChoice SelectKeyframe(const ConfidenceTrack& track) {
  if (track.empty()) throw Error(ErrorCode::kEmptyTrack, "empty confidence track");
  const auto& s = track.scores();
  // max_element returns the first maximum.
  const auto it = std::max_element(s.begin(), s.end());
  return {static_cast<std::size_t>(it - s.begin()), *it};
}

std::vector<KeyframeChoice> SelectTopN(const ConfidenceTrack& track, std::size_t n) {
  if (track.empty()) throw Error(ErrorCode::kEmptyTrack, "empty confidence track");
  if (n < 1 || n > track.size()) {
    throw Error(ErrorCode::kNTooLarge, "requested " + std::to_string(n) + " key frames from a " +
                                           std::to_string(track.size()) + "-frame track");
  }
  const auto& s = track.scores();
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return s[a] != s[b] ? s[a] > s[b] : a < b;
                    });
  std::vector<KeyframeChoice> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({order[i], s[order[i]]});
  return out;
}

}  // namespace rvos
