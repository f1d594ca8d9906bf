#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rvosfuse/mask.hpp"

namespace rvos {

struct FrameScore {
  double j = 0.0;
  double f = 0.0;
};

/// IoU of pred and gt. Two empty masks score 1.0.
double RegionSimilarity(const BinaryMask& pred, const BinaryMask& gt);

/// Boundary F-measure. Boundary pixels of one mask count as matched when a
/// boundary pixel of the other mask lies within `tolerance` (Euclidean).
/// Both boundaries empty scores 1.0; exactly one empty, or P + R = 0,
/// scores 0.0.
double ContourAccuracy(const BinaryMask& pred, const BinaryMask& gt, double tolerance);

/// max(1, round(0.008 * diagonal)).
int DefaultTolerance(int width, int height);

/// Per-frame J and F. A negative tolerance selects DefaultTolerance.
FrameScore ScoreFrame(const BinaryMask& pred, const BinaryMask& gt, double tolerance = -1.0);

/// Mean J and F over all frames. Throws SequenceMismatch when frame counts or
/// shapes differ.
FrameScore ScoreSequence(const MaskSequence& pred, const MaskSequence& gt,
                         double tolerance = -1.0);

struct SequenceKey {
  std::string video_id;
  std::string expression_id;

  friend auto operator<=>(const SequenceKey&, const SequenceKey&) = default;
};

struct SequenceScore {
  SequenceKey key;
  FrameScore score;  // fractions in [0, 1]
};

/// Percentages, unrounded.
struct ScoreRow {
  double jf = 0.0;
  double j = 0.0;
  double f = 0.0;
};

struct EvalReport {
  std::vector<std::pair<SequenceKey, ScoreRow>> per_sequence;  // input order
  ScoreRow global;
};

/// Unweighted mean over sequences, summed in input order. Throws EmptyInput.
EvalReport Aggregate(const std::vector<SequenceScore>& scores);

/// Rounds half away from zero at `decimals` places, tolerant of binary
/// representation error (62.565 -> 62.57).
double RoundHalfUp(double value, int decimals = 2);

/// "62.57"
std::string FormatPercent(double value);
/// "+4.83" / "-1.20", computed from the two values after rounding.
std::string FormatDelta(double current, double baseline);

/// Plain-text table, columns J&F | J | F, per-sequence rows then the global
/// row labelled "Overall".
std::string RenderTable(const EvalReport& report);
/// JSON document with one {"jf","j","f"} record per row.
std::string RenderJson(const EvalReport& report);

}  // namespace rvos
