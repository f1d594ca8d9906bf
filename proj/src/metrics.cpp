#include "rvosfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "rvosfuse/error.hpp"

namespace rvos {

double RegionSimilarity(const BinaryMask& pred, const BinaryMask& gt) {
  const std::uint64_t inter = IntersectionArea(pred, gt);
  const std::uint64_t uni = UnionArea(pred, gt);
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double ContourAccuracy(const BinaryMask& pred, const BinaryMask& gt, double tolerance) {
  if (!pred.SameShape(gt)) {
    throw Error(ErrorCode::kDimensionMismatch, "contour accuracy on differently shaped masks");
  }
  if (!(tolerance >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tolerance must be >= 0");
  }
  const BinaryMask pred_edge = Boundary(pred);
  const BinaryMask gt_edge = Boundary(gt);
  const std::uint64_t n_pred = Area(pred_edge);
  const std::uint64_t n_gt = Area(gt_edge);
  if (n_pred == 0 && n_gt == 0) return 1.0;
  if (n_pred == 0 || n_gt == 0) return 0.0;

  const double precision =
      static_cast<double>(IntersectionArea(pred_edge, Dilate(gt_edge, tolerance))) /
      static_cast<double>(n_pred);
  const double recall =
      static_cast<double>(IntersectionArea(gt_edge, Dilate(pred_edge, tolerance))) /
      static_cast<double>(n_gt);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

int DefaultTolerance(int width, int height) {
  const double diag = std::sqrt(static_cast<double>(width) * width +
                                static_cast<double>(height) * height);
  return std::max(1, static_cast<int>(std::lround(0.008 * diag)));
}

FrameScore ScoreFrame(const BinaryMask& pred, const BinaryMask& gt, double tolerance) {
  const double tol = tolerance < 0.0 ? DefaultTolerance(gt.width(), gt.height()) : tolerance;
  return {RegionSimilarity(pred, gt), ContourAccuracy(pred, gt, tol)};
}

FrameScore ScoreSequence(const MaskSequence& pred, const MaskSequence& gt, double tolerance) {
  if (pred.frame_count() != gt.frame_count()) {
    throw Error(ErrorCode::kSequenceMismatch,
                pred.video_id() + "/" + pred.expression_id() + ": " +
                    std::to_string(pred.frame_count()) + " predicted frames vs " +
                    std::to_string(gt.frame_count()) + " ground-truth frames");
  }
  if (!pred.frame(0).SameShape(gt.frame(0))) {
    throw Error(ErrorCode::kSequenceMismatch,
                pred.video_id() + "/" + pred.expression_id() + ": frame shapes differ");
  }
  double j_sum = 0.0;
  double f_sum = 0.0;
  for (std::size_t t = 0; t < pred.frame_count(); ++t) {
    const FrameScore s = ScoreFrame(pred.frame(t), gt.frame(t), tolerance);
    j_sum += s.j;
    f_sum += s.f;
  }
  const auto n = static_cast<double>(pred.frame_count());
  return {j_sum / n, f_sum / n};
}

EvalReport Aggregate(const std::vector<SequenceScore>& scores) {
  if (scores.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no sequence scores to aggregate");
  }
  EvalReport report;
  report.per_sequence.reserve(scores.size());
  double j_sum = 0.0;
  double f_sum = 0.0;
  for (const SequenceScore& s : scores) {
    const double j = 100.0 * s.score.j;
    const double f = 100.0 * s.score.f;
    report.per_sequence.emplace_back(s.key, ScoreRow{(j + f) / 2.0, j, f});
    j_sum += s.score.j;
    f_sum += s.score.f;
  }
  const auto n = static_cast<double>(scores.size());
  report.global.j = 100.0 * j_sum / n;
  report.global.f = 100.0 * f_sum / n;
  report.global.jf = (report.global.j + report.global.f) / 2.0;
  return report;
}

double RoundHalfUp(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double scaled = std::fabs(value) * scale;
  // Absorb representation error so that exact decimal halves round up.
  const double eps = 1e-9 * std::max(1.0, scaled);
  const double rounded = std::floor(scaled + 0.5 + eps) / scale;
  return std::signbit(value) ? -rounded : rounded;
}

std::string FormatPercent(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", RoundHalfUp(value));
  return buf;
}

std::string FormatDelta(double current, double baseline) {
  const double delta = RoundHalfUp(current) - RoundHalfUp(baseline);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%+.2f", RoundHalfUp(delta));
  return buf;
}

namespace {

std::string Pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string PadLeft(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string RenderTable(const EvalReport& report) {
  std::size_t label_width = 7;  // "Overall"
  for (const auto& [key, row] : report.per_sequence) {
    label_width = std::max(label_width, key.video_id.size() + 1 + key.expression_id.size());
  }
  std::ostringstream out;
  auto line = [&](const std::string& label, const std::string& a, const std::string& b,
                  const std::string& c) {
    out << Pad(label, label_width) << " | " << PadLeft(a, 6) << " | " << PadLeft(b, 6) << " | "
        << PadLeft(c, 6) << '\n';
  };
  line("Sequence", "J&F", "J", "F");
  out << std::string(label_width, '-') << "-+--------+--------+-------\n";
  for (const auto& [key, row] : report.per_sequence) {
    line(key.video_id + "/" + key.expression_id, FormatPercent(row.jf), FormatPercent(row.j),
         FormatPercent(row.f));
  }
  out << std::string(label_width, '-') << "-+--------+--------+-------\n";
  line("Overall", FormatPercent(report.global.jf), FormatPercent(report.global.j),
       FormatPercent(report.global.f));
  return out.str();
}

std::string RenderJson(const EvalReport& report) {
  auto record = [](const ScoreRow& row) {
    return nlohmann::ordered_json{{"jf", RoundHalfUp(row.jf)},
                                  {"j", RoundHalfUp(row.j)},
                                  {"f", RoundHalfUp(row.f)}};
  };
  nlohmann::ordered_json doc;
  doc["schema"] = 1;
  doc["global"] = record(report.global);
  auto& rows = doc["sequences"] = nlohmann::ordered_json::array();
  for (const auto& [key, row] : report.per_sequence) {
    auto rec = record(row);
    rec["video_id"] = key.video_id;
    rec["expression_id"] = key.expression_id;
    rows.push_back(std::move(rec));
  }
  return doc.dump(2) + "\n";
}

}  // namespace rvos
