// Python bindings. Masks cross the boundary as 2-D uint8 numpy arrays of
// shape (height, width) holding 0/1.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rvosfuse/error.hpp"
#include "rvosfuse/fusion.hpp"
#include "rvosfuse/keyframe.hpp"
#include "rvosfuse/metrics.hpp"
#include "rvosfuse/pipeline.hpp"
#include "rvosfuse/propagation.hpp"

namespace py = pybind11;

namespace {

using Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

rvos::BinaryMask ToMask(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("mask must be a 2-D array");
  const auto h = static_cast<int>(a.shape(0));
  const auto w = static_cast<int>(a.shape(1));
  std::vector<std::uint8_t> bits(a.data(), a.data() + a.size());
  for (auto& b : bits) b = b != 0 ? 1 : 0;
  return rvos::BinaryMask(w, h, std::move(bits));
}

Array ToArray(const rvos::BinaryMask& m) {
  Array out({m.height(), m.width()});
  std::copy(m.bits().begin(), m.bits().end(), out.mutable_data());
  return out;
}

rvos::MaskSequence ToSequence(const std::vector<Array>& frames) {
  std::vector<rvos::BinaryMask> masks;
  masks.reserve(frames.size());
  for (const auto& f : frames) masks.push_back(ToMask(f));
  return rvos::MaskSequence("", "", std::move(masks));
}

std::vector<Array> ToArrays(const rvos::MaskSequence& s) {
  std::vector<Array> out;
  for (const auto& f : s.frames()) out.push_back(ToArray(f));
  return out;
}

py::dict Row(const rvos::ScoreRow& r) {
  py::dict d;
  d["jf"] = r.jf;
  d["j"] = r.j;
  d["f"] = r.f;
  return d;
}

py::dict ReportDict(const rvos::EvalReport& report) {
  py::dict d;
  d["global"] = Row(report.global);
  py::list rows;
  for (const auto& [key, row] : report.per_sequence) {
    py::dict r = Row(row);
    r["video_id"] = key.video_id;
    r["expression_id"] = key.expression_id;
    rows.append(r);
  }
  d["sequences"] = rows;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Key-frame propagation, mask fusion and J&F evaluation";

  static py::exception<rvos::Error> error(m, "RvosError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const rvos::Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  m.def("rle_encode", [](const Array& mask) {
    const auto rle = rvos::RleEncode(ToMask(mask));
    py::dict d;
    d["size"] = py::make_tuple(rle.height, rle.width);
    d["counts"] = rle.counts;
    return d;
  }, py::arg("mask"), "Column-major run-length encoding, starting with a background run.");

  m.def("rle_decode", [](std::pair<int, int> size, std::vector<std::uint32_t> counts) {
    return ToArray(rvos::RleDecode({size.second, size.first, std::move(counts)}));
  }, py::arg("size"), py::arg("counts"));

  m.def("dilate", [](const Array& mask, double radius) {
    return ToArray(rvos::Dilate(ToMask(mask), radius));
  }, py::arg("mask"), py::arg("radius"));
  m.def("boundary", [](const Array& mask) { return ToArray(rvos::Boundary(ToMask(mask))); },
        py::arg("mask"));

  m.def("region_similarity", [](const Array& pred, const Array& gt) {
    return rvos::RegionSimilarity(ToMask(pred), ToMask(gt));
  }, py::arg("pred"), py::arg("gt"));
  m.def("contour_accuracy", [](const Array& pred, const Array& gt, std::optional<double> tol) {
    const auto p = ToMask(pred);
    return rvos::ContourAccuracy(p, ToMask(gt), tol ? *tol : rvos::DefaultTolerance(p.width(), p.height()));
  }, py::arg("pred"), py::arg("gt"), py::arg("tolerance") = py::none());
  m.def("default_tolerance", &rvos::DefaultTolerance, py::arg("width"), py::arg("height"));

  m.def("aggregate", [](const std::vector<std::tuple<std::string, std::string, double, double>>& rows) {
    std::vector<rvos::SequenceScore> scores;
    for (const auto& [v, e, j, f] : rows) scores.push_back({{v, e}, {j, f}});
    return ReportDict(rvos::Aggregate(scores));
  }, py::arg("scores"), "Scores are (video_id, expression_id, J, F) with J, F in [0, 1].");
  m.def("format_percent", &rvos::FormatPercent, py::arg("value"));
  m.def("format_delta", &rvos::FormatDelta, py::arg("current"), py::arg("baseline"));

  m.def("select_keyframe", [](std::vector<double> track) {
    const auto c = rvos::SelectKeyframe(rvos::ConfidenceTrack(std::move(track)));
    return py::make_tuple(c.index, c.score);
  }, py::arg("track"));
  m.def("select_top_n", [](std::vector<double> track, std::size_t n) {
    std::vector<std::size_t> out;
    for (const auto& c : rvos::SelectTopN(rvos::ConfidenceTrack(std::move(track)), n)) {
      out.push_back(c.index);
    }
    return out;
  }, py::arg("track"), py::arg("n"));

  m.def("majority_fuse", [](const std::vector<Array>& source,
                            const std::vector<std::vector<Array>>& candidates,
                            bool include_source_voter) {
    rvos::PredictionSet set{ToSequence(source), {}};
    for (const auto& c : candidates) set.candidates.push_back(ToSequence(c));
    return ToArrays(rvos::FuseOrFallback(set, {true, include_source_voter}));
  }, py::arg("source"), py::arg("candidates"), py::arg("include_source_voter") = true,
     "Per-pixel strict majority; ties go to background.");

  m.def("propagate_identity", [](const Array& key_mask, std::size_t frames, std::size_t key_index) {
    const auto key = ToMask(key_mask);
    rvos::VideoRef video{"v", key.width(), key.height(), {}};
    for (std::size_t t = 0; t < frames; ++t) video.frame_names.push_back(std::to_string(t));
    auto prop = rvos::MakeIdentityPropagator();
    return ToArrays(rvos::PropagateBidirectional(*prop, video, key_index, key, ""));
  }, py::arg("key_mask"), py::arg("frames"), py::arg("key_index"));

  m.def("evaluate", [](const std::filesystem::path& predictions,
                       const std::filesystem::path& dataset, std::optional<double> tolerance) {
    const auto outcome = rvos::CmdEvaluate(predictions, dataset, tolerance, {});
    py::dict d = ReportDict(outcome.report);
    d["table"] = outcome.table;
    return d;
  }, py::arg("predictions"), py::arg("dataset"), py::arg("tolerance") = py::none());

  m.def("run_pipeline", [](const std::filesystem::path& dataset,
                           const std::filesystem::path& predictions,
                           const std::filesystem::path& out, std::size_t n, std::size_t jobs,
                           const std::string& adapter_cmd, bool include_source_voter) {
    rvos::PipelineConfig c;
    c.dataset = dataset;
    c.predictions = predictions;
    c.out = out;
    c.n = n;
    c.jobs = jobs;
    c.adapter_cmd = adapter_cmd;
    c.include_source_voter = include_source_voter;
    rvos::ValidateConfig(c);
    py::gil_scoped_release release;
    return rvos::CmdPipeline(c);
  }, py::arg("dataset"), py::arg("predictions"), py::arg("out"), py::arg("n") = 5,
     py::arg("jobs") = 1, py::arg("adapter_cmd") = std::string(rvos::kBuiltinIdentity),
     py::arg("include_source_voter") = true);
}
