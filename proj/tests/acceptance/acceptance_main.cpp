// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes. Runs entirely on the builtin identity propagator.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "../support/oracles.hpp"
#include "rvosfuse/error.hpp"
#include "rvosfuse/fusion.hpp"
#include "rvosfuse/keyframe.hpp"
#include "rvosfuse/mask_store.hpp"
#include "rvosfuse/metrics.hpp"
#include "rvosfuse/pipeline.hpp"
#include "rvosfuse/propagation.hpp"

namespace {

namespace fs = std::filesystem;
using rvos::BinaryMask;
using rvos::MaskSequence;

// Thrown by Expect; carries the first violated condition.
struct Violation {
  std::string what;
};

void Expect(bool ok, const std::string& what) {
  if (!ok) throw Violation{what};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  Expect(static_cast<bool>(in), "cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string TableFixtures() {
  struct Row {
    double j, f;
    const char* jf;
  };
  const Row rows[] = {{58.98, 66.15, "62.57"}, {47.28, 53.74, "50.51"},
                      {52.49, 58.19, "55.34"}, {56.39, 61.46, "58.93"}};
  std::ostringstream detail;
  for (const Row& r : rows) {
    const auto report = rvos::Aggregate({{{"v", "e"}, {r.j / 100.0, r.f / 100.0}}});
    const std::string got = rvos::FormatPercent(report.global.jf);
    Expect(got == r.jf, "J&F for (" + rvos::FormatPercent(r.j) + ", " + rvos::FormatPercent(r.f) +
                            ") rendered " + got + ", expected " + r.jf);
    detail << got << ' ';
  }
  const std::string delta = rvos::FormatDelta(55.34, 50.51);
  Expect(delta == "+4.83", "delta rendered " + delta);
  return detail.str() + "delta " + delta;
}

std::string RleRoundTrip() {
  std::mt19937 rng(1001);
  std::uniform_int_distribution<int> dim(1, 128);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 1000; ++i) {
    const int w = i == 0 ? 1 : i == 1 ? 128 : dim(rng);
    const int h = i == 0 ? 1 : i == 1 ? 128 : dim(rng);
    const auto m = i % 2 ? oracle::RandomBlobs(rng, w, h, 3) : oracle::RandomMask(rng, w, h, density(rng));
    Expect(rvos::RleDecode(rvos::RleEncode(m)) == m,
           "mask " + std::to_string(i) + " (" + std::to_string(w) + "x" + std::to_string(h) +
               ") did not round-trip");
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Expect(secs < 5.0, "took " + std::to_string(secs) + " s");
  char buf[64];
  std::snprintf(buf, sizeof buf, "1000 masks in %.3f s", secs);
  return buf;
}

MaskSequence Seq(std::vector<BinaryMask> frames) { return MaskSequence("v", "e", std::move(frames)); }

std::string FusionOracle() {
  std::mt19937 rng(1002);
  int trials = 0;
  for (std::size_t voters = 1; voters <= 7; ++voters) {
    for (int k = 0; k < 40; ++k, ++trials) {
      std::vector<BinaryMask> frames;
      for (std::size_t v = 0; v < voters; ++v) frames.push_back(oracle::RandomMask(rng, 16, 16, 0.5));
      rvos::PredictionSet set{Seq({frames[0]}), {}};
      for (std::size_t v = 1; v < voters; ++v) set.candidates.push_back(Seq({frames[v]}));
      const auto fused = rvos::MajorityFuse(set);
      Expect(fused.frame(0) == oracle::MajorityCount(frames),
             "counting oracle mismatch with " + std::to_string(voters) + " voters");

      Expect(rvos::MajorityFuse({set.source, std::vector<MaskSequence>(voters - 1, set.source)}) ==
                 set.source,
             "unanimous voters changed the source");

      auto shuffled = frames;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      rvos::PredictionSet perm{Seq({shuffled[0]}), {}};
      for (std::size_t v = 1; v < voters; ++v) perm.candidates.push_back(Seq({shuffled[v]}));
      Expect(rvos::MajorityFuse(perm) == fused, "voter order changed the result");

      auto grown = frames;
      const std::size_t who = rng() % voters;
      std::vector<std::uint8_t> bits(grown[who].bits().begin(), grown[who].bits().end());
      const auto extra = oracle::RandomMask(rng, 16, 16, 0.3);
      for (std::size_t i = 0; i < bits.size(); ++i) bits[i] |= extra.bits()[i];
      grown[who] = BinaryMask(16, 16, bits);
      rvos::PredictionSet more{Seq({grown[0]}), {}};
      for (std::size_t v = 1; v < voters; ++v) more.candidates.push_back(Seq({grown[v]}));
      const MaskSequence grown_fused = rvos::MajorityFuse(more);
      const auto after = grown_fused.frame(0).bits();
      for (std::size_t i = 0; i < bits.size(); ++i) {
        Expect(after[i] >= fused.frame(0).bits()[i], "adding foreground votes removed a pixel");
      }
    }
  }
  return std::to_string(trials) + " trials, V=1..7";
}

std::string KeyframeOracle() {
  std::mt19937 rng(1003);
  std::uniform_int_distribution<std::size_t> len(1, 1000);
  std::size_t ties = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto scores = oracle::RandomTrack(rng, len(rng));
    const rvos::ConfidenceTrack track(scores);
    const std::size_t expect = oracle::ArgmaxFirst(scores);
    ties += std::count(scores.begin(), scores.end(), scores[expect]) > 1 ? 1 : 0;
    Expect(rvos::SelectKeyframe(track).index == expect, "argmax mismatch on track " + std::to_string(i));
    const std::size_t n = 1 + rng() % std::min<std::size_t>(scores.size(), 9);
    const auto top = rvos::SelectTopN(track, n);
    const auto want = oracle::TopN(scores, n);
    Expect(top.size() == n, "top-N size");
    for (std::size_t k = 0; k < n; ++k) {
      Expect(top[k].index == want[k], "top-N mismatch on track " + std::to_string(i));
    }
  }
  return "1000 tracks, " + std::to_string(ties) + " with tied maxima";
}

std::string PropagationContract() {
  auto prop = rvos::MakeIdentityPropagator();
  std::mt19937 rng(1004);
  int runs = 0;
  for (std::size_t frames : {1u, 2u, 5u, 12u}) {
    rvos::VideoRef video{"v", 13, 9, {}};
    for (std::size_t t = 0; t < frames; ++t) video.frame_names.push_back(std::to_string(t));
    for (std::size_t key = 0; key < frames; ++key, ++runs) {
      const auto mask = oracle::RandomBlobs(rng, 13, 9, 2);
      const auto seq = rvos::PropagateBidirectional(*prop, video, key, mask, "e");
      Expect(seq.frame_count() == frames, "frame count differs");
      for (const auto& m : seq.frames()) Expect(m == mask, "frame differs from the key mask");
    }
  }
  return std::to_string(runs) + " key positions including both ends";
}

std::string MetricOracles() {
  std::mt19937 rng(1005);
  for (int i = 0; i < 300; ++i) {
    const int w = 1 + static_cast<int>(rng() % 32);
    const int h = 1 + static_cast<int>(rng() % 32);
    const auto a = oracle::RandomMask(rng, w, h, 0.4);
    const auto b = oracle::RandomMask(rng, w, h, 0.4);
    Expect(rvos::RegionSimilarity(a, b) == oracle::Iou(a, b), "J differs from pixel count");
  }
  double worst = 0;
  for (int i = 0; i < 300; ++i) {
    const int w = 8 + static_cast<int>(rng() % 25);
    const int h = 8 + static_cast<int>(rng() % 25);
    const auto a = oracle::RandomBlobs(rng, w, h, 2);
    const auto b = oracle::RandomBlobs(rng, w, h, 2);
    const double tol = 1 + static_cast<double>(rng() % 3);
    worst = std::max(worst, std::abs(rvos::ContourAccuracy(a, b, tol) - oracle::BoundaryF(a, b, tol)));
  }
  Expect(worst <= 1e-9, "F differs from brute force by " + std::to_string(worst));
  const auto sq = oracle::Rect(8, 8, 2, 2, 6, 6);
  const BinaryMask empty(8, 8);
  Expect(rvos::RegionSimilarity(sq, sq) == 1.0 && rvos::ContourAccuracy(sq, sq, 1) == 1.0,
         "identical masks must score 1");
  Expect(rvos::RegionSimilarity(empty, sq) == 0.0 && rvos::ContourAccuracy(empty, sq, 1) == 0.0,
         "one empty mask must score 0");
  Expect(rvos::RegionSimilarity(empty, empty) == 1.0 && rvos::ContourAccuracy(empty, empty, 1) == 1.0,
         "two empty masks must score 1");
  char buf[64];
  std::snprintf(buf, sizeof buf, "max |dF| %.1e", worst);
  return buf;
}

std::string EndToEnd(const fs::path& data) {
  const fs::path root = fs::temp_directory_path() / "rvosfuse_acceptance";
  fs::remove_all(root);
  auto run = [&](const std::string& name, std::size_t jobs) {
    rvos::PipelineConfig c;
    c.dataset = data;
    c.predictions = data / "predictions.json";
    c.out = root / name;
    c.jobs = jobs;
    rvos::CmdPipeline(c);
    return c.out;
  };
  const fs::path a = run("first", 1);
  const fs::path b = run("second", 1);
  const fs::path c = run("parallel", 4);
  for (const char* file : {"fused.zip", "report.txt", "report.json", "candidates.json"}) {
    const std::string ref = Slurp(a / file);
    Expect(ref == Slurp(b / file), std::string(file) + " differs between two runs");
    Expect(ref == Slurp(c / file), std::string(file) + " differs between --jobs 1 and --jobs 4");
  }

  // Evaluation of the raw predictions reproduces the committed golden report.
  const auto eval = rvos::CmdEvaluate(data / "predictions.json", data, std::nullopt, {});
  Expect(eval.table == Slurp(data / "golden_report.txt"), "evaluate table differs from golden");
  Expect(eval.json == Slurp(data / "golden_report.json"), "evaluate json differs from golden");

  // With every voter equal to the source, fusion returns the source bit for bit.
  const auto dataset = rvos::ReadDataset(data);
  const auto predictions = rvos::ReadPredictions(data / "predictions.json");
  for (const auto& e : predictions.entries) {
    const auto source = rvos::EntrySequence(e, dataset.Video(e.video_id));
    for (std::size_t n = 1; n <= 9; ++n) {
      const rvos::PredictionSet set{source, std::vector<MaskSequence>(n, source)};
      Expect(rvos::FuseOrFallback(set) == source, "unanimous fusion changed " + e.video_id);
    }
  }
  fs::remove_all(root);
  return std::to_string(dataset.videos.size()) + " videos, " +
         std::to_string(predictions.entries.size()) + " expressions, J&F " +
         rvos::FormatPercent(eval.report.global.jf);
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path data = argc > 1 ? fs::path(argv[1]) : fs::path(RVOSFUSE_TEST_DATA) / "synth5";
  struct Criterion {
    const char* name;
    std::function<std::string()> run;
  };
  const Criterion criteria[] = {
      {"table arithmetic fixtures", TableFixtures},
      {"RLE round-trip", RleRoundTrip},
      {"fusion oracle", FusionOracle},
      {"key-frame oracle", KeyframeOracle},
      {"propagation contract", PropagationContract},
      {"metric oracles", MetricOracles},
      {"end-to-end determinism", [&] { return EndToEnd(data); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      detail = c.run();
      ok = true;
    } catch (const Violation& v) {
      detail = v.what;
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", c.name, detail.c_str());
    failed += ok ? 0 : 1;
  }
  const int total = static_cast<int>(std::size(criteria));
  std::printf("%d/%d criteria passed\n", total - failed, total);
  return failed == 0 ? 0 : 1;
}
