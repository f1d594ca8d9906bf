#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "../support/oracles.hpp"
#include "../support/synthetic.hpp"
#include "rvosfuse/archive.hpp"
#include "rvosfuse/error.hpp"
#include "rvosfuse/manifest.hpp"
#include "rvosfuse/mask_store.hpp"
#include "rvosfuse/pipeline.hpp"
#include "rvosfuse/png.hpp"
#include "rvosfuse/rle_record.hpp"

namespace {

namespace fs = std::filesystem;
using rvos::BinaryMask;
using rvos::ErrorCode;

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() /
            (std::string("rvosfuse_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

template <typename F>
rvos::Error Catch(F&& f) {
  try {
    f();
  } catch (const rvos::Error& e) {
    return e;
  }
  ADD_FAILURE() << "no rvos::Error thrown";
  return rvos::Error(ErrorCode::kUsage, "none");
}

TEST(RleRecord, JsonShapeAndRoundTrip) {
  const BinaryMask m(3, 2, {0, 1, 0, 0, 1, 0});
  const rvos::Json j = rvos::MaskToJson(m);
  EXPECT_EQ(j.dump(), R"({"size":[2,3],"counts":[2,2,2]})");
  EXPECT_EQ(rvos::MaskFromJson(j), m);
  EXPECT_EQ(Catch([] { rvos::RleFromJson(rvos::Json::parse(R"({"size":[2,2],"counts":[3,2]})")); })
                .code(),
            ErrorCode::kMalformedRle);
  EXPECT_EQ(Catch([] { rvos::RleFromJson(rvos::Json::parse(R"({"counts":[4]})")); }).code(),
            ErrorCode::kParseError);
}

TEST(Png, RoundTripAndPalette) {
  std::mt19937 rng(47);
  for (int i = 0; i < 30; ++i) {
    const auto m = oracle::RandomMask(rng, 1 + rng() % 40, 1 + rng() % 40, 0.5);
    const auto bytes = rvos::EncodePng(m);
    ASSERT_EQ(rvos::DecodePng(bytes, "mem"), m);
    ASSERT_EQ(rvos::EncodePng(m), bytes);
  }
  const std::vector<std::uint8_t> junk{1, 2, 3, 4};
  EXPECT_EQ(Catch([&] { rvos::DecodePng(junk, "junk.png"); }).code(), ErrorCode::kParseError);
}

TEST(Zip, DeterministicAndReadable) {
  std::vector<rvos::ArchiveEntry> entries{{"b/2.png", {1, 2, 3}}, {"a/1.png", {9}}, {"a/0.png", {}}};
  const auto zip = rvos::BuildZip(entries);
  std::reverse(entries.begin(), entries.end());
  EXPECT_EQ(rvos::BuildZip(entries), zip);
  const auto back = rvos::ReadZip(zip, "mem.zip");
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].name, "a/0.png");
  EXPECT_EQ(back[1].data, (std::vector<std::uint8_t>{9}));
  EXPECT_EQ(back[2].data, (std::vector<std::uint8_t>{1, 2, 3}));
  entries.push_back({"a/1.png", {}});
  EXPECT_EQ(Catch([&] { rvos::BuildZip(entries); }).code(), ErrorCode::kInvalidArgument);
}

TEST(Zip, CrcMismatchDetected) {
  auto zip = rvos::BuildZip({{"x.bin", {1, 2, 3, 4}}});
  zip[30 + 5] ^= 0x55;  // local header is 30 bytes, name 5 bytes, then data
  EXPECT_EQ(Catch([&] { rvos::ReadZip(zip, "bad.zip"); }).code(), ErrorCode::kParseError);
}

TEST(Dataset, WriteThenReadMasks) {
  TempDir dir;
  std::mt19937 rng(53);
  rvos::VideoRef video{"v", 10, 7, {"00000", "00001", "00002"}};
  std::vector<BinaryMask> frames;
  for (int t = 0; t < 3; ++t) frames.push_back(oracle::RandomBlobs(rng, 10, 7, 2));
  const rvos::MaskSequence seq("v", "0", frames);
  const auto paths = rvos::WriteMasks(seq, video, dir.path());
  ASSERT_EQ(paths.size(), 3u);
  for (int t = 0; t < 3; ++t) {
    EXPECT_EQ(rvos::DecodePng(rvos::ReadFileBytes(paths[t]), paths[t].string()), frames[t]);
  }
}

TEST(Dataset, SyntheticManifestRoundTrip) {
  TempDir dir;
  const auto data = synthetic::MakeDataset(99, 10);
  synthetic::WriteDataset(data, dir.path());
  const auto read = rvos::ReadDataset(dir.path());
  ASSERT_EQ(read.videos.size(), 10u);
  for (std::size_t v = 0; v < 10; ++v) {
    EXPECT_EQ(read.videos[v].frame_count(), data.manifest.videos[v].frame_count());
  }
  EXPECT_EQ(read, data.manifest);
  for (std::size_t i = 0; i < read.annotations.size(); ++i) {
    EXPECT_EQ(rvos::LoadAnnotation(read, read.annotations[i]), data.ground_truth[i]);
  }
  EXPECT_EQ(rvos::ReadPredictions(dir.path() / "predictions.json"), data.predictions);
}

TEST(Dataset, MissingPngNamesPath) {
  TempDir dir;
  const auto data = synthetic::MakeDataset(5, 1);
  synthetic::WriteDataset(data, dir.path());
  const auto victim = std::get<std::string>(data.manifest.annotations[0].frames[1].source);
  fs::remove(dir.path() / victim);
  const auto e = Catch([&] { rvos::ReadDataset(dir.path()); });
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_NE(std::string(e.what()).find(victim), std::string::npos) << e.what();
}

TEST(Dataset, InvalidJsonReportsLocation) {
  TempDir dir;
  std::ofstream(dir.path() / "manifest.json") << "{\n  \"schema\": 1,\n  oops\n}";
  const auto e = Catch([&] { rvos::ReadDataset(dir.path()); });
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_NE(std::string(e.what()).find("manifest.json:3:"), std::string::npos) << e.what();
}

TEST(Dataset, InlineMasksRoundTrip) {
  auto data = synthetic::MakeDataset(8, 2);
  for (std::size_t i = 0; i < data.manifest.annotations.size(); ++i) {
    for (std::size_t t = 0; t < data.manifest.annotations[i].frames.size(); ++t) {
      data.manifest.annotations[i].frames[t].source = rvos::RleEncode(data.ground_truth[i].frame(t));
    }
  }
  const auto json = rvos::DatasetToJson(data.manifest);
  EXPECT_TRUE(json.at("masks_inline").get<bool>());
  const auto back = rvos::ParseDataset(json, "mem");
  EXPECT_EQ(back, data.manifest);
  EXPECT_EQ(rvos::LoadAnnotation(back, back.annotations[0]), data.ground_truth[0]);
}

TEST(Predictions, BroadcastAndCoverage) {
  const auto data = synthetic::MakeDataset(3, 2);
  rvos::CheckPredictions(data.predictions, data.manifest);
  auto missing = data.predictions;
  missing.entries.pop_back();
  rvos::CheckPredictions(missing, data.manifest);  // consistency only
  EXPECT_EQ(Catch([&] { rvos::JobOrder(data.manifest, missing); }).code(),
            ErrorCode::kMissingPrediction);
  auto stray = data.predictions;
  stray.entries[0].expression_id = "nope";
  EXPECT_EQ(Catch([&] { rvos::CheckPredictions(stray, data.manifest); }).code(),
            ErrorCode::kParseError);

  auto doc = rvos::PredictionsToJson(data.predictions);
  doc["entries"][0]["track_kind"] = "broadcast";
  EXPECT_EQ(Catch([&] { rvos::ParsePredictions(doc, "mem"); }).code(), ErrorCode::kParseError);
  const std::size_t frames = doc["entries"][0]["track"].size();
  doc["entries"][0]["track"] = std::vector<double>(frames, 0.25);
  const auto parsed = rvos::ParsePredictions(doc, "mem");
  EXPECT_EQ(parsed.entries[0].track_kind, rvos::TrackKind::kBroadcast);
}

TEST(MaskSet, ArchiveDirectoryAndManifestAgree) {
  TempDir dir;
  const auto data = synthetic::MakeDataset(21, 3);
  std::vector<rvos::MaskSequence> seqs;
  for (const auto& e : data.predictions.entries) {
    seqs.push_back(rvos::EntrySequence(e, data.manifest.Video(e.video_id)));
  }
  const auto zip = rvos::BuildArchive(seqs, data.manifest);
  EXPECT_EQ(rvos::BuildArchive(seqs, data.manifest), zip);
  rvos::WriteArchive(seqs, data.manifest, dir.path() / "masks.zip");
  for (const auto& s : seqs) {
    rvos::WriteMasks(s, data.manifest.Video(s.video_id()), dir.path() / "tree");
  }
  rvos::WritePredictions(data.predictions, dir.path() / "pred.json");

  const auto from_zip = rvos::ReadMaskSet(dir.path() / "masks.zip", data.manifest);
  const auto from_tree = rvos::ReadMaskSet(dir.path() / "tree", data.manifest);
  const auto from_json = rvos::ReadMaskSet(dir.path() / "pred.json", data.manifest);
  ASSERT_EQ(from_zip.size(), seqs.size());
  EXPECT_EQ(from_zip, from_tree);
  EXPECT_EQ(from_zip, from_json);
  for (const auto& s : seqs) EXPECT_EQ(from_zip.at({s.video_id(), s.expression_id()}), s);
}

}  // namespace
