#include <gtest/gtest.h>

#include <random>

#include "../support/oracles.hpp"
#include "rvosfuse/error.hpp"
#include "rvosfuse/mask.hpp"

namespace {

using rvos::BinaryMask;
using rvos::ErrorCode;
using rvos::RleMask;

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const rvos::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no rvos::Error thrown";
  return ErrorCode::kUsage;
}

TEST(BinaryMask, RejectsBadShapesAndValues) {
  EXPECT_EQ(CodeOf([] { BinaryMask(0, 3); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { BinaryMask(2, 2, {0, 1, 0}); }), ErrorCode::kDimensionMismatch);
  EXPECT_EQ(CodeOf([] { BinaryMask(2, 1, {0, 2}); }), ErrorCode::kInvalidArgument);
}

TEST(Rle, EmptyAndFullMasks) {
  EXPECT_EQ(rvos::RleEncode(BinaryMask(2, 2)).counts, (std::vector<std::uint32_t>{4}));
  EXPECT_EQ(rvos::RleEncode(BinaryMask(2, 2, {1, 1, 1, 1})).counts,
            (std::vector<std::uint32_t>{0, 4}));
  EXPECT_EQ(rvos::RleDecode({2, 2, {4}}), BinaryMask(2, 2));
  EXPECT_EQ(rvos::RleDecode({2, 2, {0, 4}}), BinaryMask(2, 2, {1, 1, 1, 1}));
}

TEST(Rle, ColumnMajorOrder) {
  // Row-major bits of a 3x2 mask with the middle column set.
  const BinaryMask m(3, 2, {0, 1, 0, 0, 1, 0});
  EXPECT_EQ(rvos::RleEncode(m).counts, (std::vector<std::uint32_t>{2, 2, 2}));
}

TEST(Rle, MalformedCountsRejected) {
  EXPECT_EQ(CodeOf([] { rvos::RleDecode({2, 2, {3, 2}}); }), ErrorCode::kMalformedRle);
  EXPECT_EQ(CodeOf([] { rvos::RleDecode({2, 2, {1, 0, 3}}); }), ErrorCode::kMalformedRle);
  EXPECT_EQ(CodeOf([] { rvos::RleDecode({2, 2, {}}); }), ErrorCode::kMalformedRle);
  EXPECT_EQ(CodeOf([] { rvos::RleDecode({0, 2, {0}}); }), ErrorCode::kMalformedRle);
}

TEST(Rle, RandomRoundTrip) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> dim(1, 64);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const auto m = oracle::RandomMask(rng, dim(rng), dim(rng), density(rng));
    const RleMask rle = rvos::RleEncode(m);
    std::uint64_t sum = 0;
    for (std::size_t k = 0; k < rle.counts.size(); ++k) {
      if (k > 0) ASSERT_GT(rle.counts[k], 0u);
      sum += rle.counts[k];
    }
    ASSERT_EQ(sum, m.size());
    ASSERT_EQ(rvos::RleDecode(rle), m);
  }
}

TEST(SetOps, IdentityAndDisjoint) {
  const auto a = oracle::Rect(6, 6, 0, 0, 3, 3);
  const auto b = oracle::Rect(6, 6, 3, 3, 6, 6);
  EXPECT_EQ(rvos::IntersectionArea(a, a), 9u);
  EXPECT_EQ(rvos::UnionArea(a, a), 9u);
  EXPECT_EQ(rvos::IntersectionArea(a, b), 0u);
  EXPECT_EQ(rvos::UnionArea(a, b), 18u);
  EXPECT_EQ(CodeOf([&] { rvos::UnionArea(a, BinaryMask(5, 6)); }), ErrorCode::kDimensionMismatch);
}

TEST(SetOps, MatchPixelLoop) {
  std::mt19937 rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto a = oracle::RandomMask(rng, 32, 32, 0.4);
    const auto b = oracle::RandomMask(rng, 32, 32, 0.6);
    ASSERT_EQ(rvos::Area(a), oracle::Count(a));
    ASSERT_EQ(rvos::IntersectionArea(a, b), oracle::CountBoth(a, b, true));
    ASSERT_EQ(rvos::UnionArea(a, b), oracle::CountBoth(a, b, false));
  }
}

TEST(Dilate, ZeroRadiusIsIdentity) {
  std::mt19937 rng(3);
  const auto m = oracle::RandomMask(rng, 9, 7, 0.3);
  EXPECT_EQ(rvos::Dilate(m, 0.0), m);
}

TEST(Dilate, UnitDiskIsPlus) {
  const auto center = oracle::Rect(5, 5, 2, 2, 3, 3);
  const BinaryMask plus(5, 5, {0, 0, 0, 0, 0,  //
                               0, 0, 1, 0, 0,  //
                               0, 1, 1, 1, 0,  //
                               0, 0, 1, 0, 0,  //
                               0, 0, 0, 0, 0});
  EXPECT_EQ(rvos::Dilate(center, 1.0), plus);
}

TEST(Dilate, MatchesNaiveOracle) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> dim(1, 24);
  const double radii[] = {0.0, 1.0, 1.5, 2.0, 2.5, 3.0};
  for (int i = 0; i < 150; ++i) {
    const auto m = oracle::RandomMask(rng, dim(rng), dim(rng), 0.08);
    for (double r : radii) ASSERT_EQ(rvos::Dilate(m, r), oracle::Dilate(m, r)) << "r=" << r;
  }
}

TEST(Dilate, RejectsNegativeRadius) {
  EXPECT_EQ(CodeOf([] { rvos::Dilate(BinaryMask(2, 2), -1.0); }), ErrorCode::kInvalidArgument);
}

TEST(Boundary, TrivialCases) {
  EXPECT_EQ(rvos::Boundary(BinaryMask(4, 4)), BinaryMask(4, 4));
  const BinaryMask full(3, 3, std::vector<std::uint8_t>(9, 1));
  EXPECT_EQ(rvos::Boundary(full), BinaryMask(3, 3, {1, 1, 1, 1, 0, 1, 1, 1, 1}));
}

TEST(Boundary, MatchesNeighbourScan) {
  std::mt19937 rng(13);
  std::uniform_int_distribution<int> dim(1, 40);
  for (int i = 0; i < 200; ++i) {
    const auto m = oracle::RandomBlobs(rng, dim(rng), dim(rng), 3);
    ASSERT_EQ(rvos::Boundary(m), oracle::Boundary(m));
  }
}

TEST(MaskSequence, RequiresConsistentFrames) {
  EXPECT_EQ(CodeOf([] { rvos::MaskSequence("v", "e", {}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { rvos::MaskSequence("v", "e", {BinaryMask(2, 2), BinaryMask(3, 2)}); }),
            ErrorCode::kDimensionMismatch);
}

}  // namespace
