#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rvos {

/// One frame's foreground/background bitmap, stored row-major with one byte
/// per pixel (0 = background, 1 = foreground).
class BinaryMask {
 public:
  /// All-background mask. Throws InvalidArgument unless width, height >= 1.
  BinaryMask(int width, int height);
  /// Takes ownership of row-major flags. Values must be 0 or 1 and the
  /// length must equal width * height.
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool at(int x, int y) const { return bits_[Index(x, y)] != 0; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  bool SameShape(const BinaryMask& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t Index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

/// Column-major run lengths starting with a (possibly empty) background run.
struct RleMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> counts;

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

/// Checks sum(counts) == width * height and that only the first run is zero.
/// Throws MalformedRle on violation.
void ValidateRle(const RleMask& rle);

RleMask RleEncode(const BinaryMask& mask);
BinaryMask RleDecode(const RleMask& rle);

std::uint64_t Area(const BinaryMask& a);
std::uint64_t IntersectionArea(const BinaryMask& a, const BinaryMask& b);
std::uint64_t UnionArea(const BinaryMask& a, const BinaryMask& b);

/// Dilation with a Euclidean disk: an output pixel is foreground iff some
/// input foreground pixel lies at integer offset (dx, dy) with
/// dx^2 + dy^2 <= radius^2.
BinaryMask Dilate(const BinaryMask& mask, double radius);

/// Foreground pixels with at least one background 4-neighbour. Pixels
/// outside the image count as background.
BinaryMask Boundary(const BinaryMask& mask);

struct VideoRef {
  std::string video_id;
  int width = 0;
  int height = 0;
  std::vector<std::string> frame_names;

  std::size_t frame_count() const noexcept { return frame_names.size(); }

  friend bool operator==(const VideoRef&, const VideoRef&) = default;
};

struct ExpressionRef {
  std::string expression_id;
  std::string video_id;
  std::string text;

  friend bool operator==(const ExpressionRef&, const ExpressionRef&) = default;
};

/// Ordered mask track for one (video, expression) pair.
class MaskSequence {
 public:
  /// Throws InvalidArgument for an empty frame list and DimensionMismatch
  /// when frames disagree on shape.
  MaskSequence(std::string video_id, std::string expression_id,
               std::vector<BinaryMask> frames);

  const std::string& video_id() const noexcept { return video_id_; }
  const std::string& expression_id() const noexcept { return expression_id_; }
  const std::vector<BinaryMask>& frames() const noexcept { return frames_; }
  const BinaryMask& frame(std::size_t t) const { return frames_.at(t); }
  std::size_t frame_count() const noexcept { return frames_.size(); }
  int width() const noexcept { return frames_.front().width(); }
  int height() const noexcept { return frames_.front().height(); }

  friend bool operator==(const MaskSequence&, const MaskSequence&) = default;

 private:
  std::string video_id_;
  std::string expression_id_;
  std::vector<BinaryMask> frames_;
};

}  // namespace rvos
