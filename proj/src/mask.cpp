#include "rvosfuse/mask.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "rvosfuse/error.hpp"

namespace rvos {
namespace {

void RequireShape(int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "mask dimensions must be positive, got " +
                    std::to_string(width) + "x" + std::to_string(height));
  }
}

void RequireSameShape(const BinaryMask& a, const BinaryMask& b) {
  if (!a.SameShape(b)) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                    " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()));
  }
}

// Largest dx >= 0 with dx^2 + dy^2 <= r^2, or -1 when |dy| > r.
int HalfWidth(int dy, double radius) {
  const double r2 = radius * radius;
  const double rest = r2 - static_cast<double>(dy) * dy;
  if (rest < 0.0) return -1;
  int dx = static_cast<int>(std::floor(std::sqrt(rest)));
  while (static_cast<double>(dx + 1) * (dx + 1) <= rest) ++dx;
  while (dx > 0 && static_cast<double>(dx) * dx > rest) --dx;
  return dx;
}

}  // namespace

BinaryMask::BinaryMask(int width, int height)
    : width_(width), height_(height) {
  RequireShape(width, height);
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  RequireShape(width, height);
  const auto expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bits_.size() != expected) {
    throw Error(ErrorCode::kDimensionMismatch,
                "mask has " + std::to_string(bits_.size()) + " flags, expected " +
                    std::to_string(expected));
  }
  if (std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t v) { return v > 1; })) {
    throw Error(ErrorCode::kInvalidArgument, "mask flags must be 0 or 1");
  }
}

void ValidateRle(const RleMask& rle) {
  if (rle.width < 1 || rle.height < 1) {
    throw Error(ErrorCode::kMalformedRle, "non-positive size");
  }
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < rle.counts.size(); ++i) {
    if (i > 0 && rle.counts[i] == 0) {
      throw Error(ErrorCode::kMalformedRle,
                  "zero-length run at position " + std::to_string(i));
    }
    total += rle.counts[i];
  }
  const auto expected = static_cast<std::uint64_t>(rle.width) * static_cast<std::uint64_t>(rle.height);
  if (total != expected) {
    throw Error(ErrorCode::kMalformedRle, "run lengths sum to " + std::to_string(total) +
                                              ", expected " + std::to_string(expected));
  }
}

RleMask RleEncode(const BinaryMask& mask) {
  RleMask rle{mask.width(), mask.height(), {}};
  const auto bits = mask.bits();
  const auto w = static_cast<std::size_t>(mask.width());
  const auto h = static_cast<std::size_t>(mask.height());
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t y = 0; y < h; ++y) {
      const std::uint8_t v = bits[y * w + x];
      if (v != current) {
        rle.counts.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

BinaryMask RleDecode(const RleMask& rle) {
  ValidateRle(rle);
  const auto w = static_cast<std::size_t>(rle.width);
  const auto h = static_cast<std::size_t>(rle.height);
  std::vector<std::uint8_t> bits(w * h, 0);
  std::size_t pos = 0;  // column-major position
  std::uint8_t value = 0;
  for (const std::uint32_t count : rle.counts) {
    if (value != 0) {
      for (std::size_t k = pos; k < pos + count; ++k) {
        bits[(k % h) * w + k / h] = 1;
      }
    }
    pos += count;
    value ^= 1;
  }
  return BinaryMask(rle.width, rle.height, std::move(bits));
}

std::uint64_t Area(const BinaryMask& a) {
  std::uint64_t n = 0;
  for (const std::uint8_t v : a.bits()) n += v;
  return n;
}

std::uint64_t IntersectionArea(const BinaryMask& a, const BinaryMask& b) {
  RequireSameShape(a, b);
  const auto pa = a.bits();
  const auto pb = b.bits();
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) n += pa[i] & pb[i];
  return n;
}

std::uint64_t UnionArea(const BinaryMask& a, const BinaryMask& b) {
  RequireSameShape(a, b);
  const auto pa = a.bits();
  const auto pb = b.bits();
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) n += pa[i] | pb[i];
  return n;
}

BinaryMask Dilate(const BinaryMask& mask, double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorCode::kInvalidArgument, "dilation radius must be finite and >= 0");
  }
  const int w = mask.width();
  const int h = mask.height();
  const auto src = mask.bits();

  // Foreground runs per row as half-open [begin, end).
  std::vector<std::vector<std::pair<int, int>>> runs(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = src.data() + static_cast<std::size_t>(y) * w;
    int x = 0;
    while (x < w) {
      if (row[x] == 0) {
        ++x;
        continue;
      }
      const int begin = x;
      while (x < w && row[x] != 0) ++x;
      runs[static_cast<std::size_t>(y)].emplace_back(begin, x);
    }
  }

  const int reach = static_cast<int>(std::floor(radius));
  std::vector<int> half(static_cast<std::size_t>(2 * reach + 1));
  for (int dy = -reach; dy <= reach; ++dy) half[static_cast<std::size_t>(dy + reach)] = HalfWidth(dy, radius);

  std::vector<std::uint8_t> out(src.size(), 0);
  std::vector<int> delta(static_cast<std::size_t>(w) + 1);
  for (int y = 0; y < h; ++y) {
    std::fill(delta.begin(), delta.end(), 0);
    bool any = false;
    for (int dy = -reach; dy <= reach; ++dy) {
      const int sy = y + dy;
      const int hw = half[static_cast<std::size_t>(dy + reach)];
      if (sy < 0 || sy >= h || hw < 0) continue;
      for (const auto& [begin, end] : runs[static_cast<std::size_t>(sy)]) {
        const int lo = std::max(0, begin - hw);
        const int hi = std::min(w, end + hw);
        ++delta[static_cast<std::size_t>(lo)];
        --delta[static_cast<std::size_t>(hi)];
        any = true;
      }
    }
    if (!any) continue;
    std::uint8_t* row = out.data() + static_cast<std::size_t>(y) * w;
    int cover = 0;
    for (int x = 0; x < w; ++x) {
      cover += delta[static_cast<std::size_t>(x)];
      row[x] = cover > 0 ? 1 : 0;
    }
  }
  return BinaryMask(w, h, std::move(out));
}

BinaryMask Boundary(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  const auto src = mask.bits();
  std::vector<std::uint8_t> out(src.size(), 0);
  auto fg = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h &&
           src[static_cast<std::size_t>(y) * w + x] != 0;
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!fg(x, y)) continue;
      if (!fg(x - 1, y) || !fg(x + 1, y) || !fg(x, y - 1) || !fg(x, y + 1)) {
        out[static_cast<std::size_t>(y) * w + x] = 1;
      }
    }
  }
  return BinaryMask(w, h, std::move(out));
}

MaskSequence::MaskSequence(std::string video_id, std::string expression_id,
                           std::vector<BinaryMask> frames)
    : video_id_(std::move(video_id)),
      expression_id_(std::move(expression_id)),
      frames_(std::move(frames)) {
  if (frames_.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "mask sequence " + video_id_ + "/" + expression_id_ + " has no frames");
  }
  for (std::size_t t = 1; t < frames_.size(); ++t) {
    if (!frames_[t].SameShape(frames_.front())) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "frame " + std::to_string(t) + " of " + video_id_ + "/" + expression_id_ +
                      " differs in shape from frame 0");
    }
  }
}

}  // namespace rvos
