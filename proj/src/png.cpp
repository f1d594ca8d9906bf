#include "rvosfuse/png.hpp"

#include <png.h>

#include <csetjmp>
#include <cstring>

#include "rvosfuse/error.hpp"

namespace rvos {
namespace {

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void ReadFromSpan(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->bytes.size()) png_error(png, "truncated PNG");
  std::memcpy(out, cursor->bytes.data() + cursor->offset, length);
  cursor->offset += length;
}

void WriteToVector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void NoFlush(png_structp) {}

void OnError(png_structp png, png_const_charp message) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  *text = message;
  png_longjmp(png, 1);
}

void OnWarning(png_structp, png_const_charp) {}

}  // namespace

std::vector<std::uint8_t> EncodePng(const BinaryMask& mask) {
  std::vector<std::uint8_t> out;
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, OnError, OnWarning);
  if (png == nullptr) throw Error(ErrorCode::kInvalidArgument, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kInvalidArgument, "PNG encoding failed: " + message);
  }
  png_set_write_fn(png, &out, WriteToVector, NoFlush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(mask.width()),
               static_cast<png_uint_32>(mask.height()), 8, PNG_COLOR_TYPE_PALETTE,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_color palette[2] = {{0, 0, 0}, {128, 0, 0}};
  png_set_PLTE(png, info, palette, 2);
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_write_info(png, info);
  const auto bits = mask.bits();
  for (int y = 0; y < mask.height(); ++y) {
    png_write_row(png, const_cast<png_bytep>(bits.data() + static_cast<std::size_t>(y) * mask.width()));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

BinaryMask DecodePng(std::span<const std::uint8_t> bytes, const std::string& origin) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::kParseError, origin + ": not a PNG file");
  }
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, OnError, OnWarning);
  if (png == nullptr) throw Error(ErrorCode::kParseError, origin + ": png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{bytes, 0};
  std::vector<std::uint8_t> pixels;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  // Declared before setjmp so a longjmp never skips their destructors.
  std::string reject;
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kParseError, origin + ": " + message);
  }
  png_set_read_fn(png, &cursor, ReadFromSpan);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if ((color != PNG_COLOR_TYPE_PALETTE && color != PNG_COLOR_TYPE_GRAY) || depth > 8 ||
      png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) {
    reject = "expected a non-interlaced 8-bit palette or grayscale PNG";
  } else {
    if (depth < 8) png_set_packing(png);
    png_read_update_info(png, info);
    pixels.resize(static_cast<std::size_t>(width) * height);
    for (png_uint_32 y = 0; y < height; ++y) {
      png_read_row(png, pixels.data() + static_cast<std::size_t>(y) * width, nullptr);
    }
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!reject.empty()) throw Error(ErrorCode::kParseError, origin + ": " + reject);
  for (const std::uint8_t v : pixels) {
    if (v > 1) {
      throw Error(ErrorCode::kParseError,
                  origin + ": pixel value " + std::to_string(v) + " is neither 0 nor 1");
    }
  }
  return BinaryMask(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

}  // namespace rvos
