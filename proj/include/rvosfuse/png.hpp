#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rvosfuse/mask.hpp"

namespace rvos {

/// 8-bit palette PNG, index 0 background and index 1 foreground. Output
/// bytes depend only on the mask (no time or text chunks).
std::vector<std::uint8_t> EncodePng(const BinaryMask& mask);

/// Accepts 8-bit palette or grayscale PNGs whose pixel values are all 0 or
/// 1. Anything else throws ParseError mentioning `origin`.
BinaryMask DecodePng(std::span<const std::uint8_t> bytes, const std::string& origin);

}  // namespace rvos
