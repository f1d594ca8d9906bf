#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rvos {

struct ArchiveEntry {
  std::string name;
  std::vector<std::uint8_t> data;
};

/// Zip container with stored (uncompressed) members. Entries are written in
/// name order with a fixed 1980-01-01 timestamp, so equal inputs produce
/// byte-identical archives.
std::vector<std::uint8_t> BuildZip(std::vector<ArchiveEntry> entries);

/// Reads stored or deflated members and verifies their CRC-32. Throws
/// ParseError on anything else.
std::vector<ArchiveEntry> ReadZip(std::span<const std::uint8_t> bytes, const std::string& origin);

}  // namespace rvos
