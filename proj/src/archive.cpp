#include "rvosfuse/archive.hpp"

#include <zlib.h>

#include <algorithm>
#include <limits>

#include "rvosfuse/error.hpp"

namespace rvos {
namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kVersion = 20;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01
constexpr std::uint16_t kDosTime = 0;

void Put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void Put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  Put16(out, static_cast<std::uint16_t>(v));
  Put16(out, static_cast<std::uint16_t>(v >> 16));
}

std::uint32_t Crc32(std::span<const std::uint8_t> data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < data.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - done, 1u << 30));
    crc = crc32(crc, data.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, const std::string& origin)
      : bytes_(bytes), origin_(origin) {}

  [[noreturn]] void Fail(const std::string& what) const {
    throw Error(ErrorCode::kParseError, origin_ + ": " + what);
  }

  void Need(std::size_t offset, std::size_t n) const {
    if (offset > bytes_.size() || n > bytes_.size() - offset) Fail("truncated zip archive");
  }
  std::uint16_t U16(std::size_t offset) const {
    Need(offset, 2);
    return static_cast<std::uint16_t>(bytes_[offset] | (bytes_[offset + 1] << 8));
  }
  std::uint32_t U32(std::size_t offset) const {
    return static_cast<std::uint32_t>(U16(offset)) |
           (static_cast<std::uint32_t>(U16(offset + 2)) << 16);
  }
  std::span<const std::uint8_t> Slice(std::size_t offset, std::size_t n) const {
    Need(offset, n);
    return bytes_.subspan(offset, n);
  }
  std::size_t size() const { return bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  const std::string& origin_;
};

std::vector<std::uint8_t> Inflate(const Reader& in, std::span<const std::uint8_t> packed,
                                  std::size_t expected) {
  std::vector<std::uint8_t> out(expected);
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) in.Fail("inflateInit2 failed");
  zs.next_in = const_cast<Bytef*>(packed.data());
  zs.avail_in = static_cast<uInt>(packed.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const auto produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) in.Fail("corrupt deflate stream");
  return out;
}

}  // namespace

std::vector<std::uint8_t> BuildZip(std::vector<ArchiveEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const ArchiveEntry& a, const ArchiveEntry& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].name == entries[i - 1].name) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate archive entry " + entries[i].name);
    }
  }
  constexpr auto kLimit = std::numeric_limits<std::uint32_t>::max();
  if (entries.size() >= std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "too many archive entries for a non-zip64 archive");
  }

  std::vector<std::uint8_t> out;
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> crcs;
  for (const ArchiveEntry& e : entries) {
    if (e.name.size() > 0xffff || e.data.size() >= kLimit || out.size() >= kLimit) {
      throw Error(ErrorCode::kInvalidArgument, "archive exceeds non-zip64 limits");
    }
    const std::uint32_t crc = Crc32(e.data);
    offsets.push_back(static_cast<std::uint32_t>(out.size()));
    crcs.push_back(crc);
    Put32(out, kLocalSig);
    Put16(out, kVersion);
    Put16(out, 0);  // flags
    Put16(out, 0);  // stored
    Put16(out, kDosTime);
    Put16(out, kDosDate);
    Put32(out, crc);
    Put32(out, static_cast<std::uint32_t>(e.data.size()));
    Put32(out, static_cast<std::uint32_t>(e.data.size()));
    Put16(out, static_cast<std::uint16_t>(e.name.size()));
    Put16(out, 0);  // extra
    out.insert(out.end(), e.name.begin(), e.name.end());
    out.insert(out.end(), e.data.begin(), e.data.end());
  }
  const auto central_start = static_cast<std::uint32_t>(out.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ArchiveEntry& e = entries[i];
    Put32(out, kCentralSig);
    Put16(out, kVersion);  // made by
    Put16(out, kVersion);  // needed
    Put16(out, 0);
    Put16(out, 0);
    Put16(out, kDosTime);
    Put16(out, kDosDate);
    Put32(out, crcs[i]);
    Put32(out, static_cast<std::uint32_t>(e.data.size()));
    Put32(out, static_cast<std::uint32_t>(e.data.size()));
    Put16(out, static_cast<std::uint16_t>(e.name.size()));
    Put16(out, 0);  // extra
    Put16(out, 0);  // comment
    Put16(out, 0);  // disk
    Put16(out, 0);  // internal attrs
    Put32(out, 0);  // external attrs
    Put32(out, offsets[i]);
    out.insert(out.end(), e.name.begin(), e.name.end());
  }
  const auto central_size = static_cast<std::uint32_t>(out.size() - central_start);
  Put32(out, kEndSig);
  Put16(out, 0);
  Put16(out, 0);
  Put16(out, static_cast<std::uint16_t>(entries.size()));
  Put16(out, static_cast<std::uint16_t>(entries.size()));
  Put32(out, central_size);
  Put32(out, central_start);
  Put16(out, 0);
  return out;
}

std::vector<ArchiveEntry> ReadZip(std::span<const std::uint8_t> bytes, const std::string& origin) {
  const Reader in(bytes, origin);
  if (in.size() < 22) in.Fail("too small to be a zip archive");
  std::size_t end = in.size() - 22;
  const std::size_t stop = in.size() > 22 + 0xffff ? in.size() - 22 - 0xffff : 0;
  while (in.U32(end) != kEndSig) {
    if (end == stop) in.Fail("no end-of-central-directory record");
    --end;
  }
  const std::uint16_t count = in.U16(end + 10);
  std::size_t pos = in.U32(end + 16);

  std::vector<ArchiveEntry> entries;
  entries.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    if (in.U32(pos) != kCentralSig) in.Fail("bad central directory entry");
    const std::uint16_t flags = in.U16(pos + 8);
    const std::uint16_t method = in.U16(pos + 10);
    const std::uint32_t crc = in.U32(pos + 16);
    const std::uint32_t packed_size = in.U32(pos + 20);
    const std::uint32_t size = in.U32(pos + 24);
    const std::uint16_t name_len = in.U16(pos + 28);
    const std::uint16_t extra_len = in.U16(pos + 30);
    const std::uint16_t comment_len = in.U16(pos + 32);
    const std::uint32_t local = in.U32(pos + 42);
    const auto name_bytes = in.Slice(pos + 46, name_len);
    std::string name(name_bytes.begin(), name_bytes.end());
    pos += 46u + name_len + extra_len + comment_len;

    if ((flags & 0x1) != 0) in.Fail(name + ": encrypted entries are not supported");
    if (in.U32(local) != kLocalSig) in.Fail(name + ": bad local header");
    const std::size_t data_at = local + 30u + in.U16(local + 26) + in.U16(local + 28);
    const auto packed = in.Slice(data_at, packed_size);
    std::vector<std::uint8_t> data;
    if (method == 0) {
      if (packed_size != size) in.Fail(name + ": stored size mismatch");
      data.assign(packed.begin(), packed.end());
    } else if (method == 8) {
      data = Inflate(in, packed, size);
    } else {
      in.Fail(name + ": unsupported compression method " + std::to_string(method));
    }
    if (Crc32(data) != crc) in.Fail(name + ": CRC mismatch");
    if (!name.empty() && name.back() == '/') continue;  // directory
    entries.push_back({std::move(name), std::move(data)});
  }
  return entries;
}

}  // namespace rvos
