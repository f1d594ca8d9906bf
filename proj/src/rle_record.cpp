#include "rvosfuse/rle_record.hpp"

#include <limits>

#include "rvosfuse/error.hpp"

namespace rvos {

Json RleToJson(const RleMask& rle) {
  Json record = Json::object();
  record["size"] = {rle.height, rle.width};
  record["counts"] = rle.counts;
  return record;
}

RleMask RleFromJson(const Json& record) {
  if (!record.is_object()) throw Error(ErrorCode::kParseError, "RLE record is not an object");
  const auto size = record.find("size");
  const auto counts = record.find("counts");
  if (size == record.end() || counts == record.end()) {
    throw Error(ErrorCode::kParseError, "RLE record needs \"size\" and \"counts\"");
  }
  if (!size->is_array() || size->size() != 2 || !(*size)[0].is_number_integer() ||
      !(*size)[1].is_number_integer()) {
    throw Error(ErrorCode::kParseError, "RLE \"size\" must be [height, width]");
  }
  if (!counts->is_array()) throw Error(ErrorCode::kParseError, "RLE \"counts\" must be an array");

  RleMask rle;
  const auto h = (*size)[0].get<std::int64_t>();
  const auto w = (*size)[1].get<std::int64_t>();
  constexpr auto kMaxSide = std::numeric_limits<int>::max();
  if (h < 1 || w < 1 || h > kMaxSide || w > kMaxSide) {
    throw Error(ErrorCode::kMalformedRle, "RLE size must be positive");
  }
  rle.height = static_cast<int>(h);
  rle.width = static_cast<int>(w);
  rle.counts.reserve(counts->size());
  for (const auto& c : *counts) {
    if (!c.is_number_integer()) throw Error(ErrorCode::kParseError, "RLE count is not an integer");
    const auto v = c.get<std::int64_t>();
    if (v < 0 || v > std::numeric_limits<std::uint32_t>::max()) {
      throw Error(ErrorCode::kMalformedRle, "RLE count " + std::to_string(v) + " out of range");
    }
    rle.counts.push_back(static_cast<std::uint32_t>(v));
  }
  ValidateRle(rle);
  return rle;
}

}  // namespace rvos
