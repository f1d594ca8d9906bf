#pragma once

#include <json.hpp>

#include "rvosfuse/mask.hpp"

namespace rvos {

/// Key order is preserved so written documents read in schema order.
using Json = nlohmann::ordered_json;

/// {"size": [height, width], "counts": [...]}
Json RleToJson(const RleMask& rle);

/// Parses and validates an interchange record. Throws ParseError for a
/// structurally wrong record and MalformedRle when the runs are invalid.
RleMask RleFromJson(const Json& record);

inline Json MaskToJson(const BinaryMask& mask) { return RleToJson(RleEncode(mask)); }
inline BinaryMask MaskFromJson(const Json& record) { return RleDecode(RleFromJson(record)); }

}  // namespace rvos
