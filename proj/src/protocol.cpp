#include "rvosfuse/protocol.hpp"

#include <string>

#include "rvosfuse/error.hpp"
#include "rvosfuse/rle_record.hpp"

namespace rvos::protocol {
namespace {

Json ParseLine(std::string_view line) {
  Json doc = Json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::kParseError, "invalid JSON line: " + std::string(line.substr(0, 200)));
  }
  if (!doc.is_object()) throw Error(ErrorCode::kParseError, "protocol message is not an object");
  return doc;
}

const Json& Field(const Json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end()) {
    throw Error(ErrorCode::kParseError, std::string("protocol message lacks \"") + key + "\"");
  }
  return *it;
}

std::string StringField(const Json& doc, const char* key) {
  const Json& v = Field(doc, key);
  if (!v.is_string()) {
    throw Error(ErrorCode::kParseError, std::string("\"") + key + "\" must be a string");
  }
  return v.get<std::string>();
}

std::size_t IndexField(const Json& doc, const char* key) {
  const Json& v = Field(doc, key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw Error(ErrorCode::kParseError,
                std::string("\"") + key + "\" must be a non-negative integer");
  }
  return static_cast<std::size_t>(v.get<std::int64_t>());
}

}  // namespace

std::string EncodeHello(const Hello& hello) {
  Json doc;
  doc["type"] = "hello";
  doc["protocol"] = hello.protocol;
  doc["name"] = hello.name;
  return doc.dump();
}

std::string EncodeMaskFrame(const MaskFrame& frame) {
  Json doc;
  doc["type"] = "mask";
  doc["frame_index"] = frame.frame_index;
  doc["mask"] = RleToJson(frame.mask);
  return doc.dump();
}

std::string EncodeDone() { return R"({"type":"done"})"; }

std::string EncodeError(std::string_view message) {
  Json doc;
  doc["type"] = "error";
  doc["message"] = std::string(message);
  return doc.dump();
}

std::string EncodeRequest(const Request& request) {
  Json doc;
  doc["type"] = "propagate";
  doc["video_id"] = request.video_id;
  doc["frame_paths"] = request.frame_paths;
  doc["key_index"] = request.key_index;
  doc["key_mask"] = RleToJson(request.key_mask);
  doc["direction"] = std::string(ToString(request.direction));
  return doc.dump();
}

AdapterMessage ParseAdapterMessage(std::string_view line) {
  const Json doc = ParseLine(line);
  const std::string type = StringField(doc, "type");
  if (type == "hello") {
    const Json& version = Field(doc, "protocol");
    if (!version.is_number_integer()) {
      throw Error(ErrorCode::kParseError, "\"protocol\" must be an integer");
    }
    return Hello{version.get<int>(), StringField(doc, "name")};
  }
  if (type == "mask") {
    return MaskFrame{IndexField(doc, "frame_index"), RleFromJson(Field(doc, "mask"))};
  }
  if (type == "done") return Done{};
  if (type == "error") return ErrorReply{StringField(doc, "message")};
  throw Error(ErrorCode::kParseError, "unknown message type \"" + type + "\"");
}

Request ParseRequest(std::string_view line) {
  const Json doc = ParseLine(line);
  if (StringField(doc, "type") != "propagate") {
    throw Error(ErrorCode::kParseError, "expected a propagate request");
  }
  Request request;
  request.video_id = StringField(doc, "video_id");
  const Json& paths = Field(doc, "frame_paths");
  if (!paths.is_array()) throw Error(ErrorCode::kParseError, "\"frame_paths\" must be an array");
  for (const Json& p : paths) {
    if (!p.is_string()) throw Error(ErrorCode::kParseError, "frame path must be a string");
    request.frame_paths.push_back(p.get<std::string>());
  }
  request.key_index = IndexField(doc, "key_index");
  request.key_mask = RleFromJson(Field(doc, "key_mask"));
  const std::string direction = StringField(doc, "direction");
  if (direction == "forward") {
    request.direction = Direction::kForward;
  } else if (direction == "backward") {
    request.direction = Direction::kBackward;
  } else {
    throw Error(ErrorCode::kParseError, "unknown direction \"" + direction + "\"");
  }
  return request;
}

}  // namespace rvos::protocol
