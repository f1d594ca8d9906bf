#pragma once

// Newline-delimited JSON spoken between the orchestrator and an adapter
// process over the adapter's stdin/stdout.
//
//   adapter -> {"type":"hello","protocol":1,"name":...}
//   client  -> {"type":"propagate","video_id":...,"frame_paths":[...],
//               "key_index":k,"key_mask":{RLE},"direction":"forward"|"backward"}
//   adapter -> {"type":"mask","frame_index":i,"mask":{RLE}}  (one per frame)
//   adapter -> {"type":"done"}
//   adapter -> {"type":"error","message":...}  (aborts the request)

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rvosfuse/mask.hpp"
#include "rvosfuse/propagation.hpp"

namespace rvos::protocol {

inline constexpr int kVersion = 1;

struct Hello {
  int protocol = 0;
  std::string name;
};

struct MaskFrame {
  std::size_t frame_index = 0;
  RleMask mask;
};

struct Done {};

struct ErrorReply {
  std::string message;
};

using AdapterMessage = std::variant<Hello, MaskFrame, Done, ErrorReply>;

struct Request {
  std::string video_id;
  std::vector<std::string> frame_paths;
  std::size_t key_index = 0;
  RleMask key_mask;
  Direction direction = Direction::kForward;
};

// Each encoder returns one line without the trailing newline.
std::string EncodeHello(const Hello& hello);
std::string EncodeMaskFrame(const MaskFrame& frame);
std::string EncodeDone();
std::string EncodeError(std::string_view message);
std::string EncodeRequest(const Request& request);

/// Throws ParseError for anything that is not a well-formed adapter message.
AdapterMessage ParseAdapterMessage(std::string_view line);
/// Throws ParseError for anything that is not a well-formed request.
Request ParseRequest(std::string_view line);

}  // namespace rvos::protocol
