// Test double for an external propagation adapter.
//
//   fake_adapter identity        every frame gets the key mask
//   fake_adapter shift DX DY     frame at distance d from the key is shifted by d*(DX, DY)
//   fake_adapter error           answers every request with an error
//   fake_adapter garbage         answers every request with a non-JSON line
//   fake_adapter short           omits the last frame of every run
//   fake_adapter exit            exits after the handshake
//   fake_adapter fail-video ID   errors for video ID, identity otherwise
//
// The environment variable RVOSFUSE_SEED, when set, is echoed into the adapter
// name so tests can check it was passed through.

#include <cstdlib>
#include <iostream>
#include <string>

#include "rvosfuse/error.hpp"
#include "rvosfuse/protocol.hpp"

namespace {

using rvos::BinaryMask;
namespace protocol = rvos::protocol;

BinaryMask Shift(const BinaryMask& m, int dx, int dy) {
  std::vector<std::uint8_t> out(m.size(), 0);
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      const int sx = x - dx;
      const int sy = y - dy;
      if (sx >= 0 && sy >= 0 && sx < m.width() && sy < m.height() && m.at(sx, sy)) {
        out[static_cast<std::size_t>(y) * m.width() + x] = 1;
      }
    }
  }
  return BinaryMask(m.width(), m.height(), std::move(out));
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "identity";
  int dx = 0;
  int dy = 0;
  std::string fail_video;
  if (mode == "shift" && argc > 3) {
    dx = std::atoi(argv[2]);
    dy = std::atoi(argv[3]);
  }
  if (mode == "fail-video" && argc > 2) fail_video = argv[2];

  std::string name = "fake-" + mode;
  if (const char* seed = std::getenv("RVOSFUSE_SEED")) name += "-seed" + std::string(seed);
  std::cout << protocol::EncodeHello({protocol::kVersion, name}) << '\n' << std::flush;
  if (mode == "exit") return 0;

  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    protocol::Request request;
    try {
      request = protocol::ParseRequest(line);
    } catch (const rvos::Error& e) {
      std::cout << protocol::EncodeError(e.what()) << '\n' << std::flush;
      continue;
    }
    if (mode == "error" || request.video_id == fail_video) {
      std::cout << protocol::EncodeError("refusing " + request.video_id) << '\n' << std::flush;
      continue;
    }
    if (mode == "garbage") {
      std::cout << "<<not a message>>\n" << std::flush;
      continue;
    }
    const BinaryMask key = rvos::RleDecode(request.key_mask);
    std::size_t count = request.frame_paths.size();
    if (mode == "short" && count > 0) --count;
    for (std::size_t d = 0; d < count; ++d) {
      const std::size_t index = request.direction == rvos::Direction::kForward
                                    ? request.key_index + d
                                    : request.key_index - d;
      const int k = static_cast<int>(d);
      const BinaryMask mask = mode == "shift" ? Shift(key, k * dx, k * dy) : key;
      std::cout << protocol::EncodeMaskFrame({index, rvos::RleEncode(mask)}) << '\n';
    }
    std::cout << protocol::EncodeDone() << '\n' << std::flush;
  }
  return 0;
}
