#include "rvosfuse/adapter.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>
#include <variant>

#include "rvosfuse/error.hpp"
#include "rvosfuse/protocol.hpp"

extern char** environ;

namespace rvos {
namespace {

void IgnoreSigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

[[noreturn]] void Fail(const std::string& what) {
  throw Error(ErrorCode::kPropagatorFailure, what);
}

std::string Errno(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

}  // namespace

ChildProcess::ChildProcess(const std::string& command,
                           const std::vector<std::string>& environment) {
  IgnoreSigpipe();
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) Fail(Errno("pipe"));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    Fail(Errno("pipe"));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<std::string> env_strings;
  for (char** e = environ; *e != nullptr; ++e) {
    const std::string_view entry(*e);
    const auto name = entry.substr(0, entry.find('=') + 1);
    const bool overridden = std::any_of(environment.begin(), environment.end(), [&](const std::string& x) {
      return x.compare(0, name.size(), name) == 0;
    });
    if (!overridden) env_strings.emplace_back(entry);
  }
  env_strings.insert(env_strings.end(), environment.begin(), environment.end());
  std::vector<char*> envp;
  for (auto& e : env_strings) envp.push_back(e.data());
  envp.push_back(nullptr);

  std::string shell_command = command;
  char sh[] = "/bin/sh";
  char dash_c[] = "-c";
  char* argv[] = {sh, dash_c, shell_command.data(), nullptr};
  const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, nullptr, argv, envp.data());
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    Fail("cannot start adapter \"" + command + "\": " + std::strerror(rc));
  }
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

ChildProcess::~ChildProcess() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ <= 0) return;
  int status = 0;
  for (int i = 0; i < 200; ++i) {
    if (::waitpid(pid_, &status, WNOHANG) != 0) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ::kill(pid_, SIGKILL);
  ::waitpid(pid_, &status, 0);
}

void ChildProcess::WriteLine(std::string_view line) {
  std::string data(line);
  data.push_back('\n');
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + sent, data.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      Fail(Errno("write to adapter"));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> ChildProcess::ReadLine(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (eof_) {
      if (buffer_.empty()) return std::nullopt;
      std::string line;
      line.swap(buffer_);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) Fail("adapter timed out");
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      Fail(Errno("poll adapter"));
    }
    if (ready == 0) continue;
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      Fail(Errno("read from adapter"));
    }
    if (n == 0) {
      eof_ = true;
    } else {
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }
}

AdapterPropagator::AdapterPropagator(const std::string& command, FramePathResolver resolver,
                                     AdapterOptions options)
    : process_(command, options.environment), resolver_(std::move(resolver)), options_(options) {
  const auto line = process_.ReadLine(options_.timeout);
  if (!line) Fail("adapter \"" + command + "\" exited before its handshake");
  protocol::AdapterMessage message;
  try {
    message = protocol::ParseAdapterMessage(*line);
  } catch (const Error& e) {
    Fail("bad handshake from \"" + command + "\": " + e.what());
  }
  const auto* hello = std::get_if<protocol::Hello>(&message);
  if (hello == nullptr) Fail("adapter \"" + command + "\" did not start with a hello message");
  if (hello->protocol != protocol::kVersion) {
    Fail("adapter speaks protocol " + std::to_string(hello->protocol) + ", expected " +
         std::to_string(protocol::kVersion));
  }
  name_ = hello->name;
  protocol_ = hello->protocol;
}

void AdapterPropagator::Broken(const std::string& why) {
  broken_ = true;
  Fail(name_ + ": " + why);
}

std::vector<BinaryMask> AdapterPropagator::Propagate(const PropagationRequest& request) {
  if (broken_) Fail(name_ + ": connection unusable after an earlier protocol violation");
  const auto range = request.FrameRange();
  protocol::Request wire;
  wire.video_id = request.video.video_id;
  wire.key_index = request.key_index;
  wire.key_mask = RleEncode(request.key_mask);
  wire.direction = request.direction;
  wire.frame_paths.reserve(range.size());
  for (const std::size_t t : range) wire.frame_paths.push_back(resolver_(request.video, t));

  try {
    process_.WriteLine(protocol::EncodeRequest(wire));
  } catch (const Error& e) {
    Broken(e.what());
  }

  std::vector<BinaryMask> masks;
  masks.reserve(range.size());
  for (;;) {
    std::optional<std::string> line;
    try {
      line = process_.ReadLine(options_.timeout);
    } catch (const Error& e) {
      Broken(e.what());
    }
    if (!line) Broken("adapter exited mid-request");
    protocol::AdapterMessage message;
    try {
      message = protocol::ParseAdapterMessage(*line);
    } catch (const Error& e) {
      Broken(e.what());
    }
    if (const auto* err = std::get_if<protocol::ErrorReply>(&message)) {
      Fail(name_ + " reported: " + err->message);
    }
    if (std::holds_alternative<protocol::Done>(message)) break;
    const auto* frame = std::get_if<protocol::MaskFrame>(&message);
    if (frame == nullptr) Broken("unexpected message during a request");
    if (masks.size() >= range.size()) Broken("more masks than requested frames");
    if (frame->frame_index != range[masks.size()]) {
      Broken("mask for frame " + std::to_string(frame->frame_index) + " where frame " +
             std::to_string(range[masks.size()]) + " was expected");
    }
    masks.push_back(RleDecode(frame->mask));
  }
  if (masks.size() != range.size()) {
    Broken("done after " + std::to_string(masks.size()) + " of " + std::to_string(range.size()) +
           " frames");
  }
  return masks;
}

namespace {

struct Reply {
  std::vector<protocol::MaskFrame> frames;
  std::optional<std::string> error;
  bool done = false;
};

Reply Collect(ChildProcess& child, std::chrono::milliseconds timeout) {
  Reply reply;
  for (;;) {
    const auto line = child.ReadLine(timeout);
    if (!line) throw Error(ErrorCode::kPropagatorFailure, "adapter closed its output");
    const auto message = protocol::ParseAdapterMessage(*line);
    if (const auto* err = std::get_if<protocol::ErrorReply>(&message)) {
      reply.error = err->message;
      return reply;
    }
    if (std::holds_alternative<protocol::Done>(message)) {
      reply.done = true;
      return reply;
    }
    const auto* frame = std::get_if<protocol::MaskFrame>(&message);
    if (frame == nullptr) throw Error(ErrorCode::kParseError, "hello in the middle of a request");
    reply.frames.push_back(*frame);
  }
}

BinaryMask ProbeMask(int w, int h) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(w) * h, 0);
  for (int y = 2; y < 4; ++y) {
    for (int x = 3; x < 5; ++x) bits[static_cast<std::size_t>(y) * w + x] = 1;
  }
  return BinaryMask(w, h, std::move(bits));
}

std::string CheckReply(const Reply& reply, const protocol::Request& request,
                       const std::vector<std::size_t>& expected, bool expect_identity) {
  if (reply.error) return "adapter replied with error: " + *reply.error;
  if (!reply.done) return "no done marker";
  if (reply.frames.size() != expected.size()) {
    return std::to_string(reply.frames.size()) + " masks for " + std::to_string(expected.size()) +
           " frames";
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& f = reply.frames[i];
    if (f.frame_index != expected[i]) {
      return "position " + std::to_string(i) + " carries frame " + std::to_string(f.frame_index) +
             ", expected " + std::to_string(expected[i]);
    }
    if (f.mask.width != request.key_mask.width || f.mask.height != request.key_mask.height) {
      return "mask size differs from the video";
    }
    if (expect_identity && !(f.mask == request.key_mask)) {
      return "frame " + std::to_string(f.frame_index) + " differs from the key mask";
    }
  }
  return {};
}

}  // namespace

std::vector<ConformanceCheck> RunConformance(const std::string& command, bool expect_identity,
                                             AdapterOptions options) {
  std::vector<ConformanceCheck> checks;
  auto record = [&](std::string name, std::string failure) {
    checks.push_back({std::move(name), failure.empty(), std::move(failure)});
    return checks.back().passed;
  };

  ChildProcess child(command, options.environment);
  try {
    const auto line = child.ReadLine(options.timeout);
    if (!line) {
      record("handshake", "adapter exited without a hello");
      return checks;
    }
    const auto message = protocol::ParseAdapterMessage(*line);
    const auto* hello = std::get_if<protocol::Hello>(&message);
    if (hello == nullptr) {
      record("handshake", "first message is not hello");
      return checks;
    }
    if (!record("handshake", hello->protocol != protocol::kVersion
                                 ? "protocol " + std::to_string(hello->protocol)
                                 : hello->name.empty() ? "empty adapter name" : "")) {
      return checks;
    }
  } catch (const Error& e) {
    record("handshake", e.what());
    return checks;
  }

  const int w = 8;
  const int h = 6;
  const std::size_t frames = 5;
  auto make_request = [&](std::size_t key, Direction dir) {
    protocol::Request r;
    r.video_id = "conformance";
    r.key_index = key;
    r.key_mask = RleEncode(ProbeMask(w, h));
    r.direction = dir;
    VideoRef video{"conformance", w, h, {}};
    for (std::size_t t = 0; t < frames; ++t) video.frame_names.push_back(std::to_string(t));
    PropagationRequest pr{video, key, ProbeMask(w, h), dir};
    const auto range = pr.FrameRange();
    for (const std::size_t t : range) r.frame_paths.push_back("frames/" + std::to_string(t) + ".jpg");
    return std::pair{r, range};
  };

  auto exchange = [&](const std::string& name, const protocol::Request& r,
                      const std::vector<std::size_t>& range) -> std::optional<Reply> {
    try {
      child.WriteLine(protocol::EncodeRequest(r));
      Reply reply = Collect(child, options.timeout);
      record(name, CheckReply(reply, r, range, expect_identity));
      return reply;
    } catch (const Error& e) {
      record(name, e.what());
      return std::nullopt;
    }
  };

  const auto [fwd, fwd_range] = make_request(1, Direction::kForward);
  const auto first = exchange("forward ordering and done marker", fwd, fwd_range);
  const auto [bwd, bwd_range] = make_request(3, Direction::kBackward);
  exchange("backward ordering and done marker", bwd, bwd_range);

  try {
    child.WriteLine("{this is not json");
    const Reply reply = Collect(child, options.timeout);
    record("malformed line answered with error", reply.error ? "" : "no error message");
  } catch (const Error& e) {
    record("malformed line answered with error", e.what());
  }
  try {
    child.WriteLine(R"({"type":"propagate","video_id":"x"})");
    const Reply reply = Collect(child, options.timeout);
    record("incomplete request answered with error", reply.error ? "" : "no error message");
  } catch (const Error& e) {
    record("incomplete request answered with error", e.what());
  }

  const auto again = exchange("serving continues after errors", fwd, fwd_range);
  if (first && again) {
    bool same = first->frames.size() == again->frames.size();
    for (std::size_t i = 0; same && i < first->frames.size(); ++i) {
      same = first->frames[i].frame_index == again->frames[i].frame_index &&
             first->frames[i].mask == again->frames[i].mask;
    }
    record("repeated request is deterministic", same ? "" : "outputs differ between runs");
  }
  return checks;
}

}  // namespace rvos
