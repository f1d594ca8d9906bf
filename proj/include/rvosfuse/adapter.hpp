#pragma once

#include <sys/types.h>

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rvosfuse/propagation.hpp"

namespace rvos {

/// A child started through `/bin/sh -c command` with its stdin and stdout
/// connected to pipes. stderr is inherited. `environment` entries
/// (NAME=value) are added to the inherited environment. The destructor
/// closes stdin and reaps the child, killing it if it does not exit promptly.
class ChildProcess {
 public:
  explicit ChildProcess(const std::string& command,
                        const std::vector<std::string>& environment = {});
  ~ChildProcess();

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  /// Appends '\n'. Throws PropagatorFailure if the pipe is closed.
  void WriteLine(std::string_view line);
  /// Next line without its newline, or nullopt at end of stream. Throws
  /// PropagatorFailure on timeout.
  std::optional<std::string> ReadLine(std::chrono::milliseconds timeout);

  pid_t pid() const noexcept { return pid_; }

 private:
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  bool eof_ = false;
};

struct AdapterOptions {
  std::chrono::milliseconds timeout = std::chrono::minutes(5);
  std::vector<std::string> environment;
};

/// Maps a frame of a video to the image path sent to the adapter.
using FramePathResolver = std::function<std::string(const VideoRef&, std::size_t)>;

/// Propagator backed by an external adapter process speaking the
/// line-delimited JSON protocol. The handshake runs in the constructor.
/// After a protocol violation the connection is unusable and every later
/// call throws PropagatorFailure; an `error` reply only fails the current
/// request.
class AdapterPropagator final : public Propagator {
 public:
  AdapterPropagator(const std::string& command, FramePathResolver resolver,
                    AdapterOptions options = {});

  std::string name() const override { return name_; }
  std::string version() const override { return "protocol " + std::to_string(protocol_); }

  std::vector<BinaryMask> Propagate(const PropagationRequest& request) override;

 private:
  [[noreturn]] void Broken(const std::string& why);

  ChildProcess process_;
  FramePathResolver resolver_;
  AdapterOptions options_;
  std::string name_;
  int protocol_ = 0;
  bool broken_ = false;
};

struct ConformanceCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Drives an adapter through the handshake, forward and backward requests,
/// malformed input and a repeated request, reporting each check. With
/// `expect_identity` the returned masks must also equal the key mask.
std::vector<ConformanceCheck> RunConformance(const std::string& command,
                                             bool expect_identity = false,
                                             AdapterOptions options = {});

}  // namespace rvos
