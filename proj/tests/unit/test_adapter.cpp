#include <gtest/gtest.h>

#include <variant>

#include "../support/oracles.hpp"
#include "rvosfuse/adapter.hpp"
#include "rvosfuse/error.hpp"
#include "rvosfuse/protocol.hpp"

namespace {

namespace protocol = rvos::protocol;
using rvos::BinaryMask;

const std::string kFake = FAKE_ADAPTER_PATH;

std::string Cmd(const std::string& args) { return "'" + kFake + "' " + args; }

rvos::VideoRef Video(int w, int h, std::size_t frames) {
  rvos::VideoRef v{"vid", w, h, {}};
  for (std::size_t t = 0; t < frames; ++t) v.frame_names.push_back(std::to_string(t));
  return v;
}

std::string Path(const rvos::VideoRef& v, std::size_t t) {
  return "frames/" + v.video_id + "/" + v.frame_names[t] + ".jpg";
}

rvos::AdapterOptions Quick() {
  rvos::AdapterOptions o;
  o.timeout = std::chrono::seconds(10);
  return o;
}

TEST(Protocol, MessagesRoundTrip) {
  const auto hello = protocol::ParseAdapterMessage(protocol::EncodeHello({1, "x"}));
  ASSERT_TRUE(std::holds_alternative<protocol::Hello>(hello));
  EXPECT_EQ(std::get<protocol::Hello>(hello).name, "x");

  const rvos::RleMask rle = rvos::RleEncode(oracle::Rect(4, 3, 1, 1, 3, 2));
  const auto frame = protocol::ParseAdapterMessage(protocol::EncodeMaskFrame({7, rle}));
  ASSERT_TRUE(std::holds_alternative<protocol::MaskFrame>(frame));
  EXPECT_EQ(std::get<protocol::MaskFrame>(frame).frame_index, 7u);
  EXPECT_EQ(std::get<protocol::MaskFrame>(frame).mask, rle);

  EXPECT_TRUE(std::holds_alternative<protocol::Done>(
      protocol::ParseAdapterMessage(protocol::EncodeDone())));
  const auto err = protocol::ParseAdapterMessage(protocol::EncodeError("bad \"thing\"\n"));
  EXPECT_EQ(std::get<protocol::ErrorReply>(err).message, "bad \"thing\"\n");

  protocol::Request req{"v1", {"a.jpg", "b.jpg"}, 4, rle, rvos::Direction::kBackward};
  const std::string line = protocol::EncodeRequest(req);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  const auto back = protocol::ParseRequest(line);
  EXPECT_EQ(back.video_id, "v1");
  EXPECT_EQ(back.frame_paths, req.frame_paths);
  EXPECT_EQ(back.key_index, 4u);
  EXPECT_EQ(back.key_mask, rle);
  EXPECT_EQ(back.direction, rvos::Direction::kBackward);
}

TEST(Protocol, RejectsMalformedLines) {
  for (const char* bad : {"", "{", "[]", R"({"type":"nope"})", R"({"type":"mask","frame_index":-1})",
                          R"({"type":"hello"})"}) {
    try {
      protocol::ParseAdapterMessage(bad);
      ADD_FAILURE() << bad;
    } catch (const rvos::Error& e) {
      EXPECT_EQ(e.code(), rvos::ErrorCode::kParseError) << bad;
    }
  }
}

TEST(Adapter, IdentityMatchesBuiltin) {
  rvos::AdapterPropagator adapter(Cmd("identity"), Path, Quick());
  EXPECT_EQ(adapter.name(), "fake-identity");
  auto builtin = rvos::MakeIdentityPropagator();
  const auto video = Video(8, 6, 5);
  const auto key = oracle::Rect(8, 6, 2, 1, 5, 4);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(rvos::PropagateBidirectional(adapter, video, k, key, "e"),
              rvos::PropagateBidirectional(*builtin, video, k, key, "e"));
  }
}

TEST(Adapter, ShiftClosedForm) {
  rvos::AdapterPropagator adapter(Cmd("shift 1 0"), Path, Quick());
  const auto video = Video(12, 6, 3);
  const auto key = oracle::Rect(12, 6, 5, 2, 7, 4);  // centred 2x2 square
  const auto fwd = adapter.Propagate({video, 0, key, rvos::Direction::kForward});
  ASSERT_EQ(fwd.size(), 3u);
  for (int d = 0; d < 3; ++d) EXPECT_EQ(fwd[d], oracle::Rect(12, 6, 5 + d, 2, 7 + d, 4));

  const auto seq = rvos::PropagateBidirectional(adapter, Video(12, 6, 5), 2, key, "e");
  for (int t = 0; t < 5; ++t) {
    const int d = std::abs(t - 2);
    EXPECT_EQ(seq.frame(t), oracle::Rect(12, 6, 5 + d, 2, 7 + d, 4)) << t;
  }
}

TEST(Adapter, ErrorReplyFailsOnlyThatRequest) {
  rvos::AdapterPropagator adapter(Cmd("fail-video bad"), Path, Quick());
  auto bad = Video(4, 4, 3);
  bad.video_id = "bad";
  const auto key = oracle::Rect(4, 4, 1, 1, 3, 3);
  try {
    adapter.Propagate({bad, 0, key, rvos::Direction::kForward});
    ADD_FAILURE();
  } catch (const rvos::Error& e) {
    EXPECT_EQ(e.code(), rvos::ErrorCode::kPropagatorFailure);
    EXPECT_NE(std::string(e.what()).find("refusing bad"), std::string::npos);
  }
  EXPECT_EQ(adapter.Propagate({Video(4, 4, 3), 0, key, rvos::Direction::kForward}).size(), 3u);
}

TEST(Adapter, ProtocolViolationsBreakTheConnection) {
  const auto video = Video(4, 4, 3);
  const auto key = oracle::Rect(4, 4, 1, 1, 3, 3);
  for (const char* mode : {"garbage", "short", "exit"}) {
    rvos::AdapterPropagator adapter(Cmd(mode), Path, Quick());
    for (int attempt = 0; attempt < 2; ++attempt) {
      try {
        adapter.Propagate({video, 0, key, rvos::Direction::kForward});
        ADD_FAILURE() << mode;
      } catch (const rvos::Error& e) {
        EXPECT_EQ(e.code(), rvos::ErrorCode::kPropagatorFailure) << mode;
      }
    }
  }
}

TEST(Adapter, HandshakeFailures) {
  for (const std::string cmd : {std::string("true"), std::string("echo '{\"type\":\"done\"}'"),
                                std::string("echo '{\"type\":\"hello\",\"protocol\":9,\"name\":\"x\"}'")}) {
    try {
      rvos::AdapterPropagator adapter(cmd, Path, Quick());
      ADD_FAILURE() << cmd;
    } catch (const rvos::Error& e) {
      EXPECT_EQ(e.code(), rvos::ErrorCode::kPropagatorFailure) << cmd;
    }
  }
}

TEST(Adapter, EnvironmentPassedThrough) {
  auto options = Quick();
  options.environment.push_back("RVOSFUSE_SEED=42");
  rvos::AdapterPropagator adapter(Cmd("identity"), Path, options);
  EXPECT_EQ(adapter.name(), "fake-identity-seed42");
}

TEST(Adapter, TimeoutIsAFailure) {
  auto options = Quick();
  options.timeout = std::chrono::milliseconds(200);
  try {
    rvos::AdapterPropagator adapter("sleep 5", Path, options);
    ADD_FAILURE();
  } catch (const rvos::Error& e) {
    EXPECT_EQ(e.code(), rvos::ErrorCode::kPropagatorFailure);
  }
}

TEST(Conformance, FakeModesPass) {
  for (const char* mode : {"identity", "shift 1 0", "shift 0 -1"}) {
    const auto checks = rvos::RunConformance(Cmd(mode), std::string(mode) == "identity", Quick());
    ASSERT_EQ(checks.size(), 7u) << mode;
    for (const auto& c : checks) EXPECT_TRUE(c.passed) << mode << ": " << c.name << ": " << c.detail;
  }
}

TEST(Conformance, BrokenModesFail) {
  for (const char* mode : {"error", "garbage", "short", "exit"}) {
    const auto checks = rvos::RunConformance(Cmd(mode), false, Quick());
    bool any_failed = false;
    for (const auto& c : checks) any_failed = any_failed || !c.passed;
    EXPECT_TRUE(any_failed) << mode;
  }
  const auto shift = rvos::RunConformance(Cmd("shift 1 0"), true, Quick());
  bool identity_violation = false;
  for (const auto& c : shift) identity_violation = identity_violation || !c.passed;
  EXPECT_TRUE(identity_violation);
}

}  // namespace
