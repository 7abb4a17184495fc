#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <memory>
#include <thread>

#include "doamp/bridge.hpp"
#include "doamp/channel.hpp"
#include "doamp/errors.hpp"
#include "doamp/oamp.hpp"
#include "oracles.hpp"

using namespace doamp;
using namespace std::chrono_literals;

namespace {

std::string echo_command(const std::string& args = "") {
  return std::string("exec:") + DOAMP_ECHO_BRIDGE + (args.empty() ? "" : " " + args);
}

BridgePrior make_bridge(const std::string& args = "", std::chrono::milliseconds timeout = 2000ms) {
  return BridgePrior(open_bridge(echo_command(args)), timeout);
}

Vec float_exact(std::size_t n, std::uint64_t seed) {
  Vec v = doamp::testing::random_vec(n, seed);
  for (auto& x : v) x = static_cast<double>(static_cast<float>(x));
  return v;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidParameter;
}

}  // namespace

TEST(Wire, RequestMatchesHandAssembledFrame) {
  const std::vector<double> s{1.0, -2.0, 0.5, 0.0};
  const std::vector<std::uint8_t> golden{
      'O', 'A', 'M', 'P', 'N', 'L', 'E', '1',          // magic
      0x04, 0, 0, 0, 0, 0, 0, 0,                       // N = 4
      0, 0, 0, 0, 0, 0, 0xE0, 0x3F,                    // t* = 0.5
      0, 0, 0, 0, 0, 0, 0xD0, 0x3F,                    // v = 0.25
      0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0xC0,  // 1.0f, -2.0f
      0x00, 0x00, 0x00, 0x3F, 0x00, 0x00, 0x00, 0x00,  // 0.5f, 0.0f
  };
  EXPECT_EQ(wire::encode_request(s, 0.5, 0.25), golden);
  const wire::Request back = wire::decode_request(golden);
  EXPECT_EQ(back.t_star, 0.5);
  EXPECT_EQ(back.v, 0.25);
  EXPECT_EQ(back.payload, (std::vector<float>{1.0f, -2.0f, 0.5f, 0.0f}));
}

TEST(Wire, ResponseMatchesHandAssembledFrame) {
  const std::vector<float> payload{-1.0f, 2.0f};
  const std::vector<std::uint8_t> golden{
      'O', 'A', 'M', 'P', 'N', 'L', 'E', '2', 0x02, 0, 0, 0, 0, 0, 0, 0,
      0x00, 0x00, 0x80, 0xBF, 0x00, 0x00, 0x00, 0x40,
  };
  EXPECT_EQ(wire::encode_response(payload), golden);
  const std::span<const std::uint8_t> bytes(golden);
  EXPECT_EQ(wire::decode_response_header(bytes.first(16)), 2u);
  const Vec v = wire::decode_response_payload(bytes.subspan(16), 2);
  EXPECT_EQ(v[0], -1.0);
  EXPECT_EQ(v[1], 2.0);
}

TEST(Wire, MalformedFramesAreRejected) {
  auto frame = wire::encode_request(std::vector<double>{1.0, 2.0}, 0.5, 0.1);
  auto bad_magic = frame;
  bad_magic[7] = '9';
  EXPECT_EQ(code_of([&] { wire::decode_request(bad_magic); }), ErrorCode::kBridgeFailure);
  auto truncated = frame;
  truncated.pop_back();
  EXPECT_EQ(code_of([&] { wire::decode_request(truncated); }), ErrorCode::kBridgeFailure);
  EXPECT_EQ(code_of([&] { wire::decode_request(std::span(frame).first(20)); }),
            ErrorCode::kBridgeFailure);
  const std::vector<std::uint8_t> header(16, 0);
  EXPECT_EQ(code_of([&] { wire::decode_response_header(header); }), ErrorCode::kBridgeFailure);
}

TEST(Bridge, EchoIsBitExact) {
  BridgePrior prior = make_bridge();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Vec s = float_exact(257, seed);
    EXPECT_EQ(prior.denoise(s, 0.5, 0.25), s);
  }
  EXPECT_EQ(prior.function_evaluations(), 3u);
}

TEST(Bridge, ScaleModeAppliesGain) {
  BridgePrior prior = make_bridge("--mode scale:0.5");
  const Vec s = float_exact(16, 4);
  EXPECT_EQ(prior.denoise(s, 0.5, 0.25), 0.5 * s);
}

TEST(Bridge, WrongLengthRaisesBridgeError) {
  BridgePrior prior = make_bridge("--mode wrong-length");
  EXPECT_EQ(code_of([&] { prior.denoise(float_exact(8, 1), 0.5, 0.1); }), ErrorCode::kBridgeFailure);
}

TEST(Bridge, BadMagicRaisesBridgeError) {
  BridgePrior prior = make_bridge("--mode bad-magic");
  EXPECT_EQ(code_of([&] { prior.denoise(float_exact(8, 1), 0.5, 0.1); }), ErrorCode::kBridgeFailure);
}

TEST(Bridge, TimeoutIsBoundedAndRecovers) {
  BridgePrior prior = make_bridge("--mode sleep:3000 --fault-every 2", 200ms);
  const Vec s = float_exact(8, 1);
  EXPECT_EQ(prior.denoise(s, 0.5, 0.1), s);
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(code_of([&] { prior.denoise(s, 0.5, 0.1); }), ErrorCode::kBridgeFailure);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 1500ms);
  // The transport respawns the process; its first request echoes again.
  EXPECT_EQ(prior.denoise(s, 0.5, 0.1), s);
}

TEST(Bridge, MissingProcessFailsCleanly) {
  BridgePrior prior(open_bridge("exec:/nonexistent/denoiser"), 500ms);
  EXPECT_EQ(code_of([&] { prior.denoise(Vec::Ones(4), 0.5, 0.1); }), ErrorCode::kBridgeFailure);
}

TEST(Bridge, UnknownEndpointScheme) {
  EXPECT_EQ(code_of([] { open_bridge("tcp:1234"); }), ErrorCode::kInvalidParameter);
}

TEST(Bridge, UnixSocketTransport) {
  const auto path = std::filesystem::temp_directory_path() /
                    ("doamp_bridge_" + std::to_string(::getpid()) + ".sock");
  const pid_t pid = ::fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    ::execl(DOAMP_ECHO_BRIDGE, DOAMP_ECHO_BRIDGE, "--listen", path.c_str(),
            static_cast<char*>(nullptr));
    ::_exit(127);
  }
  for (int i = 0; i < 200 && !std::filesystem::exists(path); ++i) std::this_thread::sleep_for(10ms);
  {
    BridgePrior prior(open_bridge("unix:" + path.string()), 2000ms);
    const Vec s = float_exact(33, 6);
    EXPECT_EQ(prior.denoise(s, 0.3, 0.2), s);
    EXPECT_EQ(prior.denoise(s, 0.3, 0.2), s);
  }
  ::kill(pid, SIGKILL);
  ::waitpid(pid, nullptr, 0);
  std::filesystem::remove(path);
}

TEST(Bridge, ReceiverFallsBackOnFaultsAndContinues) {
  const std::size_t n = 512;
  const Vec s = float_exact(n, 3).array() * 0.2 + 0.5;
  auto op = std::make_shared<const RmOperator>(build_rm_operator(n, n / 2, 1));
  const auto ch = gen_conditioned_channel(n / 2, 10.0, SpectrumShape::kGeometric, 0.0025, 2,
                                          BasisKind::kMultiplexed);
  const Vec y = transmit(ch, op->forward(s), 3);
  BridgePrior prior = make_bridge("--mode wrong-length --fault-every 3");
  ReceiverConfig cfg;
  cfg.max_iters = 5;
  const ReceiverResult res = run_receiver(y, ch, op, prior, cfg, &s);
  EXPECT_TRUE(res.trace.error.empty()) << res.trace.error;
  EXPECT_EQ(res.trace.records.size(), 5u);
  std::size_t faults = 0;
  for (const auto& r : res.trace.records) faults += r.fault.empty() ? 0 : 1;
  EXPECT_GE(faults, 1u);
  EXPECT_TRUE(res.s_hat.allFinite());
}
