#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "doamp/nle.hpp"
#include "doamp/types.hpp"

namespace doamp {

/// Frame layout of the external denoiser protocol. All integers and floats
/// are little-endian IEEE-754.
///
///   request:  "OAMPNLE1" | u64 N | f64 t* | f64 v | N x f32 payload
///   response: "OAMPNLE2" | u64 N | N x f32 payload
namespace wire {

inline constexpr std::size_t kMagicSize = 8;
inline constexpr char kRequestMagic[] = "OAMPNLE1";
inline constexpr char kResponseMagic[] = "OAMPNLE2";
inline constexpr std::size_t kRequestHeaderSize = 32;
inline constexpr std::size_t kResponseHeaderSize = 16;

struct Request {
  double t_star = 0.0;
  double v = 0.0;
  std::vector<float> payload;
};

std::vector<std::uint8_t> encode_request(std::span<const double> s_in, double t_star, double v);
std::vector<std::uint8_t> encode_response(std::span<const float> payload);

/// Throws kBridgeFailure on bad magic or truncated frames.
Request decode_request(std::span<const std::uint8_t> frame);
std::uint64_t decode_response_header(std::span<const std::uint8_t> header);
Vec decode_response_payload(std::span<const std::uint8_t> payload, std::uint64_t n);

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t value);
std::uint64_t get_u64(std::span<const std::uint8_t> bytes);

}  // namespace wire

/// Bidirectional byte stream to a denoiser process.
class BridgeTransport {
 public:
  virtual ~BridgeTransport() = default;
  virtual void write_all(std::span<const std::uint8_t> bytes,
                         std::chrono::milliseconds timeout) = 0;
  virtual void read_exact(std::span<std::uint8_t> bytes, std::chrono::milliseconds timeout) = 0;
  /// Drops the connection after a fault; the next write reconnects.
  virtual void reset() = 0;
};

/// Endpoint strings:
///   exec:<shell command>   spawn the command; its stdin/stdout carry frames
///   unix:<socket path>     connect to a listening UNIX-domain stream socket
std::unique_ptr<BridgeTransport> open_bridge(const std::string& endpoint);

/// NLE that delegates phi(s_in, t*) to an external process. Each request
/// counts as one function evaluation.
class BridgePrior final : public NlePrior {
 public:
  BridgePrior(std::unique_ptr<BridgeTransport> transport, std::chrono::milliseconds timeout,
              TimeConvention convention = TimeConvention::kDdim);

  std::string name() const override { return "external-bridge"; }
  TimeConvention time_convention() const override { return convention_; }
  Vec denoise(const Vec& s_in, double t_star, double v) override;

 private:
  std::unique_ptr<BridgeTransport> transport_;
  std::chrono::milliseconds timeout_;
  TimeConvention convention_;
};

}  // namespace doamp
