#include "doamp/bridge.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>

#include "doamp/errors.hpp"

namespace doamp {
namespace wire {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> bytes) {
  std::uint64_t value = 0;
  for (int i = 0; i < 8; ++i) value |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return value;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t value) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes) {
  std::uint32_t value = 0;
  for (int i = 0; i < 4; ++i) value |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return value;
}

void put_magic(std::vector<std::uint8_t>& out, const char* magic) {
  for (std::size_t i = 0; i < kMagicSize; ++i) out.push_back(static_cast<std::uint8_t>(magic[i]));
}

bool has_magic(std::span<const std::uint8_t> bytes, const char* magic) {
  return bytes.size() >= kMagicSize && std::memcmp(bytes.data(), magic, kMagicSize) == 0;
}

}  // namespace

std::vector<std::uint8_t> encode_request(std::span<const double> s_in, double t_star, double v) {
  std::vector<std::uint8_t> out;
  out.reserve(kRequestHeaderSize + 4 * s_in.size());
  put_magic(out, kRequestMagic);
  put_u64(out, s_in.size());
  put_u64(out, std::bit_cast<std::uint64_t>(t_star));
  put_u64(out, std::bit_cast<std::uint64_t>(v));
  for (double x : s_in) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  return out;
}

std::vector<std::uint8_t> encode_response(std::span<const float> payload) {
  std::vector<std::uint8_t> out;
  out.reserve(kResponseHeaderSize + 4 * payload.size());
  put_magic(out, kResponseMagic);
  put_u64(out, payload.size());
  for (float x : payload) put_u32(out, std::bit_cast<std::uint32_t>(x));
  return out;
}

Request decode_request(std::span<const std::uint8_t> frame) {
  if (frame.size() < kRequestHeaderSize) fail(ErrorCode::kBridgeFailure, "truncated request header");
  if (!has_magic(frame, kRequestMagic)) fail(ErrorCode::kBridgeFailure, "bad request magic");
  const std::uint64_t n = get_u64(frame.subspan(8));
  if (frame.size() != kRequestHeaderSize + 4 * n) {
    fail(ErrorCode::kBridgeFailure, "request payload length mismatch");
  }
  Request r;
  r.t_star = std::bit_cast<double>(get_u64(frame.subspan(16)));
  r.v = std::bit_cast<double>(get_u64(frame.subspan(24)));
  r.payload.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    r.payload[i] = std::bit_cast<float>(get_u32(frame.subspan(kRequestHeaderSize + 4 * i)));
  }
  return r;
}

std::uint64_t decode_response_header(std::span<const std::uint8_t> header) {
  if (header.size() < kResponseHeaderSize) fail(ErrorCode::kBridgeFailure, "truncated response header");
  if (!has_magic(header, kResponseMagic)) fail(ErrorCode::kBridgeFailure, "bad response magic");
  return get_u64(header.subspan(8));
}

Vec decode_response_payload(std::span<const std::uint8_t> payload, std::uint64_t n) {
  if (payload.size() != 4 * n) fail(ErrorCode::kBridgeFailure, "response payload length mismatch");
  Vec out(static_cast<Eigen::Index>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    out[static_cast<Eigen::Index>(i)] = std::bit_cast<float>(get_u32(payload.subspan(4 * i)));
  }
  return out;
}

}  // namespace wire

// ---------------------------------------------------------------------------
// Transports

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  const auto left =
      std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left > 0 ? static_cast<int>(left) : 0;
}

void wait_fd(int fd, short events, Clock::time_point deadline, const char* what) {
  for (;;) {
    pollfd p{fd, events, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc > 0) return;
    if (rc == 0) fail(ErrorCode::kBridgeFailure, std::string(what) + " timed out");
    if (errno != EINTR) fail(ErrorCode::kBridgeFailure, std::string(what) + ": poll failed");
  }
}

/// Stream socket with deadline-bounded I/O. Subclasses decide how to
/// (re)connect.
class SocketTransport : public BridgeTransport {
 public:
  ~SocketTransport() override { close_fd(); }

  void write_all(std::span<const std::uint8_t> bytes, std::chrono::milliseconds timeout) override {
    if (fd_ < 0) connect_fd();
    const auto deadline = Clock::now() + timeout;
    std::size_t done = 0;
    while (done < bytes.size()) {
      wait_fd(fd_, POLLOUT, deadline, "bridge write");
      const ssize_t n = ::send(fd_, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK) continue;
        fail(ErrorCode::kBridgeFailure, std::string("bridge write: ") + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }

  void read_exact(std::span<std::uint8_t> bytes, std::chrono::milliseconds timeout) override {
    require(fd_ >= 0, ErrorCode::kBridgeFailure, "bridge read without a connection");
    const auto deadline = Clock::now() + timeout;
    std::size_t done = 0;
    while (done < bytes.size()) {
      wait_fd(fd_, POLLIN, deadline, "bridge read");
      const ssize_t n = ::recv(fd_, bytes.data() + done, bytes.size() - done, 0);
      if (n == 0) fail(ErrorCode::kBridgeFailure, "bridge closed the stream");
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK) continue;
        fail(ErrorCode::kBridgeFailure, std::string("bridge read: ") + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }

  void reset() override { close_fd(); }

 protected:
  virtual void connect_fd() = 0;
  virtual void close_fd() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  static void set_nonblocking(int fd) {
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  }

  int fd_ = -1;
};

class ProcessTransport final : public SocketTransport {
 public:
  explicit ProcessTransport(std::string command) : command_(std::move(command)) {}
  ~ProcessTransport() override { close_fd(); }

 protected:
  void connect_fd() override {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
      fail(ErrorCode::kBridgeFailure, "socketpair failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
      ::close(fds[0]);
      ::close(fds[1]);
      fail(ErrorCode::kBridgeFailure, "fork failed");
    }
    if (pid == 0) {
      ::dup2(fds[1], STDIN_FILENO);
      ::dup2(fds[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(fds[1]);
    fd_ = fds[0];
    pid_ = pid;
    set_nonblocking(fd_);
  }

  void close_fd() override {
    SocketTransport::close_fd();
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
      pid_ = -1;
    }
  }

 private:
  std::string command_;
  pid_t pid_ = -1;
};

class UnixSocketTransport final : public SocketTransport {
 public:
  explicit UnixSocketTransport(std::string path) : path_(std::move(path)) {}

 protected:
  void connect_fd() override {
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path_.size() >= sizeof(addr.sun_path)) fail(ErrorCode::kBridgeFailure, "socket path too long");
    std::memcpy(addr.sun_path, path_.c_str(), path_.size() + 1);
    const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) fail(ErrorCode::kBridgeFailure, "socket failed");
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      ::close(fd);
      fail(ErrorCode::kBridgeFailure, "cannot connect to " + path_);
    }
    fd_ = fd;
    set_nonblocking(fd_);
  }

 private:
  std::string path_;
};

}  // namespace

std::unique_ptr<BridgeTransport> open_bridge(const std::string& endpoint) {
  if (endpoint.rfind("exec:", 0) == 0) {
    return std::make_unique<ProcessTransport>(endpoint.substr(5));
  }
  if (endpoint.rfind("unix:", 0) == 0) {
    return std::make_unique<UnixSocketTransport>(endpoint.substr(5));
  }
  fail(ErrorCode::kInvalidParameter, "bridge endpoint must start with exec: or unix:");
}

// ---------------------------------------------------------------------------

BridgePrior::BridgePrior(std::unique_ptr<BridgeTransport> transport,
                         std::chrono::milliseconds timeout, TimeConvention convention)
    : transport_(std::move(transport)), timeout_(timeout), convention_(convention) {
  require(transport_ != nullptr, ErrorCode::kInvalidParameter, "bridge prior needs a transport");
  require(timeout_.count() > 0, ErrorCode::kInvalidParameter, "bridge timeout must be > 0");
}

Vec BridgePrior::denoise(const Vec& s_in, double t_star, double v) {
  count_evaluations();
  try {
    transport_->write_all(wire::encode_request(as_span(s_in), t_star, v), timeout_);
    std::vector<std::uint8_t> header(wire::kResponseHeaderSize);
    transport_->read_exact(header, timeout_);
    const std::uint64_t n = wire::decode_response_header(header);
    if (n != static_cast<std::uint64_t>(s_in.size())) {
      fail(ErrorCode::kBridgeFailure, "response length " + std::to_string(n) + " != request length " +
                                          std::to_string(s_in.size()));
    }
    std::vector<std::uint8_t> payload(4 * n);
    transport_->read_exact(payload, timeout_);
    Vec out = wire::decode_response_payload(payload, n);
    if (!out.allFinite()) fail(ErrorCode::kBridgeFailure, "non-finite bridge output");
    return out;
  } catch (const Error&) {
    // The stream may hold a partial frame; start clean next time.
    transport_->reset();
    throw;
  }
}

}  // namespace doamp
