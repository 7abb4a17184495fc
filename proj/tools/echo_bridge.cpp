// Reference denoiser process for the bridge protocol. Reads request frames on
// stdin and answers on stdout (or on a UNIX socket with --listen).
//
//   --mode echo          return the payload unchanged (default)
//   --mode scale:<c>     return c * payload
//   --mode wrong-length  answer with one element fewer than requested
//   --mode bad-magic     corrupt the response magic
//   --mode sleep:<ms>    wait before answering
//   --fault-every <k>    apply the fault mode only to every k-th request,
//                        echoing the others

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "doamp/bridge.hpp"

namespace {

bool read_exact(int fd, std::uint8_t* buf, std::size_t n) {
  std::size_t done = 0;
  while (done < n) {
    const ssize_t r = ::read(fd, buf + done, n - done);
    if (r == 0) return false;
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    done += static_cast<std::size_t>(r);
  }
  return true;
}

bool write_all(int fd, const std::vector<std::uint8_t>& bytes) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t w = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    done += static_cast<std::size_t>(w);
  }
  return true;
}

struct Mode {
  std::string kind = "echo";
  double scale = 1.0;
  int sleep_ms = 0;
  std::size_t fault_every = 1;
};

std::vector<std::uint8_t> answer(const doamp::wire::Request& req, const Mode& mode, bool fault) {
  std::vector<float> out = req.payload;
  if (!fault || mode.kind == "echo") return doamp::wire::encode_response(out);
  if (mode.kind == "scale") {
    for (float& x : out) x = static_cast<float>(mode.scale * x);
  } else if (mode.kind == "wrong-length") {
    if (!out.empty()) out.pop_back();
  } else if (mode.kind == "sleep") {
    std::this_thread::sleep_for(std::chrono::milliseconds(mode.sleep_ms));
  }
  auto frame = doamp::wire::encode_response(out);
  if (mode.kind == "bad-magic") frame[0] = 'X';
  return frame;
}

int serve(int in_fd, int out_fd, const Mode& mode) {
  std::size_t count = 0;
  for (;;) {
    std::vector<std::uint8_t> frame(doamp::wire::kRequestHeaderSize);
    if (!read_exact(in_fd, frame.data(), frame.size())) return 0;
    const std::uint64_t n = doamp::wire::get_u64({frame.data() + 8, 8});
    frame.resize(doamp::wire::kRequestHeaderSize + 4 * n);
    if (!read_exact(in_fd, frame.data() + doamp::wire::kRequestHeaderSize, 4 * n)) return 1;
    doamp::wire::Request req;
    try {
      req = doamp::wire::decode_request(frame);
    } catch (const std::exception& e) {
      std::cerr << "echo_bridge: " << e.what() << "\n";
      return 1;
    }
    ++count;
    const bool fault = mode.fault_every > 0 && count % mode.fault_every == 0;
    if (!write_all(out_fd, answer(req, mode, fault))) return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  Mode mode;
  std::string listen_path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--mode" && i + 1 < argc) {
      const std::string v = argv[++i];
      const auto colon = v.find(':');
      mode.kind = v.substr(0, colon);
      if (colon != std::string::npos) {
        const std::string param = v.substr(colon + 1);
        if (mode.kind == "scale") mode.scale = std::stod(param);
        if (mode.kind == "sleep") mode.sleep_ms = std::stoi(param);
      }
    } else if (arg == "--fault-every" && i + 1 < argc) {
      mode.fault_every = std::stoul(argv[++i]);
    } else if (arg == "--listen" && i + 1 < argc) {
      listen_path = argv[++i];
    } else {
      std::cerr << "usage: echo_bridge [--mode echo|scale:<c>|wrong-length|bad-magic|sleep:<ms>]"
                   " [--fault-every k] [--listen path]\n";
      return 2;
    }
  }
  if (listen_path.empty()) return serve(STDIN_FILENO, STDOUT_FILENO, mode);

  const int server = ::socket(AF_UNIX, SOCK_STREAM, 0);
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  std::strncpy(addr.sun_path, listen_path.c_str(), sizeof(addr.sun_path) - 1);
  ::unlink(listen_path.c_str());
  if (server < 0 || ::bind(server, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(server, 4) != 0) {
    std::cerr << "echo_bridge: cannot listen on " << listen_path << "\n";
    return 1;
  }
  for (;;) {
    const int client = ::accept(server, nullptr, nullptr);
    if (client < 0) continue;
    serve(client, client, mode);
    ::close(client);
  }
}
