#pragma once

#include <stdexcept>
#include <string>

namespace doamp {

enum class ErrorCode {
  kInvalidDimension,
  kInvalidParameter,
  kInvalidMessage,
  kSingularSystem,
  kNoInformation,
  kDegenerateNle,
  kNleFailure,
  kBridgeFailure,
  kIntegrationFailure,
  kIo,
  kFormat,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool condition, ErrorCode code, const char* what) {
  if (!condition) fail(code, what);
}

}  // namespace doamp
