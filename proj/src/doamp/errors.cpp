#include "doamp/errors.hpp"

namespace doamp {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidDimension: return "invalid dimension";
    case ErrorCode::kInvalidParameter: return "invalid parameter";
    case ErrorCode::kInvalidMessage: return "invalid message";
    case ErrorCode::kSingularSystem: return "singular system";
    case ErrorCode::kNoInformation: return "no information gained";
    case ErrorCode::kDegenerateNle: return "degenerate denoiser output";
    case ErrorCode::kNleFailure: return "denoiser failure";
    case ErrorCode::kBridgeFailure: return "bridge failure";
    case ErrorCode::kIntegrationFailure: return "integration failure";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kFormat: return "format error";
  }
  return "unknown error";
}

void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace doamp
