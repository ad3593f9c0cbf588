#pragma once

#include <stdexcept>
#include <string>

namespace echoguard {

enum class ErrorKind {
  missing_file,
  unwritable_file,
  malformed_file,
  unsupported_encoding,
  empty_audio,
  too_short_audio,
  silent_audio,
  sample_rate_mismatch,
  frame_length_changed,
  invalid_argument,
  invalid_config,
  oracle_timeout,
  oracle_failure,
  oracle_bad_output,
  unknown_sample,
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::missing_file: return "missing_file";
    case ErrorKind::unwritable_file: return "unwritable_file";
    case ErrorKind::malformed_file: return "malformed_file";
    case ErrorKind::unsupported_encoding: return "unsupported_encoding";
    case ErrorKind::empty_audio: return "empty_audio";
    case ErrorKind::too_short_audio: return "too_short_audio";
    case ErrorKind::silent_audio: return "silent_audio";
    case ErrorKind::sample_rate_mismatch: return "sample_rate_mismatch";
    case ErrorKind::frame_length_changed: return "frame_length_changed";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::invalid_config: return "invalid_config";
    case ErrorKind::oracle_timeout: return "oracle_timeout";
    case ErrorKind::oracle_failure: return "oracle_failure";
    case ErrorKind::oracle_bad_output: return "oracle_bad_output";
    case ErrorKind::unknown_sample: return "unknown_sample";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace echoguard
