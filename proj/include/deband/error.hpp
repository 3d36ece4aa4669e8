#pragma once

#include <stdexcept>
#include <string>

namespace deband {

enum class ErrorCode {
  invalid_argument = 1,
  io = 2,
  format = 3,
  contract = 4,
  processing = 5,
};

/// Every failure raised by the library carries one of the codes above; the
/// C API maps them one-to-one onto deband_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace deband
