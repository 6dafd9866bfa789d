#pragma once

#include <stdexcept>
#include <string>

namespace spi {

// Mirrors spi_status in the C API (same numeric values).
enum class ErrorCode {
  InvalidArgument = 1,
  Io = 2,
  Format = 3,
  Dimension = 4,
  Numeric = 5,
  Internal = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace spi
