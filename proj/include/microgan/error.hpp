#pragma once

#include <stdexcept>
#include <string>

namespace microgan {

// Every contract violation in the library throws Error with a kind that the
// CLI maps onto its exit codes (config/shape problems -> 2, I/O -> 3,
// numeric aborts -> 4).
enum class ErrorKind {
  Size,         // bad tensor shape or buffer length
  Shape,        // operand shapes incompatible
  Spec,         // bad op configuration (stride, padding, slope, ...)
  Statistics,   // batch too small for batch statistics
  Rank,         // wrong tensor rank (e.g. non-scalar loss)
  Domain,       // value outside required interval
  Determinism,  // repeated evaluation produced different bits
  Config,       // bad run configuration or malformed user input
  Io,           // filesystem / encode / decode failure
  Load,         // checkpoint failed validation
  Numeric,      // non-finite value where a finite one is required
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace microgan
