#pragma once

#include <stdexcept>
#include <string>

namespace onexn {

// Broad failure classes. The CLI maps kPrecondition/kUsage to exit code 2 and
// everything else to exit code 3.
enum class ErrorCode {
  kIo,
  kFormat,
  kShape,
  kNonFinite,
  kDuplicateId,
  kStructure,
  kDivisibility,
  kNotBlockSparse,
  kInvariant,
  kPrecondition,
  kUsage,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace onexn
