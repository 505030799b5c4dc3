#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tglg {

enum class ErrorCode {
  kParameter,
  kParse,
  kShape,
  kNumeric,
  kFactorization,
  kFeasibility,
  kConfig,
  kIo,
  kUndefined,
};

/// Stable machine-readable tag, e.g. "E_PARSE".
std::string_view error_code_name(ErrorCode code) noexcept;

/// Single exception type for the library; the code distinguishes the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tglg
