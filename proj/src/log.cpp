#include "tglg/log.hpp"

#include <iostream>
#include <mutex>

#include "tglg/error.hpp"

namespace tglg {

namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& handler() {
  static WarningHandler h = [](const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return h;
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler next) {
  std::lock_guard lock(handler_mutex());
  std::swap(handler(), next);
  return next;
}

void warn(const std::string& message) {
  std::lock_guard lock(handler_mutex());
  if (handler()) handler()(message);
}

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kParameter: return "E_PARAMETER";
    case ErrorCode::kParse: return "E_PARSE";
    case ErrorCode::kShape: return "E_SHAPE";
    case ErrorCode::kNumeric: return "E_NUMERIC";
    case ErrorCode::kFactorization: return "E_FACTORIZATION";
    case ErrorCode::kFeasibility: return "E_FEASIBILITY";
    case ErrorCode::kConfig: return "E_CONFIG";
    case ErrorCode::kIo: return "E_IO";
    case ErrorCode::kUndefined: return "E_UNDEFINED";
  }
  return "E_UNKNOWN";
}

}  // namespace tglg
