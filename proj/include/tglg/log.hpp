#pragma once

#include <functional>
#include <string>

namespace tglg {

using WarningHandler = std::function<void(const std::string&)>;

/// Replaces the process-wide warning sink (default: stderr). Returns the previous one.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(const std::string& message);

}  // namespace tglg
