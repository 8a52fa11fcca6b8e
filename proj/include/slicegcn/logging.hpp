#pragma once

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace slicegcn {

enum class LogLevel { kQuiet = 0, kInfo = 1, kDebug = 2 };

/// Verbosity from SLICEGCN_LOG (quiet | info | debug); info when unset.
inline LogLevel log_level() {
  const char* env = std::getenv("SLICEGCN_LOG");
  if (!env) return LogLevel::kInfo;
  const std::string_view v(env);
  if (v == "quiet" || v == "0") return LogLevel::kQuiet;
  if (v == "debug" || v == "2") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

inline void log(LogLevel level, const std::string& msg) {
  if (level != LogLevel::kQuiet && level <= log_level()) std::clog << "[slicegcn] " << msg << '\n';
}

}  // namespace slicegcn
