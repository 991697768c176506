#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string>

namespace ssvdd {

enum class LogLevel { quiet = 0, warning = 1, info = 2 };

inline std::atomic<int>& log_level_storage() {
  static std::atomic<int> level{static_cast<int>(LogLevel::warning)};
  return level;
}

inline void set_log_level(LogLevel level) { log_level_storage().store(static_cast<int>(level)); }

inline void log_line(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > log_level_storage().load()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::clog << (level == LogLevel::warning ? "[warn] " : "[info] ") << msg << '\n';
}

inline void log_warning(const std::string& msg) { log_line(LogLevel::warning, msg); }
inline void log_info(const std::string& msg) { log_line(LogLevel::info, msg); }

}  // namespace ssvdd
