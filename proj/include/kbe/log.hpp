#pragma once

// Minimal leveled logging to stderr. The level comes from the KBE_LOG
// environment variable (error, warn, info, debug); default is warn.

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>

namespace kbe::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline Level level_from_env() {
  const char* env = std::getenv("KBE_LOG");
  if (env == nullptr) return Level::Warn;
  const std::string_view v(env);
  if (v == "error") return Level::Error;
  if (v == "info") return Level::Info;
  if (v == "debug") return Level::Debug;
  return Level::Warn;
}

inline Level& threshold() {
  static Level lvl = level_from_env();
  return lvl;
}

inline void emit(Level lvl, std::string_view tag, const std::string& msg) {
  if (static_cast<int>(lvl) > static_cast<int>(threshold())) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[kbe " << tag << "] " << msg << '\n';
}

template <typename... Args>
std::string format(Args&&... args) {
  std::ostringstream os;
  (os << ... << std::forward<Args>(args));
  return os.str();
}

template <typename... Args>
void warn(Args&&... args) { emit(Level::Warn, "warn", format(std::forward<Args>(args)...)); }

template <typename... Args>
void info(Args&&... args) { emit(Level::Info, "info", format(std::forward<Args>(args)...)); }

template <typename... Args>
void debug(Args&&... args) { emit(Level::Debug, "debug", format(std::forward<Args>(args)...)); }

}  // namespace kbe::log
