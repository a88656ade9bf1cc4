#include "ahtm/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <string>

namespace ahtm {
namespace {

LogLevel level_from_env() {
  const char* env = std::getenv("AHTM_LOG");
  if (env == nullptr) return LogLevel::Warn;
  const std::string v(env);
  if (v == "debug") return LogLevel::Debug;
  if (v == "info") return LogLevel::Info;
  if (v == "off") return LogLevel::Off;
  return LogLevel::Warn;
}

std::atomic<LogLevel>& current() {
  static std::atomic<LogLevel> level{level_from_env()};
  return level;
}

}  // namespace

void set_log_level(LogLevel level) { current().store(level); }
LogLevel log_level() { return current().load(); }

void log_message(LogLevel level, std::string_view message) {
  if (level < current().load() || level == LogLevel::Off) return;
  static constexpr const char* names[] = {"debug", "info", "warn"};
  std::cerr << "[ahtm " << names[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace ahtm
