#pragma once

#include <string_view>

namespace ahtm {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Off = 3 };

/// Process-wide threshold; defaults to Warn, or AHTM_LOG=debug|info|warn|off.
void set_log_level(LogLevel level);
LogLevel log_level();

void log_message(LogLevel level, std::string_view message);

inline void log_debug(std::string_view m) { log_message(LogLevel::Debug, m); }
inline void log_info(std::string_view m) { log_message(LogLevel::Info, m); }
inline void log_warn(std::string_view m) { log_message(LogLevel::Warn, m); }

}  // namespace ahtm
