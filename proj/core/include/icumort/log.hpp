#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace icumort {

enum class LogLevel { debug, info, warning, error };

using LogSink = std::function<void(LogLevel, std::string_view)>;

/// Replaces the process-wide sink. The default prints warnings and errors to
/// stderr. Passing an empty function silences everything.
void set_log_sink(LogSink sink);
/// Minimum level forwarded to the sink (default: info).
void set_log_level(LogLevel level);

void log(LogLevel level, std::string_view message);
inline void log_info(std::string_view m) { log(LogLevel::info, m); }
inline void log_warning(std::string_view m) { log(LogLevel::warning, m); }

} // namespace icumort
