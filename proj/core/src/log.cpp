#include "icumort/log.hpp"

#include <iostream>
#include <mutex>

namespace icumort {

namespace {

std::mutex g_mutex;
LogLevel g_level = LogLevel::info;

void stderr_sink(LogLevel level, std::string_view message) {
    static constexpr const char* tags[] = {"debug", "info", "warning", "error"};
    if (level < LogLevel::warning) return;
    std::cerr << "[" << tags[static_cast<int>(level)] << "] " << message << '\n';
}

LogSink g_sink = stderr_sink;

} // namespace

void set_log_sink(LogSink sink) {
    std::lock_guard lock(g_mutex);
    g_sink = std::move(sink);
}

void set_log_level(LogLevel level) {
    std::lock_guard lock(g_mutex);
    g_level = level;
}

void log(LogLevel level, std::string_view message) {
    std::lock_guard lock(g_mutex);
    if (level < g_level || !g_sink) return;
    g_sink(level, message);
}

} // namespace icumort
