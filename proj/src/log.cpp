#include "mtlre/log.hpp"

#include <atomic>
#include <iostream>

#include "mtlre/error.hpp"

namespace mtlre {

namespace {
std::atomic<LogLevel> g_level{LogLevel::warn};

const char* level_name(LogLevel level) {
    switch (level) {
        case LogLevel::debug: return "debug";
        case LogLevel::info: return "info";
        case LogLevel::warn: return "warn";
        case LogLevel::error: return "error";
        case LogLevel::off: return "off";
    }
    return "?";
}
}  // namespace

LogLevel log_level() { return g_level.load(std::memory_order_relaxed); }

void set_log_level(LogLevel level) {
    g_level.store(level, std::memory_order_relaxed);
}

LogLevel parse_log_level(const std::string& name) {
    for (LogLevel l : {LogLevel::debug, LogLevel::info, LogLevel::warn,
                       LogLevel::error, LogLevel::off}) {
        if (name == level_name(l)) return l;
    }
    throw ValidationError("unknown log level '" + name +
                          "' (expected debug|info|warn|error|off)");
}

namespace detail {
void log_write(LogLevel level, const std::string& msg) {
    std::cerr << "[" << level_name(level) << "] " << msg << "\n";
}
}  // namespace detail

}  // namespace mtlre
