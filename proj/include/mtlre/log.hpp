#pragma once

#include <sstream>
#include <string>

namespace mtlre {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

// Process-wide log threshold.  Defaults to warn so library users and tests
// stay quiet; the CLI raises/lowers it from the MTLRE_LOG environment
// variable (debug|info|warn|error|off).
LogLevel log_level();
void set_log_level(LogLevel level);
LogLevel parse_log_level(const std::string& name);

namespace detail {
void log_write(LogLevel level, const std::string& msg);
}

// Usage: MTLRE_LOG_AT(LogLevel::warn) << "skipping " << id << ": too long";
// The stream body is only evaluated when the level is enabled.
#define MTLRE_LOG_AT(lvl)                                               \
    for (bool mtlre_once = (lvl) >= ::mtlre::log_level(); mtlre_once;  \
         mtlre_once = false)                                            \
    ::mtlre::detail::LogLine(lvl)

namespace detail {
class LogLine {
public:
    explicit LogLine(LogLevel level) : level_(level) {}
    ~LogLine() { log_write(level_, stream_.str()); }
    template <class T>
    LogLine& operator<<(const T& v) {
        stream_ << v;
        return *this;
    }

private:
    LogLevel level_;
    std::ostringstream stream_;
};
}  // namespace detail

}  // namespace mtlre
