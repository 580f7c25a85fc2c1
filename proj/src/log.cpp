#include "finslercaps/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <mutex>

namespace finslercaps {

namespace {

spdlog::level::level_enum to_spd(LogLevel l) {
    switch (l) {
    case LogLevel::Debug:
        return spdlog::level::debug;
    case LogLevel::Info:
        return spdlog::level::info;
    case LogLevel::Error:
        break;
    }
    return spdlog::level::err;
}

LogLevel from_env() {
    const char* v = std::getenv("FINSLERCAPS_LOG");
    if (!v) return LogLevel::Error;
    const std::string s(v);
    if (s == "debug") return LogLevel::Debug;
    if (s == "info") return LogLevel::Info;
    return LogLevel::Error;
}

struct State {
    std::shared_ptr<spdlog::logger> logger;
    LogLevel level;

    State() : logger(spdlog::stderr_logger_mt("finslercaps")), level(from_env()) {
        logger->set_pattern("[%l] %v");
        logger->set_level(to_spd(level));
    }
};

State& state() {
    static State s;
    return s;
}

} // namespace

LogLevel log_level() { return state().level; }

void set_log_level(LogLevel level) {
    state().level = level;
    state().logger->set_level(to_spd(level));
}

void log_error(const std::string& msg) { state().logger->error(msg); }
void log_warn(const std::string& msg) { state().logger->warn(msg); }
void log_info(const std::string& msg) { state().logger->info(msg); }
void log_debug(const std::string& msg) {
    if (state().level == LogLevel::Debug) state().logger->debug(msg);
}

} // namespace finslercaps
