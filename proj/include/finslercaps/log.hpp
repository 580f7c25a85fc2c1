#pragma once

#include <string>

namespace finslercaps {

// Diagnostics go to stderr. The level comes from FINSLERCAPS_LOG
// (error | info | debug; default error) on first use.
enum class LogLevel { Error, Info, Debug };

LogLevel log_level();
void set_log_level(LogLevel level);

void log_error(const std::string& msg);
void log_warn(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

} // namespace finslercaps
