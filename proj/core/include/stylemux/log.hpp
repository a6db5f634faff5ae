#pragma once

#include <string>

namespace stylemux::log {

enum class Level { kOff = 0, kError = 1, kInfo = 2, kDebug = 3 };

// Level comes from the STYLEMUX_LOG environment variable
// (off|error|info|debug, default info). Read once, cached.
Level level();

void error(const std::string& msg);
void info(const std::string& msg);
void debug(const std::string& msg);

}  // namespace stylemux::log
