#include "stylemux/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace stylemux::log {

namespace {

Level parse_level() {
  const char* env = std::getenv("STYLEMUX_LOG");
  if (!env) return Level::kInfo;
  std::string v(env);
  if (v == "off" || v == "0") return Level::kOff;
  if (v == "error") return Level::kError;
  if (v == "debug") return Level::kDebug;
  return Level::kInfo;
}

std::mutex& mu() {
  static std::mutex m;
  return m;
}

void emit(const char* tag, const std::string& msg) {
  std::lock_guard<std::mutex> lock(mu());
  std::cerr << "[stylemux " << tag << "] " << msg << "\n";
}

}  // namespace

Level level() {
  static Level lv = parse_level();
  return lv;
}

void error(const std::string& msg) {
  if (level() >= Level::kError) emit("error", msg);
}

void info(const std::string& msg) {
  if (level() >= Level::kInfo) emit("info", msg);
}

void debug(const std::string& msg) {
  if (level() >= Level::kDebug) emit("debug", msg);
}

}  // namespace stylemux::log
