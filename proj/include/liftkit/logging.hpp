#pragma once

#include <iosfwd>
#include <mutex>
#include <string>
#include <string_view>

#include "json.hpp"

namespace liftkit {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

LogLevel parse_log_level(std::string_view name);

/// JSON-lines logger: one object per line with "level" and "event" keys.
class Logger {
 public:
  Logger(std::ostream& out, LogLevel level) : out_(&out), level_(level) {}

  void log(LogLevel level, std::string_view event, nlohmann::json fields = nlohmann::json::object());
  void error(std::string_view event, nlohmann::json fields = nlohmann::json::object()) { log(LogLevel::kError, event, std::move(fields)); }
  void warn(std::string_view event, nlohmann::json fields = nlohmann::json::object()) { log(LogLevel::kWarn, event, std::move(fields)); }
  void info(std::string_view event, nlohmann::json fields = nlohmann::json::object()) { log(LogLevel::kInfo, event, std::move(fields)); }
  void debug(std::string_view event, nlohmann::json fields = nlohmann::json::object()) { log(LogLevel::kDebug, event, std::move(fields)); }

 private:
  std::ostream* out_;
  LogLevel level_;
  std::mutex mutex_;
};

}  // namespace liftkit
