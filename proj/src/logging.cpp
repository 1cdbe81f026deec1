#include "liftkit/logging.hpp"

#include <ostream>

#include "liftkit/error.hpp"

namespace liftkit {

LogLevel parse_log_level(std::string_view name) {
  if (name == "error") return LogLevel::kError;
  if (name == "warn") return LogLevel::kWarn;
  if (name == "info") return LogLevel::kInfo;
  if (name == "debug") return LogLevel::kDebug;
  fail(ErrorCode::kConfig, "log level must be error|warn|info|debug");
}

void Logger::log(LogLevel level, std::string_view event, nlohmann::json fields) {
  if (level > level_) return;
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  nlohmann::json line = {{"level", kNames[static_cast<int>(level)]}, {"event", event}};
  if (fields.is_object()) {
    for (auto& [k, v] : fields.items()) line[k] = std::move(v);
  }
  const std::string text = line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  std::lock_guard lock(mutex_);
  *out_ << text << '\n';
  out_->flush();
}

}  // namespace liftkit
