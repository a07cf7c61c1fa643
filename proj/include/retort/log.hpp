#pragma once

#include <spdlog/spdlog.h>

#include <utility>

namespace retort::log {

/// Shared stderr logger. Data never goes through here; only diagnostics.
spdlog::logger& logger();

enum class Level { Quiet, Normal, Verbose };
void set_level(Level level);

template <typename... Args>
void debug(fmt::format_string<Args...> fmt, Args&&... args) {
  logger().debug(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void info(fmt::format_string<Args...> fmt, Args&&... args) {
  logger().info(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void warn(fmt::format_string<Args...> fmt, Args&&... args) {
  logger().warn(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void error(fmt::format_string<Args...> fmt, Args&&... args) {
  logger().error(fmt, std::forward<Args>(args)...);
}

}  // namespace retort::log
