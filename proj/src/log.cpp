#include "retort/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

#include <memory>

namespace retort::log {

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_color_mt("retort");
    l->set_pattern("%^%l%$: %v");
    l->set_level(spdlog::level::warn);
    return l;
  }();
  return *instance;
}

void set_level(Level level) {
  switch (level) {
    case Level::Quiet:
      logger().set_level(spdlog::level::err);
      break;
    case Level::Normal:
      logger().set_level(spdlog::level::warn);
      break;
    case Level::Verbose:
      logger().set_level(spdlog::level::debug);
      break;
  }
}

}  // namespace retort::log
