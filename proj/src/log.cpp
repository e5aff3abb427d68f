#include "mfals/log.hpp"

#include <cstdlib>
#include <mutex>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace mfals::logging {

std::shared_ptr<spdlog::logger> logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> instance;
  std::call_once(once, [] {
    instance = spdlog::stderr_color_mt("mfals");
    instance->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    instance->set_level(spdlog::level::warn);
    if (const char* env = std::getenv("MFALS_LOG")) {
      instance->set_level(spdlog::level::from_str(env));
    }
  });
  return instance;
}

void set_level(const char* name) { logger()->set_level(spdlog::level::from_str(name)); }

}  // namespace mfals::logging
