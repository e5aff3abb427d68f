#pragma once

#include <memory>

#include <spdlog/logger.h>

namespace mfals::logging {

/// Shared library logger (stderr). The level defaults to "warn" and is
/// overridden by the MFALS_LOG environment variable.
std::shared_ptr<spdlog::logger> logger();

void set_level(const char* name);

}  // namespace mfals::logging
