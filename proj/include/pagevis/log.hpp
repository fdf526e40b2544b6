#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace pagevis {

/// Shared stderr logger ("pagevis"). Level defaults to warn.
std::shared_ptr<spdlog::logger> log();

}  // namespace pagevis
