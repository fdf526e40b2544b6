#include "pagevis/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

namespace pagevis {

std::shared_ptr<spdlog::logger> log() {
    static const std::shared_ptr<spdlog::logger> instance = [] {
        auto logger = spdlog::stderr_color_mt("pagevis");
        logger->set_level(spdlog::level::warn);
        logger->set_pattern("[%l] %v");
        return logger;
    }();
    return instance;
}

}  // namespace pagevis
