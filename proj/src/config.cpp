#include "pagevis/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>

#include <fmt/format.h>

namespace pagevis {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

int to_int(const std::string& key, const std::string& v) {
    int out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(fmt::format("{}: '{}' is not an integer", key, v));
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(fmt::format("{}: '{}' is not a number", key, v));
    return out;
}

}  // namespace

std::map<std::string, std::string> parse_config(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto text = trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("config line {}: expected key = value", lineno));
        auto key = trim(std::string_view(text).substr(0, eq));
        auto value = trim(std::string_view(text).substr(eq + 1));
        if (key.empty()) throw ConfigError(fmt::format("config line {}: empty key", lineno));
        out[std::move(key)] = std::move(value);
    }
    return out;
}

void apply_config(PipelineConfig& config, const std::map<std::string, std::string>& values) {
    for (const auto& [key, v] : values) {
        if (key == "downsample_factor") config.downsample_factor = to_int(key, v);
        else if (key == "save_floor") config.save_floor = to_double(key, v);
        else if (key == "embed_floor") config.embed_floor = to_double(key, v);
        else if (key == "workers") config.worker_count = to_int(key, v);
        else if (key == "jpeg_quality") config.jpeg_quality = to_int(key, v);
        else if (key == "source") config.source = v;
        else if (key == "containment_policy") {
            auto p = containment_from_string(v);
            if (!p) throw ConfigError(fmt::format("containment_policy: unknown policy '{}'", v));
            config.containment_policy = *p;
        } else {
            throw ConfigError(fmt::format("unknown config key '{}'", key));
        }
    }
}

void load_config_file(PipelineConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
    apply_config(config, parse_config(in));
}

void apply_environment(PipelineConfig& config) {
    if (const char* url = std::getenv("NN_SOURCE_URL"); url && *url) config.source = url;
    if (const char* w = std::getenv("NN_WORKERS"); w && *w) config.worker_count = to_int("NN_WORKERS", w);
}

}  // namespace pagevis
