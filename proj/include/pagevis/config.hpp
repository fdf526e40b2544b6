#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>

#include "pagevis/pipeline.hpp"

namespace pagevis {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Key-value config file:
///
///   # comment
///   downsample_factor = 6
///   save_floor = 0.05
///   embed_floor = 0.5
///   containment_policy = center     # center | full | any-overlap
///   workers = 8
///   jpeg_quality = 90
///   source = /data/batches          # directory or http(s) URL
///
/// Unknown keys and malformed values are errors.
std::map<std::string, std::string> parse_config(std::istream& in);

/// Applies parsed keys onto `config`.
void apply_config(PipelineConfig& config, const std::map<std::string, std::string>& values);

void load_config_file(PipelineConfig& config, const std::filesystem::path& path);

/// NN_SOURCE_URL and NN_WORKERS, when set.
void apply_environment(PipelineConfig& config);

}  // namespace pagevis
