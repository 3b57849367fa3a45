#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "iris/nn/layers.hpp"

namespace iris::nn {

/// Writes a versioned binary checkpoint: JSON metadata (config echo) followed
/// by the named parameter tensors with their shapes.
void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const std::vector<ParamRef<float>>& params);

/// Loads tensors by name into the given parameters. Every tensor in the file
/// must correspond to a listed parameter and match its shape, and when
/// require_complete is true every listed parameter must be present in the
/// file. Shape or name mismatches raise ConfigError naming the tensor.
/// Returns the stored metadata.
nlohmann::json load_checkpoint(const std::string& path, std::vector<ParamRef<float>>& params,
                               bool require_complete = true);

/// Reads only the metadata block.
nlohmann::json read_checkpoint_meta(const std::string& path);

}  // namespace iris::nn
