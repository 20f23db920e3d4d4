#pragma once

#include "hpcde/model/params.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <stdexcept>

namespace hpcde::train {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Writes <dir>/weights.bin (every tensor as little-endian float64, concatenated
/// in parameter order) and <dir>/checkpoint.json (dims plus name, shape, offset
/// and count of each tensor). `extra` is stored verbatim under "metadata".
void save_checkpoint(const model::ModelParams& params, const std::filesystem::path& dir,
                     const nlohmann::json& extra = nlohmann::json::object());

[[nodiscard]] model::ModelParams load_checkpoint(const std::filesystem::path& dir);
[[nodiscard]] nlohmann::json load_checkpoint_metadata(const std::filesystem::path& dir);

}  // namespace hpcde::train
