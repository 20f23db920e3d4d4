#pragma once

#include "hpcde/model/cde_engine.hpp"
#include "hpcde/model/likelihood.hpp"
#include "hpcde/model/params.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace hpcde::train {

struct TrainConfig {
    model::ModelDims dims;
    double learning_rate = 1e-3;
    double weight_decay = 1e-5;
    std::size_t batch_size = 16;
    /// Number of passes over the training set; 0 returns the initial weights.
    std::size_t max_iter = 100;
    /// Epochs without a strict decrease of the training loss before stopping.
    std::size_t patience = 5;
    double alpha1 = 1.0;
    double alpha2 = 1e-2;
    std::size_t substeps_per_segment = 8;
    bool marked_event_term = false;
    std::uint64_t seed = 0;
    /// Threads used for per-sequence forward/backward; results do not depend on it.
    std::size_t workers = 1;

    void validate() const;
    [[nodiscard]] model::LossWeights loss_weights() const noexcept {
        return {alpha1, alpha2, marked_event_term};
    }
    [[nodiscard]] model::SolverConfig solver() const noexcept {
        return {substeps_per_segment, model::SolverMethod::rk4, false};
    }
    bool operator==(const TrainConfig&) const = default;
};

[[nodiscard]] std::vector<std::string> preset_names();
/// Hyperparameters tuned for the mimic, memetracker, retweet and stackoverflow
/// datasets. Throws model::ConfigError for an unknown name.
[[nodiscard]] TrainConfig preset(const std::string& name);

[[nodiscard]] nlohmann::json to_json(const TrainConfig& config);
/// Overlay the keys present in `j` onto `base`; unknown keys are rejected.
[[nodiscard]] TrainConfig apply_json(TrainConfig base, const nlohmann::json& j);

}  // namespace hpcde::train
