#pragma once

#include "hpcde/data/event_sequence.hpp"
#include "hpcde/model/params.hpp"
#include "hpcde/train/config.hpp"
#include "hpcde/train/metrics.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hpcde::train {

/// Stops once `patience` consecutive checks fail to improve strictly on the best loss.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience);
    /// Record one check; returns true when training should stop.
    bool update(double loss);
    [[nodiscard]] std::size_t bad_checks() const noexcept { return bad_; }
    [[nodiscard]] double best() const noexcept { return best_; }
    [[nodiscard]] bool stopped() const noexcept { return bad_ >= patience_; }

private:
    std::size_t patience_;
    std::size_t bad_ = 0;
    double best_;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double loss = 0.0;       ///< sum of per-sequence total losses
    double log_prob = 0.0;   ///< sum of log p(X)
    double type_loss = 0.0;
    double time_loss = 0.0;
    std::size_t num_events = 0;
    double seconds = 0.0;
};

struct TrainResult {
    model::ModelParams params;  ///< last parameters whose loss and update were finite
    std::vector<EpochRecord> curve;
    std::size_t epochs_run = 0;
    bool early_stopped = false;
    bool aborted = false;
    std::string abort_reason;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam on -alpha1 log p + type loss + alpha2 time loss, averaged over
/// the batch. config.dims.num_types must cover every type in `data`.
[[nodiscard]] TrainResult train(std::span<const data::EventSequence> data,
                                const TrainConfig& config, const EpochCallback& on_epoch = {});
/// Same loop starting from the given parameters instead of a fresh initialisation.
[[nodiscard]] TrainResult train_from(model::ModelParams initial,
                                     std::span<const data::EventSequence> data,
                                     const TrainConfig& config,
                                     const EpochCallback& on_epoch = {});

[[nodiscard]] std::string curve_csv(std::span<const EpochRecord> curve);

struct EvalOptions {
    std::size_t substeps_per_segment = 8;
    bool marked_event_term = false;
    std::size_t workers = 1;

    static EvalOptions from(const TrainConfig& c) {
        return {c.substeps_per_segment, c.marked_event_term, c.workers};
    }
};

/// Log-likelihood with the integrated compensator and next-event metrics at
/// positions 2..N of every sequence.
[[nodiscard]] MetricsReport evaluate(const model::ModelParams& params,
                                     std::span<const data::EventSequence> data,
                                     const EvalOptions& options = {});

struct AblationReport {
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    std::size_t num_sequences = 0;
    std::size_t num_events = 0;
    double ode_log_likelihood = 0.0;
    double mc_log_likelihood = 0.0;
    double ode_per_event_log_likelihood = 0.0;
    double mc_per_event_log_likelihood = 0.0;
    double ode_nonevent = 0.0;  ///< sum of a(t_N)
    double mc_nonevent = 0.0;   ///< sum of the MC estimates
    double gap = 0.0;           ///< ode_log_likelihood - mc_log_likelihood
    /// |ode_nonevent - mc_nonevent| / ode_nonevent
    double relative_nonevent_gap = 0.0;
};

/// Scores every sequence twice: once with a(t_N) and once with the Monte Carlo
/// compensator drawn from the same solved trajectory.
[[nodiscard]] AblationReport ablate_integration(const model::ModelParams& params,
                                                std::span<const data::EventSequence> data,
                                                std::size_t n_samples, std::uint64_t seed,
                                                const EvalOptions& options = {});
[[nodiscard]] nlohmann::json to_json(const AblationReport& report);

class TrialError : public std::runtime_error {
public:
    TrialError(std::size_t trial, const std::string& what)
        : std::runtime_error("trial " + std::to_string(trial) + ": " + what), trial_(trial) {}
    [[nodiscard]] std::size_t trial() const noexcept { return trial_; }

private:
    std::size_t trial_;
};

/// Trial i trains with seed config.seed + i * seed_stride and evaluates on `test`.
[[nodiscard]] TrialSummary repeat_trials(std::span<const data::EventSequence> train_data,
                                         std::span<const data::EventSequence> test_data,
                                         const TrainConfig& config, std::size_t n_trials,
                                         std::uint64_t seed_stride = 1);

}  // namespace hpcde::train
