#pragma once

#include "hpcde/data/event_sequence.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace hpcde::data {

using Matrix = std::vector<std::vector<double>>;

/// Multivariate Hawkes process with exponential kernels:
///   lambda_k(t) = mu_k + sum_{t_j < t} alpha[k][k_j] * exp(-decay[k][k_j] * (t - t_j))
/// `alpha[k][l]` is the jump in type-k intensity caused by a type-l event.
struct ExpHawkesParams {
    std::vector<double> mu;
    Matrix alpha;
    Matrix decay;
    double horizon = 0.0;

    [[nodiscard]] std::size_t num_types() const noexcept { return mu.size(); }

    /// Uniform decay, self-excitation only: alpha = diag(self_alpha).
    static ExpHawkesParams self_exciting(std::vector<double> mu, double self_alpha, double decay,
                                         double horizon);
};

/// Spectral radius of the branching matrix alpha / decay.
[[nodiscard]] double branching_ratio(const ExpHawkesParams& params);

/// Throws DataError on malformed or non-stationary parameters.
void validate_params(const ExpHawkesParams& params);

/// Ogata thinning on [0, horizon]. Sequence i draws from its own stream derived
/// from (seed, i), so output is independent of generation order.
[[nodiscard]] std::vector<EventSequence> generate_hawkes(const ExpHawkesParams& params,
                                                         std::size_t n_sequences,
                                                         std::uint64_t seed);

/// Per-type intensities at t given events strictly before t.
[[nodiscard]] std::vector<double> exp_hawkes_intensity(const EventSequence& seq,
                                                       const ExpHawkesParams& params, double t);

/// Closed-form integral of the total intensity over [from, to].
[[nodiscard]] double exp_hawkes_compensator(const EventSequence& seq,
                                            const ExpHawkesParams& params, double from,
                                            double to);

/// Marked log-likelihood on [0, horizon]:
///   sum_j log lambda_{k_j}(t_j-) - Lambda(horizon).
[[nodiscard]] double exact_exp_hawkes_loglik(const EventSequence& seq,
                                             const ExpHawkesParams& params);

/// The same process scored the way the neural model scores a sequence: total
/// (unmarked) intensity at each event and the compensator over [t_1, t_N].
[[nodiscard]] double exp_hawkes_event_span_loglik(const EventSequence& seq,
                                                  const ExpHawkesParams& params);

[[nodiscard]] nlohmann::json params_to_json(const ExpHawkesParams& params);
[[nodiscard]] ExpHawkesParams params_from_json(const nlohmann::json& doc);

}  // namespace hpcde::data
