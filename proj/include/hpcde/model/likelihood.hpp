#pragma once

#include "hpcde/ad/graph.hpp"
#include "hpcde/data/event_sequence.hpp"

#include <span>
#include <vector>

namespace hpcde::model {

struct BoundModel;
struct Trajectory;

struct Intensity {
    ad::Var per_type;  ///< [K], each beta_k * log(1 + exp(w_k . h / beta_k))
    ad::Var total;     ///< scalar sum over types
};

/// Per-type softplus intensities. `log_beta` holds log(beta_k).
[[nodiscard]] Intensity intensity(ad::Var h, ad::Var weight, ad::Var log_beta);

/// sum_j log(event_intensity_j) - nonevent.
[[nodiscard]] double sequence_log_prob(std::span<const double> event_intensities,
                                       double nonevent);
[[nodiscard]] ad::Var sequence_log_prob(std::span<const ad::Var> event_intensities,
                                        ad::Var nonevent);

struct TypePrediction {
    ad::Var log_probs;       ///< log softmax(W_type h)
    std::vector<double> probs;
    std::size_t argmax = 0;  ///< ties go to the smallest index
};

[[nodiscard]] TypePrediction predict_type(ad::Var h, ad::Var type_weight);

struct TimePrediction {
    ad::Var interarrival;          ///< raw W_time h, supervised against tau
    double reported_interarrival;  ///< clamped at 0
    double next_time;              ///< t_j + reported_interarrival
};

[[nodiscard]] TimePrediction predict_time(ad::Var h, ad::Var time_weight, double current_time);

struct LossWeights {
    double alpha1 = 1.0;  ///< weight on -log p(X)
    double alpha2 = 1.0;  ///< weight on the squared inter-arrival error
    /// Score events with lambda_{k_j}(t_j) instead of the total intensity.
    bool marked_event_term = false;
};

/// One supervised next-event position: prediction made from h(t_{j-1}).
struct PositionPrediction {
    std::size_t true_type = 0;
    std::size_t predicted_type = 0;
    double true_interarrival = 0.0;
    double predicted_interarrival = 0.0;  ///< clamped report
};

struct LossTerms {
    ad::Var log_prob;   ///< log p(X)
    ad::Var type_loss;  ///< sum_{j>=2} -log p_j(k_j)
    ad::Var time_loss;  ///< sum_{j>=2} (tau_j - tau_hat_j)^2
    ad::Var total;      ///< -alpha1 log p + type + alpha2 time
    std::vector<double> event_intensities;
    std::vector<PositionPrediction> predictions;
};

/// All loss terms for one sequence given its solved trajectory. Sums run over
/// positions 2..N; the prediction made at t_N has no target and is skipped.
[[nodiscard]] LossTerms losses(const data::EventSequence& seq, const Trajectory& trajectory,
                               const BoundModel& model, const LossWeights& weights);

}  // namespace hpcde::model
