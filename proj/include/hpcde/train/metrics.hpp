#pragma once

#include "hpcde/model/likelihood.hpp"

#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <vector>

namespace hpcde::train {

struct ClassificationSummary {
    double accuracy = 0.0;
    double rmse = 0.0;
    double macro_f1 = 0.0;
    std::size_t classes_in_test = 0;
    std::size_t classes_hit = 0;
    std::size_t positions = 0;
};

/// Accuracy, inter-arrival RMSE and macro-F1 over the supplied positions. F1 is
/// averaged over the classes that occur among the true labels.
[[nodiscard]] ClassificationSummary summarize_predictions(
    std::span<const model::PositionPrediction> predictions, std::size_t num_types);

struct MetricsReport {
    double total_log_likelihood = 0.0;
    double per_event_log_likelihood = 0.0;
    double accuracy = 0.0;
    double rmse = 0.0;
    double macro_f1 = 0.0;
    std::size_t classes_in_test = 0;
    std::size_t classes_hit = 0;
    std::size_t num_sequences = 0;
    std::size_t num_events = 0;
    std::size_t num_predictions = 0;
    double wall_clock_seconds = 0.0;
    /// Largest tape held by any single sequence evaluation, in bytes.
    std::size_t peak_memory_bytes = 0;
};

[[nodiscard]] nlohmann::json to_json(const MetricsReport& report);
[[nodiscard]] std::vector<std::string> metric_names();
[[nodiscard]] std::vector<double> metric_values(const MetricsReport& report);

/// Mean and sample standard deviation (0 for a single trial) per metric.
struct TrialSummary {
    std::vector<MetricsReport> trials;
    std::vector<std::string> names;
    std::vector<double> mean;
    std::vector<double> stddev;
};

[[nodiscard]] TrialSummary aggregate(std::vector<MetricsReport> trials);
[[nodiscard]] nlohmann::json to_json(const TrialSummary& summary);

}  // namespace hpcde::train
