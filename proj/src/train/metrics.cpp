#include "hpcde/train/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace hpcde::train {

ClassificationSummary summarize_predictions(std::span<const model::PositionPrediction> predictions,
                                            std::size_t num_types) {
    ClassificationSummary s;
    s.positions = predictions.size();
    if (predictions.empty()) {
        return s;
    }
    std::vector<std::size_t> tp(num_types, 0), fp(num_types, 0), fn(num_types, 0),
        support(num_types, 0);
    double sq = 0.0;
    std::size_t correct = 0;
    for (const auto& p : predictions) {
        if (p.true_type >= num_types || p.predicted_type >= num_types) {
            throw std::out_of_range("prediction type outside [0, " + std::to_string(num_types) +
                                    ")");
        }
        support[p.true_type] += 1;
        if (p.true_type == p.predicted_type) {
            ++correct;
            tp[p.true_type] += 1;
        } else {
            fp[p.predicted_type] += 1;
            fn[p.true_type] += 1;
        }
        const double d = p.predicted_interarrival - p.true_interarrival;
        sq += d * d;
    }
    const auto n = static_cast<double>(predictions.size());
    s.accuracy = static_cast<double>(correct) / n;
    s.rmse = std::sqrt(sq / n);

    double f1_sum = 0.0;
    for (std::size_t k = 0; k < num_types; ++k) {
        if (support[k] == 0) {
            continue;
        }
        s.classes_in_test += 1;
        if (tp[k] > 0) {
            s.classes_hit += 1;
        }
        const double denom = 2.0 * static_cast<double>(tp[k]) + static_cast<double>(fp[k] + fn[k]);
        f1_sum += denom > 0.0 ? 2.0 * static_cast<double>(tp[k]) / denom : 0.0;
    }
    s.macro_f1 = f1_sum / static_cast<double>(s.classes_in_test);
    return s;
}

std::vector<std::string> metric_names() {
    return {"total_log_likelihood", "per_event_log_likelihood", "accuracy", "rmse",
            "macro_f1", "classes_in_test", "classes_hit", "num_sequences", "num_events",
            "num_predictions", "wall_clock_seconds", "peak_memory_bytes"};
}

std::vector<double> metric_values(const MetricsReport& r) {
    return {r.total_log_likelihood,
            r.per_event_log_likelihood,
            r.accuracy,
            r.rmse,
            r.macro_f1,
            static_cast<double>(r.classes_in_test),
            static_cast<double>(r.classes_hit),
            static_cast<double>(r.num_sequences),
            static_cast<double>(r.num_events),
            static_cast<double>(r.num_predictions),
            r.wall_clock_seconds,
            static_cast<double>(r.peak_memory_bytes)};
}

nlohmann::json to_json(const MetricsReport& r) {
    return {
        {"total_log_likelihood", r.total_log_likelihood},
        {"per_event_log_likelihood", r.per_event_log_likelihood},
        {"accuracy", r.accuracy},
        {"rmse", r.rmse},
        {"macro_f1", r.macro_f1},
        {"classes_in_test", r.classes_in_test},
        {"classes_hit", r.classes_hit},
        {"num_sequences", r.num_sequences},
        {"num_events", r.num_events},
        {"num_predictions", r.num_predictions},
        {"wall_clock_seconds", r.wall_clock_seconds},
        {"peak_memory_bytes", r.peak_memory_bytes},
    };
}

TrialSummary aggregate(std::vector<MetricsReport> trials) {
    if (trials.empty()) {
        throw std::invalid_argument("aggregate needs at least one trial");
    }
    TrialSummary s;
    s.names = metric_names();
    const std::size_t m = s.names.size();
    s.mean.assign(m, 0.0);
    s.stddev.assign(m, 0.0);
    // Welford updates keep the mean exact, and the spread exactly 0, for identical trials.
    std::vector<double> m2(m, 0.0);
    double k = 0.0;
    for (const auto& t : trials) {
        k += 1.0;
        const auto v = metric_values(t);
        for (std::size_t i = 0; i < m; ++i) {
            const double d = v[i] - s.mean[i];
            s.mean[i] += d / k;
            m2[i] += d * (v[i] - s.mean[i]);
        }
    }
    if (trials.size() > 1) {
        for (std::size_t i = 0; i < m; ++i) {
            s.stddev[i] = std::sqrt(m2[i] / (k - 1.0));
        }
    }
    s.trials = std::move(trials);
    return s;
}

nlohmann::json to_json(const TrialSummary& s) {
    nlohmann::json mean = nlohmann::json::object();
    nlohmann::json sd = nlohmann::json::object();
    for (std::size_t i = 0; i < s.names.size(); ++i) {
        mean[s.names[i]] = s.mean[i];
        sd[s.names[i]] = s.stddev[i];
    }
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : s.trials) {
        trials.push_back(to_json(t));
    }
    return {{"mean", mean}, {"std", sd}, {"trials", trials}};
}

}  // namespace hpcde::train
