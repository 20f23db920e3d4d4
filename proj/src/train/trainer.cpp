#include "hpcde/train/trainer.hpp"

#include "hpcde/ad/adam.hpp"
#include "hpcde/data/batching.hpp"
#include "hpcde/model/hp_cde.hpp"
#include "hpcde/train/parallel.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace hpcde::train {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_data(std::span<const data::EventSequence> seqs, std::size_t num_types) {
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        const std::string defect = data::describe_defect(seqs[i], num_types);
        if (!defect.empty()) {
            throw data::DataError("sequence " + std::to_string(i) + ": " + defect);
        }
    }
}

struct StepOutcome {
    std::vector<ad::Tensor> grads;
    double loss = 0.0;
    double log_prob = 0.0;
    double type_loss = 0.0;
    double time_loss = 0.0;
    std::string error;
};

ad::Graph& scratch_graph() {
    thread_local ad::Graph graph;
    graph.clear();
    return graph;
}

StepOutcome forward_backward(const model::ModelParams& params, const data::EventSequence& seq,
                             const TrainConfig& config) {
    StepOutcome out;
    ad::Graph& g = scratch_graph();
    const model::BoundModel bm = model::bind(g, params, true);
    try {
        const auto r = model::run_sequence(bm, seq, config.solver(), config.loss_weights());
        out.loss = r.loss.total.item();
        out.log_prob = r.loss.log_prob.item();
        out.type_loss = r.loss.type_loss.item();
        out.time_loss = r.loss.time_loss.item();
        if (!std::isfinite(out.loss)) {
            out.error = "non-finite loss";
            return out;
        }
        g.backward(r.loss.total);
        out.grads = model::collect_grads(g, bm);
    } catch (const ad::NumericalError& e) {
        out.error = e.what();
    }
    return out;
}

bool all_finite(std::span<const ad::Tensor> ts) {
    for (const auto& t : ts) {
        if (!t.all_finite()) {
            return false;
        }
    }
    return true;
}

}  // namespace

EarlyStopping::EarlyStopping(std::size_t patience)
    : patience_(patience), best_(std::numeric_limits<double>::infinity()) {
    if (patience == 0) {
        throw model::ConfigError("patience must be at least 1");
    }
}

bool EarlyStopping::update(double loss) {
    if (loss < best_) {
        best_ = loss;
        bad_ = 0;
    } else {
        ++bad_;
    }
    return stopped();
}

TrainResult train(std::span<const data::EventSequence> data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    config.validate();
    return train_from(model::ModelParams::initialize(config.dims, config.seed), data, config,
                      on_epoch);
}

TrainResult train_from(model::ModelParams initial, std::span<const data::EventSequence> data,
                       const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (data.empty()) {
        throw data::DataError("training set is empty");
    }
    if (!(initial.dims() == config.dims)) {
        throw model::ConfigError("initial parameters do not match the configured dimensions");
    }
    check_data(data, config.dims.num_types);

    TrainResult result;
    result.params = std::move(initial);
    if (config.max_iter == 0) {
        return result;
    }

    model::ModelParams& params = result.params;
    ad::AdamState adam({config.learning_rate, config.weight_decay}, params.tensors());
    const data::BatchStream stream(data, config.batch_size, config.seed);
    EarlyStopping stopper(config.patience);

    for (std::size_t epoch = 0; epoch < config.max_iter; ++epoch) {
        const auto start = Clock::now();
        EpochRecord rec;
        rec.epoch = epoch;
        for (const auto& indices : stream.epoch_order(epoch)) {
            const data::Batch batch = data::make_batch(data, indices);
            std::vector<StepOutcome> outcomes(batch.size());
            parallel_for(batch.size(), config.workers, [&](std::size_t r) {
                outcomes[r] = forward_backward(params, batch.sequence(r), config);
            });

            std::vector<ad::Tensor> grads;
            grads.reserve(params.tensors().size());
            for (const auto& t : params.tensors()) {
                grads.push_back(ad::Tensor::zeros_like(t));
            }
            for (std::size_t r = 0; r < outcomes.size(); ++r) {
                const auto& o = outcomes[r];
                if (!o.error.empty()) {
                    std::ostringstream os;
                    os << "epoch " << epoch << ", sequence " << batch.source_index[r] << ": "
                       << o.error;
                    result.aborted = true;
                    result.abort_reason = os.str();
                    return result;
                }
                for (std::size_t p = 0; p < grads.size(); ++p) {
                    auto dst = grads[p].data();
                    const auto src = o.grads[p].data();
                    for (std::size_t i = 0; i < dst.size(); ++i) {
                        dst[i] += src[i];
                    }
                }
                rec.loss += o.loss;
                rec.log_prob += o.log_prob;
                rec.type_loss += o.type_loss;
                rec.time_loss += o.time_loss;
                rec.num_events += batch.lengths[r];
            }
            const double inv = 1.0 / static_cast<double>(batch.size());
            for (auto& g : grads) {
                for (double& x : g.data()) {
                    x *= inv;
                }
            }
            if (!all_finite(grads)) {
                result.aborted = true;
                result.abort_reason = "epoch " + std::to_string(epoch) + ": non-finite gradient";
                return result;
            }
            model::ModelParams before = params;
            ad::adam_step(params.tensors(), grads, adam);
            if (!all_finite(params.tensors())) {
                params = std::move(before);
                result.aborted = true;
                result.abort_reason = "epoch " + std::to_string(epoch) + ": non-finite update";
                return result;
            }
        }
        rec.seconds = seconds_since(start);
        result.curve.push_back(rec);
        result.epochs_run = epoch + 1;
        if (on_epoch) {
            on_epoch(rec);
        }
        if (stopper.update(rec.loss)) {
            result.early_stopped = true;
            break;
        }
    }
    return result;
}

std::string curve_csv(std::span<const EpochRecord> curve) {
    std::ostringstream os;
    os.precision(17);
    os << "epoch,loss,log_prob,per_event_log_prob,type_loss,time_loss,num_events,seconds\n";
    for (const auto& r : curve) {
        const double per_event =
            r.num_events ? r.log_prob / static_cast<double>(r.num_events) : 0.0;
        os << r.epoch << ',' << r.loss << ',' << r.log_prob << ',' << per_event << ','
           << r.type_loss << ',' << r.time_loss << ',' << r.num_events << ',' << r.seconds
           << '\n';
    }
    return os.str();
}

namespace {

struct EvalOutcome {
    double log_prob = 0.0;
    std::vector<model::PositionPrediction> predictions;
    std::size_t bytes = 0;
};

void check_eval_inputs(const model::ModelParams& params,
                       std::span<const data::EventSequence> data) {
    if (data.empty()) {
        throw data::DataError("evaluation set is empty");
    }
    check_data(data, params.dims().num_types);
}

}  // namespace

MetricsReport evaluate(const model::ModelParams& params, std::span<const data::EventSequence> data,
                       const EvalOptions& options) {
    check_eval_inputs(params, data);
    const auto start = Clock::now();
    const model::SolverConfig solver{options.substeps_per_segment, model::SolverMethod::rk4,
                                     false};
    const model::LossWeights weights{1.0, 1.0, options.marked_event_term};

    std::vector<EvalOutcome> outcomes(data.size());
    parallel_for(data.size(), options.workers, [&](std::size_t i) {
        ad::Graph& g = scratch_graph();
        const model::BoundModel bm = model::bind(g, params, false);
        auto r = model::run_sequence(bm, data[i], solver, weights);
        outcomes[i].log_prob = r.loss.log_prob.item();
        outcomes[i].predictions = std::move(r.loss.predictions);
        outcomes[i].bytes = g.bytes();
    });

    MetricsReport report;
    std::vector<model::PositionPrediction> all;
    for (std::size_t i = 0; i < data.size(); ++i) {
        report.total_log_likelihood += outcomes[i].log_prob;
        report.num_events += data[i].size();
        report.peak_memory_bytes = std::max(report.peak_memory_bytes, outcomes[i].bytes);
        all.insert(all.end(), outcomes[i].predictions.begin(), outcomes[i].predictions.end());
    }
    report.num_sequences = data.size();
    report.per_event_log_likelihood =
        report.total_log_likelihood / static_cast<double>(report.num_events);
    const auto cls = summarize_predictions(all, params.dims().num_types);
    report.accuracy = cls.accuracy;
    report.rmse = cls.rmse;
    report.macro_f1 = cls.macro_f1;
    report.classes_in_test = cls.classes_in_test;
    report.classes_hit = cls.classes_hit;
    report.num_predictions = cls.positions;
    report.wall_clock_seconds = seconds_since(start);
    return report;
}

AblationReport ablate_integration(const model::ModelParams& params,
                                  std::span<const data::EventSequence> data,
                                  std::size_t n_samples, std::uint64_t seed,
                                  const EvalOptions& options) {
    check_eval_inputs(params, data);
    if (n_samples == 0) {
        throw std::invalid_argument("ablation needs at least one Monte Carlo sample");
    }
    const model::SolverConfig solver{options.substeps_per_segment, model::SolverMethod::rk4,
                                     true};
    const model::LossWeights weights{1.0, 1.0, options.marked_event_term};

    struct Pair {
        double event_term = 0.0;
        double ode = 0.0;
        double mc = 0.0;
    };
    std::vector<Pair> pairs(data.size());
    parallel_for(data.size(), options.workers, [&](std::size_t i) {
        ad::Graph& g = scratch_graph();
        const model::BoundModel bm = model::bind(g, params, false);
        const auto r = model::run_sequence(bm, data[i], solver, weights);
        for (double l : r.loss.event_intensities) {
            pairs[i].event_term += std::log(l);
        }
        pairs[i].ode = r.trajectory.nonevent.item();
        pairs[i].mc = model::mc_nonevent(r.trajectory, model::model_rate(bm), n_samples,
                                         seed + 0x9e3779b97f4a7c15ULL * (i + 1));
    });

    AblationReport rep;
    rep.n_samples = n_samples;
    rep.seed = seed;
    rep.num_sequences = data.size();
    double events = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        rep.num_events += data[i].size();
        events += pairs[i].event_term;
        rep.ode_nonevent += pairs[i].ode;
        rep.mc_nonevent += pairs[i].mc;
    }
    rep.ode_log_likelihood = events - rep.ode_nonevent;
    rep.mc_log_likelihood = events - rep.mc_nonevent;
    const auto n = static_cast<double>(rep.num_events);
    rep.ode_per_event_log_likelihood = rep.ode_log_likelihood / n;
    rep.mc_per_event_log_likelihood = rep.mc_log_likelihood / n;
    rep.gap = rep.ode_log_likelihood - rep.mc_log_likelihood;
    rep.relative_nonevent_gap =
        rep.ode_nonevent > 0.0 ? std::abs(rep.ode_nonevent - rep.mc_nonevent) / rep.ode_nonevent
                               : std::abs(rep.ode_nonevent - rep.mc_nonevent);
    return rep;
}

nlohmann::json to_json(const AblationReport& r) {
    return {
        {"n_samples", r.n_samples},
        {"seed", r.seed},
        {"num_sequences", r.num_sequences},
        {"num_events", r.num_events},
        {"ode_log_likelihood", r.ode_log_likelihood},
        {"mc_log_likelihood", r.mc_log_likelihood},
        {"ode_per_event_log_likelihood", r.ode_per_event_log_likelihood},
        {"mc_per_event_log_likelihood", r.mc_per_event_log_likelihood},
        {"ode_nonevent", r.ode_nonevent},
        {"mc_nonevent", r.mc_nonevent},
        {"gap", r.gap},
        {"relative_nonevent_gap", r.relative_nonevent_gap},
    };
}

TrialSummary repeat_trials(std::span<const data::EventSequence> train_data,
                           std::span<const data::EventSequence> test_data,
                           const TrainConfig& config, std::size_t n_trials,
                           std::uint64_t seed_stride) {
    if (n_trials == 0) {
        throw model::ConfigError("n_trials must be at least 1");
    }
    std::vector<MetricsReport> reports;
    for (std::size_t i = 0; i < n_trials; ++i) {
        try {
            TrainConfig c = config;
            c.seed = config.seed + i * seed_stride;
            const TrainResult r = train(train_data, c);
            if (r.aborted) {
                throw ad::NumericalError(r.abort_reason);
            }
            reports.push_back(evaluate(r.params, test_data, EvalOptions::from(c)));
        } catch (const std::exception& e) {
            throw TrialError(i, e.what());
        }
    }
    return aggregate(std::move(reports));
}

}  // namespace hpcde::train
