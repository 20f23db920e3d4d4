#include "hpcde/model/likelihood.hpp"

#include "hpcde/model/cde_engine.hpp"
#include "hpcde/model/params.hpp"

#include <array>
#include <cmath>

namespace hpcde::model {

Intensity intensity(ad::Var h, ad::Var weight, ad::Var log_beta) {
    auto& g = h.graph();
    const ad::Var per_type = g.softplus_beta(g.matmul(weight, h), log_beta);
    return {per_type, g.sum(per_type)};
}

double sequence_log_prob(std::span<const double> event_intensities, double nonevent) {
    double ll = 0.0;
    for (double l : event_intensities) {
        if (!(l > 0.0)) {
            throw std::domain_error("event intensity must be positive");
        }
        ll += std::log(l);
    }
    return ll - nonevent;
}

ad::Var sequence_log_prob(std::span<const ad::Var> event_intensities, ad::Var nonevent) {
    auto& g = nonevent.graph();
    std::vector<std::pair<double, ad::Var>> terms;
    terms.reserve(event_intensities.size() + 1);
    for (const auto& l : event_intensities) {
        terms.emplace_back(1.0, g.unary(ad::Op::log, l));
    }
    terms.emplace_back(-1.0, nonevent);
    return g.lincomb(terms);
}

TypePrediction predict_type(ad::Var h, ad::Var type_weight) {
    auto& g = h.graph();
    TypePrediction p;
    p.log_probs = g.log_softmax(g.matmul(type_weight, h));
    const auto lp = p.log_probs.value();
    p.probs.resize(lp.size());
    for (std::size_t k = 0; k < lp.size(); ++k) {
        p.probs[k] = std::exp(lp[k]);
        if (lp[k] > lp[p.argmax]) {
            p.argmax = k;
        }
    }
    return p;
}

TimePrediction predict_time(ad::Var h, ad::Var time_weight, double current_time) {
    auto& g = h.graph();
    const ad::Var tau = g.pick(g.matmul(time_weight, h), 0);
    const double reported = std::max(0.0, tau.item());
    return {tau, reported, current_time + reported};
}

LossTerms losses(const data::EventSequence& seq, const Trajectory& trajectory,
                 const BoundModel& model, const LossWeights& weights) {
    if (trajectory.knot_hidden.size() != seq.size()) {
        throw std::invalid_argument("trajectory has " +
                                    std::to_string(trajectory.knot_hidden.size()) +
                                    " knot states for a sequence of " +
                                    std::to_string(seq.size()) + " events");
    }
    auto& g = trajectory.nonevent.graph();
    LossTerms out;

    std::vector<ad::Var> event_terms;
    event_terms.reserve(seq.size());
    for (std::size_t j = 0; j < seq.size(); ++j) {
        const Intensity lam =
            intensity(trajectory.knot_hidden[j], model.intensity_weight, model.intensity_log_beta);
        const ad::Var term =
            weights.marked_event_term ? g.pick(lam.per_type, seq.events[j].type) : lam.total;
        event_terms.push_back(term);
        out.event_intensities.push_back(term.item());
    }
    out.log_prob = sequence_log_prob(event_terms, trajectory.nonevent);

    std::vector<std::pair<double, ad::Var>> type_terms;
    std::vector<std::pair<double, ad::Var>> time_terms;
    for (std::size_t j = 1; j < seq.size(); ++j) {
        const ad::Var h_prev = trajectory.knot_hidden[j - 1];
        const auto& target = seq.events[j];
        const double tau = target.time - seq.events[j - 1].time;

        const TypePrediction tp = predict_type(h_prev, model.type_weight);
        type_terms.emplace_back(-1.0, g.pick(tp.log_probs, target.type));

        const TimePrediction time = predict_time(h_prev, model.time_weight, seq.events[j - 1].time);
        const ad::Var err = g.lincomb(std::array{std::pair{1.0, time.interarrival},
                                                 std::pair{-1.0, g.constant_scalar(tau)}});
        time_terms.emplace_back(1.0, g.unary(ad::Op::square, err));

        out.predictions.push_back({target.type, tp.argmax, tau, time.reported_interarrival});
    }
    out.type_loss = type_terms.empty() ? g.constant_scalar(0.0) : g.lincomb(type_terms);
    out.time_loss = time_terms.empty() ? g.constant_scalar(0.0) : g.lincomb(time_terms);
    out.total = g.lincomb(std::array{std::pair{-weights.alpha1, out.log_prob},
                                     std::pair{1.0, out.type_loss},
                                     std::pair{weights.alpha2, out.time_loss}});
    return out;
}

}  // namespace hpcde::model
