#include "fixtures.hpp"

#include "hpcde/model/hp_cde.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fixture {

using namespace hpcde;

model::ModelDims small_dims() {
    model::ModelDims d;
    d.num_types = 3;
    d.embed_dim = 4;
    d.hidden_dim = 8;
    d.field_layers = 4;
    d.field_width = 8;
    return d;
}

model::ModelParams random_params(const model::ModelDims& dims, std::uint64_t seed, double scale) {
    auto p = model::ModelParams::zeros(dims);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, scale);
    for (auto& t : p.tensors()) {
        for (auto& x : t.storage()) {
            x = n(rng);
        }
    }
    return p;
}

double forward(const model::ModelParams& params, const data::EventSequence& seq,
               const model::SolverConfig& solver, const model::LossWeights& weights, Root root) {
    ad::Graph g;
    const auto bound = model::bind(g, params, false);
    const auto r = model::run_sequence(bound, seq, solver, weights);
    return root == Root::total_loss ? r.loss.total.item() : r.trajectory.nonevent.item();
}

double GradCheck::fraction_below(double tol) const {
    if (rel_error.empty()) {
        return 1.0;
    }
    const auto n = std::count_if(rel_error.begin(), rel_error.end(),
                                 [tol](double e) { return e < tol; });
    return static_cast<double>(n) / static_cast<double>(rel_error.size());
}

double GradCheck::max_error() const {
    return rel_error.empty() ? 0.0 : *std::max_element(rel_error.begin(), rel_error.end());
}

std::size_t GradCheck::worst() const {
    return static_cast<std::size_t>(std::max_element(rel_error.begin(), rel_error.end()) -
                                    rel_error.begin());
}

GradCheck check_gradients(const model::ModelParams& params, const data::EventSequence& seq,
                          const model::SolverConfig& solver, const model::LossWeights& weights,
                          Root root, double step, double floor) {
    std::vector<ad::Tensor> analytic;
    {
        ad::Graph g;
        const auto bound = model::bind(g, params, true);
        const auto r = model::run_sequence(bound, seq, solver, weights);
        g.backward(root == Root::total_loss ? r.loss.total : r.trajectory.nonevent);
        analytic = model::collect_grads(g, bound);
    }
    GradCheck out;
    model::ModelParams probe = params;
    for (std::size_t ti = 0; ti < probe.tensors().size(); ++ti) {
        auto& t = probe.tensors()[ti];
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double orig = t[i];
            t[i] = orig + step;
            const double up = forward(probe, seq, solver, weights, root);
            t[i] = orig - step;
            const double dn = forward(probe, seq, solver, weights, root);
            t[i] = orig;
            const double fd = (up - dn) / (2.0 * step);
            const double an = analytic[ti][i];
            out.where.push_back(std::string(probe.names()[ti]) + "[" + std::to_string(i) + "]");
            out.analytic.push_back(an);
            out.numeric.push_back(fd);
            out.rel_error.push_back(std::abs(an - fd) /
                                    std::max({std::abs(an), std::abs(fd), floor}));
        }
    }
    return out;
}

double frozen_hawkes_accumulator(const data::EventSequence& seq, const data::ExpHawkesParams& p,
                                 std::size_t substeps, model::SolverMethod method) {
    std::vector<double> knots{0.0};
    for (const auto& e : seq.events) {
        if (e.time > knots.back() && e.time < p.horizon) {
            knots.push_back(e.time);
        }
    }
    knots.push_back(p.horizon);

    // The hidden state only rides along; a zero model keeps it at 0.
    model::ModelDims dims;
    dims.num_types = p.num_types();
    dims.embed_dim = 2;
    dims.hidden_dim = 2;
    dims.field_layers = 1;
    dims.field_width = 2;
    ad::Graph g;
    const auto bound = model::bind(g, model::ModelParams::zeros(dims), false);
    const auto slope = g.constant(ad::Tensor::vector({0.0, 0.0, 1.0}));

    model::AugmentedState s{g.constant(ad::Tensor::vector({0.0, 0.0})), g.constant_scalar(0.0)};
    for (std::size_t seg = 0; seg + 1 < knots.size(); ++seg) {
        const double start = knots[seg];
        const model::RateFunction rate = [&](ad::Var, double t) {
            double total = 0.0;
            for (std::size_t k = 0; k < p.num_types(); ++k) {
                total += p.mu[k];
                for (const auto& e : seq.events) {
                    if (e.time <= start) {
                        total += p.alpha[k][e.type] * std::exp(-p.decay[k][e.type] * (t - e.time));
                    }
                }
            }
            return g.constant_scalar(total);
        };
        s = model::advance(s, slope, start, knots[seg + 1], substeps, bound, rate, method);
    }
    return s.a.item();
}

}  // namespace fixture
