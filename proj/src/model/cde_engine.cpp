#include "hpcde/model/cde_engine.hpp"

#include "hpcde/model/likelihood.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>

namespace hpcde::model {

ad::Var vector_field(const BoundModel& model, ad::Var h) {
    auto& g = h.graph();
    ad::Var x = h;
    const std::size_t last = model.dims.field_layers - 1;
    for (std::size_t m = 0; m < last; ++m) {
        x = g.unary(ad::Op::elu, g.affine(model.field_weight[m], x, model.field_bias[m]));
    }
    x = g.unary(ad::Op::tanh, g.affine(model.field_weight[last], x, model.field_bias[last]));
    return g.reshape(x, {model.dims.hidden_dim, model.dims.channels()});
}

RateFunction model_rate(const BoundModel& model) {
    return [w = model.intensity_weight, lb = model.intensity_log_beta](ad::Var h, double) {
        return intensity(h, w, lb).total;
    };
}

AugmentedState init_state(ad::Var z1, const BoundModel& model) {
    if (z1.size() != model.dims.channels()) {
        throw PathError("initial knot has " + std::to_string(z1.size()) +
                        " channels, model expects " + std::to_string(model.dims.channels()));
    }
    auto& g = z1.graph();
    return {g.affine(model.init_weight, z1, model.init_bias), g.constant_scalar(0.0)};
}

namespace {

void check_finite(const AugmentedState& s, std::size_t segment) {
    auto bad = [](std::span<const double> v) {
        return std::any_of(v.begin(), v.end(), [](double x) { return !std::isfinite(x); });
    };
    if (bad(s.h.value()) || bad(s.a.value())) {
        throw ad::NumericalError("non-finite solver state in segment " + std::to_string(segment));
    }
}

}  // namespace

AugmentedState advance(const AugmentedState& start, ad::Var slope, double t0, double t1,
                       std::size_t steps, const BoundModel& model, const RateFunction& rate,
                       SolverMethod method, DenseSegment* dense) {
    if (steps == 0) {
        throw std::invalid_argument("advance: steps must be at least 1");
    }
    auto& g = start.h.graph();
    const double dt = (t1 - t0) / static_cast<double>(steps);
    auto hidden_rate = [&](ad::Var h) { return g.matmul(vector_field(model, h), slope); };

    AugmentedState s = start;
    if (dense) {
        dense->times.push_back(t0);
        dense->hidden.push_back(s.h);
        dense->accumulated.push_back(s.a);
    }
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = t0 + static_cast<double>(i) * dt;
        if (method == SolverMethod::euler) {
            const ad::Var dh = hidden_rate(s.h);
            const ad::Var da = rate(s.h, t);
            s = {g.lincomb(std::array{std::pair{1.0, s.h}, std::pair{dt, dh}}),
                 g.lincomb(std::array{std::pair{1.0, s.a}, std::pair{dt, da}})};
        } else {
            const double half = 0.5 * dt;
            const ad::Var k1h = hidden_rate(s.h);
            const ad::Var k1a = rate(s.h, t);
            const ad::Var h2 = g.lincomb(std::array{std::pair{1.0, s.h}, std::pair{half, k1h}});
            const ad::Var k2h = hidden_rate(h2);
            const ad::Var k2a = rate(h2, t + half);
            const ad::Var h3 = g.lincomb(std::array{std::pair{1.0, s.h}, std::pair{half, k2h}});
            const ad::Var k3h = hidden_rate(h3);
            const ad::Var k3a = rate(h3, t + half);
            const ad::Var h4 = g.lincomb(std::array{std::pair{1.0, s.h}, std::pair{dt, k3h}});
            const ad::Var k4h = hidden_rate(h4);
            const ad::Var k4a = rate(h4, t + dt);
            const double w1 = dt / 6.0;
            const double w2 = dt / 3.0;
            s = {g.lincomb(std::array{std::pair{1.0, s.h}, std::pair{w1, k1h}, std::pair{w2, k2h},
                                      std::pair{w2, k3h}, std::pair{w1, k4h}}),
                 g.lincomb(std::array{std::pair{1.0, s.a}, std::pair{w1, k1a}, std::pair{w2, k2a},
                                      std::pair{w2, k3a}, std::pair{w1, k4a}})};
        }
        if (dense) {
            dense->times.push_back(i + 1 == steps ? t1 : t0 + static_cast<double>(i + 1) * dt);
            dense->hidden.push_back(s.h);
            dense->accumulated.push_back(s.a);
        }
    }
    return s;
}

Trajectory integrate_from(const AugmentedState& initial, const ControlPath& path,
                          const BoundModel& model, const SolverConfig& solver,
                          const RateFunction& rate) {
    if (solver.substeps_per_segment == 0) {
        throw std::invalid_argument("substeps_per_segment must be at least 1");
    }
    Trajectory traj;
    traj.knot_hidden.reserve(path.num_knots());
    AugmentedState s = initial;
    check_finite(s, 0);
    traj.knot_hidden.push_back(s.h);
    for (std::size_t seg = 0; seg < path.num_segments(); ++seg) {
        DenseSegment* dense = nullptr;
        if (solver.record_dense) {
            traj.dense.emplace_back();
            dense = &traj.dense.back();
        }
        s = advance(s, path.segment_slope(seg), path.knot_time(seg), path.knot_time(seg + 1),
                    solver.substeps_per_segment, model, rate, solver.method, dense);
        check_finite(s, seg);
        traj.knot_hidden.push_back(s.h);
    }
    traj.nonevent = s.a;
    return traj;
}

Trajectory integrate(const ControlPath& path, const BoundModel& model, const SolverConfig& solver,
                     const RateFunction& rate) {
    return integrate_from(init_state(path.knot_value(0), model), path, model, solver, rate);
}

Trajectory integrate(const ControlPath& path, const BoundModel& model,
                     const SolverConfig& solver) {
    return integrate(path, model, solver, model_rate(model));
}

double mc_nonevent(const Trajectory& trajectory, const RateFunction& rate, std::size_t n_samples,
                   std::uint64_t seed) {
    if (n_samples == 0) {
        throw std::invalid_argument("mc_nonevent: n_samples must be at least 1");
    }
    const auto& dense = trajectory.dense;
    if (dense.empty()) {
        if (trajectory.knot_hidden.size() > 1) {
            throw std::invalid_argument("mc_nonevent needs a trajectory recorded with record_dense");
        }
        return 0.0;
    }
    std::vector<double> starts;
    starts.reserve(dense.size());
    for (const auto& seg : dense) {
        starts.push_back(seg.times.front());
    }
    const double t_first = dense.front().times.front();
    const double t_last = dense.back().times.back();

    std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       0x3c3cu};
    std::mt19937_64 rng(sseq);
    std::uniform_real_distribution<double> unif(t_first, t_last);

    std::map<std::pair<std::size_t, std::size_t>, double> cache;
    double total = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double u = unif(rng);
        auto it = std::upper_bound(starts.begin(), starts.end(), u);
        const std::size_t s = it == starts.begin() ? 0 : static_cast<std::size_t>(it - starts.begin()) - 1;
        const auto& seg = dense[s];
        const std::size_t steps = seg.times.size() - 1;
        const double width = seg.times.back() - seg.times.front();
        const double pos = (u - seg.times.front()) / width * static_cast<double>(steps);
        const auto nearest = std::min(steps, static_cast<std::size_t>(std::llround(std::max(0.0, pos))));
        auto [slot, inserted] = cache.try_emplace({s, nearest}, 0.0);
        if (inserted) {
            slot->second = rate(seg.hidden[nearest], seg.times[nearest]).item();
        }
        total += slot->second;
    }
    return (t_last - t_first) * total / static_cast<double>(n_samples);
}

}  // namespace hpcde::model
