#include "hpcde/model/cde_engine.hpp"
#include "hpcde/model/hp_cde.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hpcde;
using model::SolverMethod;

namespace {

// Compensator implied by the closed-form log-likelihood: sum log lambda - LL.
double implied_compensator(const data::EventSequence& seq, const data::ExpHawkesParams& p) {
    double logs = 0.0;
    for (const auto& e : seq.events) {
        logs += std::log(oracle::hawkes_intensity(seq, p, e.time)[e.type]);
    }
    return logs - data::exact_exp_hawkes_loglik(seq, p);
}

data::ExpHawkesParams example_process() {
    return data::ExpHawkesParams::self_exciting({0.5}, 0.8, 1.0, 3.0);
}

const data::EventSequence example_sequence{{{0, 1.0}, {0, 2.0}}};

model::ControlPath unit_path(ad::Graph& g, std::vector<double> times, std::size_t dz) {
    std::vector<model::EmbeddedEvent> knots;
    for (std::size_t j = 0; j < times.size(); ++j) {
        std::vector<double> z(dz);
        for (std::size_t c = 0; c < dz; ++c) {
            z[c] = std::sin(1.3 * static_cast<double>(j) + 0.7 * static_cast<double>(c));
        }
        knots.push_back({g.constant(ad::Tensor::vector(z)), times[j]});
    }
    return model::build_path(knots);
}

}  // namespace

TEST(InitState, ZeroMapGivesZeroState) {
    const auto dims = fixture::small_dims();
    ad::Graph g;
    const auto bound = model::bind(g, model::ModelParams::zeros(dims), false);
    const auto path = unit_path(g, {0.5, 1.0}, dims.embed_dim);
    const auto s = model::init_state(path.knot_value(0), bound);
    for (double v : s.h.value()) {
        EXPECT_EQ(v, 0.0);
    }
    EXPECT_EQ(s.a.item(), 0.0);
}

TEST(InitState, AccumulatorStartsAtZeroAndIsDeterministic) {
    const auto dims = fixture::small_dims();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ad::Graph g;
        const auto bound = model::bind(g, fixture::random_params(dims, seed), false);
        const auto path = unit_path(g, {0.5, 1.0}, dims.embed_dim);
        const auto s1 = model::init_state(path.knot_value(0), bound);
        const auto s2 = model::init_state(path.knot_value(0), bound);
        EXPECT_EQ(s1.a.item(), 0.0);
        EXPECT_EQ(s1.h.tensor(), s2.h.tensor());
    }
}

TEST(InitState, DimensionMismatchRejected) {
    const auto dims = fixture::small_dims();
    ad::Graph g;
    const auto bound = model::bind(g, model::ModelParams::zeros(dims), false);
    EXPECT_THROW((void)model::init_state(g.constant(ad::Tensor::vector({1, 2})), bound),
                 model::PathError);
}

TEST(Integrate, PolynomialRateIsExact) {
    const auto dims = fixture::small_dims();
    ad::Graph g;
    const auto bound = model::bind(g, fixture::random_params(dims, 1), false);
    const auto path = unit_path(g, {0.0, 1.0, 2.0}, dims.embed_dim);
    model::SolverConfig solver;
    solver.substeps_per_segment = 4;
    const model::RateFunction linear = [&](ad::Var, double t) { return g.constant_scalar(t); };
    // Exact up to rounding: the dt/6 and dt/3 weights are not binary fractions.
    EXPECT_NEAR(model::integrate(path, bound, solver, linear).nonevent.item(), 2.0, 1e-14);
    const model::RateFunction cubic = [&](ad::Var, double t) {
        return g.constant_scalar(t * t * t);
    };
    EXPECT_NEAR(model::integrate(path, bound, solver, cubic).nonevent.item(), 4.0, 1e-14);
}

TEST(Integrate, ZeroFieldKeepsHiddenConstant) {
    const auto dims = fixture::small_dims();
    auto params = fixture::random_params(dims, 2);
    const std::string last = "field." + std::to_string(dims.field_layers - 1);
    params.get(last + ".weight") = ad::Tensor(params.get(last + ".weight").shape());
    params.get(last + ".bias") = ad::Tensor(params.get(last + ".bias").shape());
    ad::Graph g;
    const auto bound = model::bind(g, params, false);
    const auto path = unit_path(g, {0.0, 0.4, 1.7, 2.0}, dims.embed_dim);
    const auto traj = model::integrate(path, bound, {});
    for (const auto& h : traj.knot_hidden) {
        EXPECT_EQ(h.tensor(), traj.knot_hidden.front().tensor());
    }
}

TEST(Integrate, FrozenHawkesMatchesClosedForm) {
    const auto p = example_process();
    const double oracle_value = implied_compensator(example_sequence, p);
    const double expected = 1.5 + 0.8 * (1 - std::exp(-2.0)) + 0.8 * (1 - std::exp(-1.0));
    ASSERT_NEAR(oracle_value, expected, 1e-12);
    const double a = fixture::frozen_hawkes_accumulator(example_sequence, p, 16, SolverMethod::rk4);
    EXPECT_LT(oracle::relative_error(a, oracle_value), 1e-6);
}

TEST(Integrate, FrozenHawkesFourthOrder) {
    data::ExpHawkesParams p;
    p.mu = {0.2, 0.1, 0.3};
    p.alpha = {{0.3, 0.1, 0.0}, {0.2, 0.2, 0.1}, {0.0, 0.3, 0.25}};
    p.decay = {{1.0, 2.0, 0.5}, {1.5, 0.8, 1.0}, {2.0, 1.0, 1.2}};
    p.horizon = 10.0;
    const auto seq = data::generate_hawkes(p, 1, 17).front();
    ASSERT_GE(seq.size(), 3u);
    const double truth = implied_compensator(seq, p);
    auto err = [&](std::size_t n, SolverMethod m) {
        return std::abs(fixture::frozen_hawkes_accumulator(seq, p, n, m) - truth);
    };
    EXPECT_LT(err(16, SolverMethod::rk4) / truth, 1e-6);
    for (std::size_t n : {2, 4, 8}) {
        const double order = std::log2(err(n, SolverMethod::rk4) / err(2 * n, SolverMethod::rk4));
        EXPECT_NEAR(order, 4.0, 0.5) << "substeps " << n;
    }
    // Euler is first order on the same problem; contrasts the estimator.
    const double euler = std::log2(err(16, SolverMethod::euler) / err(32, SolverMethod::euler));
    EXPECT_NEAR(euler, 1.0, 0.2);
}

TEST(Integrate, AccumulatorNondecreasing) {
    const auto dims = fixture::small_dims();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto params = fixture::random_params(dims, 100 + seed, 1.0);
        const auto seq = oracle::random_sequence(8, dims.num_types, seed);
        ad::Graph g;
        const auto bound = model::bind(g, params, false);
        model::SolverConfig solver;
        solver.record_dense = true;
        const auto r = model::run_sequence(bound, seq, solver, {});
        double prev = 0.0;
        for (const auto& seg : r.trajectory.dense) {
            for (const auto& a : seg.accumulated) {
                EXPECT_GE(a.item(), prev);
                prev = a.item();
            }
        }
        EXPECT_EQ(prev, r.trajectory.nonevent.item());
    }
}

TEST(Integrate, SplitSegmentReproducesSingleCall) {
    const auto dims = fixture::small_dims();
    ad::Graph g;
    const auto bound = model::bind(g, fixture::random_params(dims, 3), false);
    const auto path = unit_path(g, {0.0, 1.6}, dims.embed_dim);
    const auto start = model::init_state(path.knot_value(0), bound);
    const auto rate = model::model_rate(bound);
    const auto slope = path.segment_slope(0);
    const auto whole = model::advance(start, slope, 0.0, 1.6, 8, bound, rate, SolverMethod::rk4);
    const auto half = model::advance(start, slope, 0.0, 0.6, 3, bound, rate, SolverMethod::rk4);
    const auto rest = model::advance(half, slope, 0.6, 1.6, 5, bound, rate, SolverMethod::rk4);
    for (std::size_t i = 0; i < dims.hidden_dim; ++i) {
        EXPECT_NEAR(whole.h.value()[i], rest.h.value()[i], 1e-12);
    }
    EXPECT_NEAR(whole.a.item(), rest.a.item(), 1e-12);
}

TEST(Integrate, InitialConditionSensitivityScalesLinearly) {
    const auto dims = fixture::small_dims();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto params = fixture::random_params(dims, 40 + seed, 0.8);
        const auto seq = oracle::random_sequence(6, dims.num_types, 60 + seed);
        auto end_state = [&](double delta) {
            ad::Graph g;
            const auto bound = model::bind(g, params, false);
            const auto path = model::build_path(model::embed_sequence(seq, bound.embedding));
            auto s = model::init_state(path.knot_value(0), bound);
            std::vector<double> h(s.h.value().begin(), s.h.value().end());
            for (std::size_t i = 0; i < h.size(); ++i) {
                h[i] += delta * std::cos(static_cast<double>(i));
            }
            s.h = g.constant(ad::Tensor::vector(h));
            const auto traj = model::integrate_from(s, path, bound, {}, model::model_rate(bound));
            const auto v = traj.knot_hidden.back().value();
            return std::vector<double>(v.begin(), v.end());
        };
        const auto base = end_state(0.0);
        auto gain = [&](double delta) {
            const auto moved = end_state(delta);
            double norm = 0.0;
            for (std::size_t i = 0; i < base.size(); ++i) {
                norm += (moved[i] - base[i]) * (moved[i] - base[i]);
            }
            return std::sqrt(norm) / delta;
        };
        const double c4 = gain(1e-4);
        const double c5 = gain(1e-5);
        EXPECT_TRUE(std::isfinite(c4));
        EXPECT_GT(c4, 0.0);
        EXPECT_LT(oracle::relative_error(c4, c5), 1e-2) << "seed " << seed;
    }
}

TEST(Integrate, SingleEventHasNoIntegral) {
    const auto dims = fixture::small_dims();
    ad::Graph g;
    const auto bound = model::bind(g, fixture::random_params(dims, 4), false);
    const auto r = model::run_sequence(bound, data::EventSequence{{{1, 3.0}}}, {}, {});
    EXPECT_EQ(r.trajectory.knot_hidden.size(), 1u);
    EXPECT_EQ(r.trajectory.nonevent.item(), 0.0);
    EXPECT_TRUE(r.loss.predictions.empty());
    EXPECT_EQ(r.loss.type_loss.item(), 0.0);
    EXPECT_EQ(r.loss.time_loss.item(), 0.0);
}

TEST(Integrate, NonFiniteStateNamesSegment) {
    const auto dims = fixture::small_dims();
    ad::Graph g;
    const auto bound = model::bind(g, fixture::random_params(dims, 5), false);
    const auto path = unit_path(g, {0.0, 1.0, 2.0, 3.0, 4.0}, dims.embed_dim);
    const model::RateFunction rate = [&](ad::Var, double t) {
        return g.constant_scalar(t > 2.5 ? std::nan("") : 1.0);
    };
    try {
        (void)model::integrate(path, bound, {}, rate);
        FAIL() << "expected a numerical error";
    } catch (const ad::NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("segment 2"), std::string::npos) << e.what();
    }
}

TEST(Integrate, GraphForwardMatchesReference) {
    const auto dims = fixture::small_dims();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto params = fixture::random_params(dims, 200 + seed, 0.6);
        const auto seq = oracle::random_sequence(1 + seed % 7, dims.num_types, 300 + seed);
        for (bool marked : {false, true}) {
            const auto ref = oracle::reference_forward(params, seq, 6, 0.3, 0.02, marked);
            ad::Graph g;
            const auto bound = model::bind(g, params, false);
            model::SolverConfig solver;
            solver.substeps_per_segment = 6;
            const auto r = model::run_sequence(bound, seq, solver, {0.3, 0.02, marked});
            ASSERT_EQ(r.trajectory.knot_hidden.size(), ref.knot_hidden.size());
            for (std::size_t j = 0; j < ref.knot_hidden.size(); ++j) {
                for (std::size_t i = 0; i < dims.hidden_dim; ++i) {
                    EXPECT_NEAR(r.trajectory.knot_hidden[j].value()[i], ref.knot_hidden[j][i],
                                1e-12);
                }
            }
            EXPECT_LT(oracle::relative_error(r.trajectory.nonevent.item(), ref.nonevent), 1e-12);
            EXPECT_LT(oracle::relative_error(r.loss.log_prob.item(), ref.log_prob), 1e-12);
            EXPECT_LT(oracle::relative_error(r.loss.type_loss.item(), ref.type_loss), 1e-12);
            EXPECT_LT(oracle::relative_error(r.loss.time_loss.item(), ref.time_loss), 1e-12);
            EXPECT_LT(oracle::relative_error(r.loss.total.item(), ref.total), 1e-12);
        }
    }
}

TEST(Integrate, AccumulatorGradientMatchesFiniteDifferences) {
    const auto dims = fixture::small_dims();
    const auto params = fixture::random_params(dims, 7);
    const auto seq = oracle::random_sequence(5, dims.num_types, 8);
    const auto check = fixture::check_gradients(params, seq, {}, {}, fixture::Root::nonevent,
                                                1e-5, 1e-7);
    EXPECT_GE(check.fraction_below(1e-4), 0.99);
    EXPECT_LT(check.max_error(), 1e-3) << check.where[check.worst()];
}

TEST(MonteCarlo, ConstantRateIsExact) {
    const auto dims = fixture::small_dims();
    ad::Graph g;
    const auto bound = model::bind(g, fixture::random_params(dims, 9), false);
    const auto path = unit_path(g, {0.25, 1.0, 2.5, 4.0}, dims.embed_dim);
    model::SolverConfig solver;
    solver.record_dense = true;
    const model::RateFunction rate = [&](ad::Var, double) { return g.constant_scalar(0.75); };
    const auto traj = model::integrate(path, bound, solver, rate);
    for (std::size_t n : {1, 7, 100, 10000}) {
        EXPECT_DOUBLE_EQ(model::mc_nonevent(traj, rate, n, 3), 0.75 * 3.75);
    }
    EXPECT_DOUBLE_EQ(traj.nonevent.item(), 0.75 * 3.75);
}

TEST(MonteCarlo, ConvergesToSolverValue) {
    const auto dims = fixture::small_dims();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto params = model::ModelParams::initialize(dims, seed);
        const auto seq = oracle::random_sequence(20, dims.num_types, 500 + seed);
        ad::Graph g;
        const auto bound = model::bind(g, params, false);
        model::SolverConfig solver;
        solver.record_dense = true;
        const auto traj = model::run_sequence(bound, seq, solver, {}).trajectory;
        const double mc = model::mc_nonevent(traj, model::model_rate(bound), 10000, seed);
        EXPECT_LT(oracle::relative_error(mc, traj.nonevent.item()), 1e-2) << "seed " << seed;
    }
}

TEST(MonteCarlo, SeededAndReproducible) {
    const auto dims = fixture::small_dims();
    ad::Graph g;
    const auto bound = model::bind(g, fixture::random_params(dims, 10), false);
    model::SolverConfig solver;
    solver.record_dense = true;
    const auto traj =
        model::run_sequence(bound, oracle::random_sequence(6, 3, 1), solver, {}).trajectory;
    const auto rate = model::model_rate(bound);
    EXPECT_EQ(model::mc_nonevent(traj, rate, 50, 42), model::mc_nonevent(traj, rate, 50, 42));
    EXPECT_NE(model::mc_nonevent(traj, rate, 50, 42), model::mc_nonevent(traj, rate, 50, 43));
}

TEST(MonteCarlo, RequiresDenseTrajectory) {
    const auto dims = fixture::small_dims();
    ad::Graph g;
    const auto bound = model::bind(g, fixture::random_params(dims, 11), false);
    const auto traj =
        model::run_sequence(bound, oracle::random_sequence(3, 3, 1), {}, {}).trajectory;
    EXPECT_THROW((void)model::mc_nonevent(traj, model::model_rate(bound), 10, 1),
                 std::invalid_argument);
}
