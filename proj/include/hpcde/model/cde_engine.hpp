#pragma once

#include "hpcde/ad/graph.hpp"
#include "hpcde/model/control_path.hpp"
#include "hpcde/model/params.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace hpcde::model {

enum class SolverMethod {
    rk4,
    euler,  ///< first-order reference, used to contrast convergence orders
};

struct SolverConfig {
    std::size_t substeps_per_segment = 8;
    SolverMethod method = SolverMethod::rk4;
    /// Keep (t, h, a) at every substep boundary; needed by mc_nonevent.
    bool record_dense = false;
};

/// [h ; a]: hidden state and the accumulated integral of the total intensity.
struct AugmentedState {
    ad::Var h;
    ad::Var a;
};

struct DenseSegment {
    std::vector<double> times;
    std::vector<ad::Var> hidden;
    std::vector<ad::Var> accumulated;
};

struct Trajectory {
    std::vector<ad::Var> knot_hidden;  ///< h(t_j) for every knot
    ad::Var nonevent;                  ///< a(t_N)
    std::vector<DenseSegment> dense;   ///< one entry per segment when recorded
};

/// Total intensity lambda*(t) as a scalar graph node, given h(t).
using RateFunction = std::function<ad::Var(ad::Var h, double t)>;

/// f(h) = Tanh(L_M(ELU(... ELU(L_1(h))))), reshaped to [dim(h) x channels].
[[nodiscard]] ad::Var vector_field(const BoundModel& model, ad::Var h);

/// The model's own total intensity, sum_k softplus_beta_k(W_k . h).
[[nodiscard]] RateFunction model_rate(const BoundModel& model);

/// h(t_1) = L_pi(z(t_1)), a(t_1) = 0. `z1` is the time-augmented first knot.
[[nodiscard]] AugmentedState init_state(ad::Var z1, const BoundModel& model);

/// Integrate d/dt [h; a] = [f(h) slope; rate(h, t)] over [t0, t1] with `steps`
/// uniform steps. The slope must be constant on the interval.
[[nodiscard]] AugmentedState advance(const AugmentedState& start, ad::Var slope, double t0,
                                     double t1, std::size_t steps, const BoundModel& model,
                                     const RateFunction& rate, SolverMethod method,
                                     DenseSegment* dense = nullptr);

/// Segment-by-segment solve from init_state over the whole path; steps never
/// straddle a knot. Throws ad::NumericalError naming the segment on NaN/Inf.
[[nodiscard]] Trajectory integrate(const ControlPath& path, const BoundModel& model,
                                   const SolverConfig& solver);
[[nodiscard]] Trajectory integrate(const ControlPath& path, const BoundModel& model,
                                   const SolverConfig& solver, const RateFunction& rate);
[[nodiscard]] Trajectory integrate_from(const AugmentedState& initial, const ControlPath& path,
                                        const BoundModel& model, const SolverConfig& solver,
                                        const RateFunction& rate);

/// Monte Carlo estimate (t_N - t_1) * mean rate(h(u_i)), u_i ~ U[t_1, t_N], with
/// h(u_i) looked up at the nearest recorded substep. Requires a dense trajectory.
[[nodiscard]] double mc_nonevent(const Trajectory& trajectory, const RateFunction& rate,
                                 std::size_t n_samples, std::uint64_t seed);

}  // namespace hpcde::model
