#pragma once

// Shared fixtures that drive the code under test. Expected values never come
// from here; they come from oracles.hpp.

#include "hpcde/data/exp_hawkes.hpp"
#include "hpcde/model/cde_engine.hpp"
#include "hpcde/model/likelihood.hpp"
#include "hpcde/model/params.hpp"

#include <string>
#include <vector>

namespace fixture {

/// dim(h)=8, K=3, M=4 with a small embedding and field width.
hpcde::model::ModelDims small_dims();

/// Parameters with every tensor drawn N(0, scale^2) so no gradient is
/// structurally tiny (the production initialiser shrinks the field output).
hpcde::model::ModelParams random_params(const hpcde::model::ModelDims& dims, std::uint64_t seed,
                                        double scale = 0.5);

enum class Root { total_loss, nonevent };

/// Forward value of the chosen root for one sequence, on a fresh graph.
double forward(const hpcde::model::ModelParams& params, const hpcde::data::EventSequence& seq,
               const hpcde::model::SolverConfig& solver, const hpcde::model::LossWeights& weights,
               Root root);

struct GradCheck {
    std::vector<std::string> where;  ///< "<tensor>[<flat index>]"
    std::vector<double> analytic;
    std::vector<double> numeric;
    std::vector<double> rel_error;

    [[nodiscard]] double fraction_below(double tol) const;
    [[nodiscard]] double max_error() const;
    [[nodiscard]] std::size_t worst() const;
};

/// Central differences with `step` on every scalar parameter, compared against
/// reverse-mode gradients. rel = |a-n| / max(|a|, |n|, floor).
GradCheck check_gradients(const hpcde::model::ModelParams& params,
                          const hpcde::data::EventSequence& seq,
                          const hpcde::model::SolverConfig& solver,
                          const hpcde::model::LossWeights& weights, Root root, double step,
                          double floor);

/// a(T) for a frozen exponential-Hawkes intensity: the augmented state is
/// advanced knot by knot over 0, t_1, ..., t_N, T with `substeps` steps each.
/// On each segment the rate counts exactly the events at or before its start,
/// which is the smooth piece of lambda there.
double frozen_hawkes_accumulator(const hpcde::data::EventSequence& seq,
                                 const hpcde::data::ExpHawkesParams& p, std::size_t substeps,
                                 hpcde::model::SolverMethod method);

}  // namespace fixture
