#pragma once

// Independent reference computations used as test oracles. Nothing here calls
// into the graph, the solver or the Hawkes utilities under test.

#include "hpcde/data/event_sequence.hpp"
#include "hpcde/data/exp_hawkes.hpp"
#include "hpcde/model/params.hpp"

#include <cstdint>
#include <vector>

namespace oracle {

using hpcde::data::EventSequence;
using hpcde::data::ExpHawkesParams;

/// lambda_k(t) by direct summation over events strictly before t.
std::vector<double> hawkes_intensity(const EventSequence& seq, const ExpHawkesParams& p, double t);

/// Adaptive Gauss-Kronrod quadrature of the total intensity over [a, b], split
/// at every event so each piece is smooth.
double quadrature_compensator(const EventSequence& seq, const ExpHawkesParams& p, double a,
                              double b);

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against Exp(1).
double ks_statistic_exp1(std::vector<double> samples);
/// Asymptotic p-value of a KS statistic for n samples (Stephens' small-n correction).
double ks_pvalue(double d, std::size_t n);

struct ReferenceLoss {
    double log_prob = 0.0;
    double type_loss = 0.0;
    double time_loss = 0.0;
    double total = 0.0;
    double nonevent = 0.0;
    std::vector<std::vector<double>> knot_hidden;
};

/// Plain-double forward pass of the whole model: embedding, time-augmented
/// linear path, RK4 over [h; a] with `substeps` per segment, heads and losses.
ReferenceLoss reference_forward(const hpcde::model::ModelParams& params, const EventSequence& seq,
                                std::size_t substeps, double alpha1, double alpha2,
                                bool marked = false);

/// |a - b| / max(|a|, |b|, floor)
double relative_error(double a, double b, double floor = 1e-8);

/// Random well-formed sequence with strictly increasing times.
EventSequence random_sequence(std::size_t n, std::size_t num_types, std::uint64_t seed,
                              double mean_gap = 1.0);

}  // namespace oracle
