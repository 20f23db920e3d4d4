#pragma once

#include "hpcde/data/event_sequence.hpp"
#include "hpcde/model/cde_engine.hpp"
#include "hpcde/model/likelihood.hpp"
#include "hpcde/model/params.hpp"

namespace hpcde::model {

struct SequenceResult {
    Trajectory trajectory;
    LossTerms loss;
};

/// Embed, build the control path, solve the augmented ODE and score one sequence.
[[nodiscard]] SequenceResult run_sequence(const BoundModel& model, const data::EventSequence& seq,
                                          const SolverConfig& solver, const LossWeights& weights);

}  // namespace hpcde::model
