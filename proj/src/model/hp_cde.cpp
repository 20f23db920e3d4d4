#include "hpcde/model/hp_cde.hpp"

#include "hpcde/model/control_path.hpp"
#include "hpcde/model/embedding.hpp"

namespace hpcde::model {

SequenceResult run_sequence(const BoundModel& model, const data::EventSequence& seq,
                            const SolverConfig& solver, const LossWeights& weights) {
    if (seq.empty()) {
        throw data::DataError("cannot score an empty sequence");
    }
    const auto embedded = embed_sequence(seq, model.embedding);
    const ControlPath path = build_path(embedded);
    SequenceResult out;
    out.trajectory = integrate(path, model, solver);
    out.loss = losses(seq, out.trajectory, model, weights);
    return out;
}

}  // namespace hpcde::model
