#pragma once

#include "hpcde/ad/graph.hpp"
#include "hpcde/data/event_sequence.hpp"

#include <vector>

namespace hpcde::model {

/// Sinusoidal time encoding, zero-based element u:
///   u even: sin(t / 10000^(u / dim))
///   u odd:  cos(t / 10000^((u - 1) / dim))
[[nodiscard]] std::vector<double> positional_encoding(double t, std::size_t dim);

struct EmbeddedEvent {
    ad::Var z;
    double time = 0.0;
};

/// z_j = table[k_j] + positional_encoding(t_j). The table is [K x dim(z)].
[[nodiscard]] std::vector<EmbeddedEvent> embed_sequence(const data::EventSequence& seq,
                                                        ad::Var table);

}  // namespace hpcde::model
