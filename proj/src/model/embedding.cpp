#include "hpcde/model/embedding.hpp"

#include <cmath>

namespace hpcde::model {

std::vector<double> positional_encoding(double t, std::size_t dim) {
    if (dim < 2) {
        throw std::invalid_argument("positional encoding needs dim >= 2");
    }
    std::vector<double> pe(dim);
    const double d = static_cast<double>(dim);
    for (std::size_t u = 0; u < dim; ++u) {
        if (u % 2 == 0) {
            pe[u] = std::sin(t / std::pow(10000.0, static_cast<double>(u) / d));
        } else {
            pe[u] = std::cos(t / std::pow(10000.0, static_cast<double>(u - 1) / d));
        }
    }
    return pe;
}

std::vector<EmbeddedEvent> embed_sequence(const data::EventSequence& seq, ad::Var table) {
    auto& g = table.graph();
    const std::size_t num_types = table.rows();
    const std::size_t dim = table.cols();
    std::vector<EmbeddedEvent> out;
    out.reserve(seq.size());
    for (std::size_t j = 0; j < seq.size(); ++j) {
        const auto& e = seq.events[j];
        if (e.type >= num_types) {
            throw data::DataError("event " + std::to_string(j) + " has type " +
                                  std::to_string(e.type + 1) + " but the embedding table has " +
                                  std::to_string(num_types) + " rows");
        }
        const auto pe = positional_encoding(e.time, dim);
        out.push_back({g.add(g.row(table, e.type), g.constant_vector(pe)), e.time});
    }
    return out;
}

}  // namespace hpcde::model
