#include "hpcde/model/params.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hpcde::model {

void ModelDims::validate() const {
    if (num_types == 0) {
        throw ConfigError("number of event types must be positive");
    }
    if (embed_dim < 2 || embed_dim % 2 != 0) {
        throw ConfigError("embedding dimension must be even and >= 2, got " +
                          std::to_string(embed_dim));
    }
    if (hidden_dim == 0 || field_layers == 0 || field_width == 0) {
        throw ConfigError("hidden dimension, field layers and field width must be positive");
    }
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> field_shapes(const ModelDims& d) {
    // (out, in) per layer
    std::vector<std::pair<std::size_t, std::size_t>> shapes;
    const std::size_t out = d.hidden_dim * d.channels();
    if (d.field_layers == 1) {
        shapes.emplace_back(out, d.hidden_dim);
        return shapes;
    }
    shapes.emplace_back(d.field_width, d.hidden_dim);
    for (std::size_t m = 1; m + 1 < d.field_layers; ++m) {
        shapes.emplace_back(d.field_width, d.field_width);
    }
    shapes.emplace_back(out, d.field_width);
    return shapes;
}

}  // namespace

void ModelParams::add(std::string name, ad::Tensor t) {
    names_.push_back(std::move(name));
    tensors_.push_back(std::move(t));
}

ModelParams ModelParams::zeros(const ModelDims& d) {
    d.validate();
    ModelParams p;
    p.dims_ = d;
    p.add("embedding", ad::Tensor({d.num_types, d.embed_dim}));
    p.add("init.weight", ad::Tensor({d.hidden_dim, d.channels()}));
    p.add("init.bias", ad::Tensor({d.hidden_dim}));
    const auto shapes = field_shapes(d);
    for (std::size_t m = 0; m < shapes.size(); ++m) {
        p.add("field." + std::to_string(m) + ".weight",
              ad::Tensor({shapes[m].first, shapes[m].second}));
        p.add("field." + std::to_string(m) + ".bias", ad::Tensor({shapes[m].first}));
    }
    p.add("intensity.weight", ad::Tensor({d.num_types, d.hidden_dim}));
    p.add("intensity.log_beta", ad::Tensor({d.num_types}));
    p.add("type.weight", ad::Tensor({d.num_types, d.hidden_dim}));
    p.add("time.weight", ad::Tensor({1, d.hidden_dim}));
    return p;
}

ModelParams ModelParams::initialize(const ModelDims& d, std::uint64_t seed) {
    ModelParams p = zeros(d);
    std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       0x1417u};
    std::mt19937_64 rng(sseq);
    auto fill_gaussian = [&](ad::Tensor& t, double stddev) {
        std::normal_distribution<double> dist(0.0, stddev);
        for (double& v : t.data()) {
            v = dist(rng);
        }
    };
    auto fan_in = [](const ad::Tensor& t) { return 1.0 / std::sqrt(static_cast<double>(t.cols())); };

    fill_gaussian(p.get("embedding"), 1.0 / std::sqrt(static_cast<double>(d.embed_dim)));
    fill_gaussian(p.get("init.weight"), fan_in(p.get("init.weight")));
    const std::size_t last = d.field_layers - 1;
    for (std::size_t m = 0; m < d.field_layers; ++m) {
        auto& w = p.get("field." + std::to_string(m) + ".weight");
        fill_gaussian(w, fan_in(w) * (m == last ? 0.1 : 1.0));
    }
    fill_gaussian(p.get("intensity.weight"), fan_in(p.get("intensity.weight")));
    fill_gaussian(p.get("type.weight"), fan_in(p.get("type.weight")));
    fill_gaussian(p.get("time.weight"), fan_in(p.get("time.weight")));
    return p;
}

std::size_t ModelParams::count() const noexcept {
    std::size_t n = 0;
    for (const auto& t : tensors_) {
        n += t.size();
    }
    return n;
}

std::size_t ModelParams::index_of(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
        throw std::out_of_range("no parameter named " + std::string(name));
    }
    return static_cast<std::size_t>(it - names_.begin());
}

ad::Tensor& ModelParams::get(std::string_view name) { return tensors_[index_of(name)]; }

const ad::Tensor& ModelParams::get(std::string_view name) const {
    return tensors_[index_of(name)];
}

ModelParams ModelParams::from_tensors(const ModelDims& dims, std::vector<std::string> names,
                                      std::vector<ad::Tensor> tensors) {
    ModelParams reference = zeros(dims);
    if (names != reference.names_ || tensors.size() != reference.tensors_.size()) {
        throw ConfigError("parameter names do not match the model layout");
    }
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        if (tensors[i].shape() != reference.tensors_[i].shape()) {
            throw ConfigError("parameter " + names[i] + " has shape " + tensors[i].shape_string() +
                              ", expected " + reference.tensors_[i].shape_string());
        }
    }
    reference.tensors_ = std::move(tensors);
    return reference;
}

BoundModel bind(ad::Graph& graph, const ModelParams& params, bool requires_grad) {
    BoundModel m;
    m.dims = params.dims();
    const auto tensors = params.tensors();
    m.leaves.reserve(tensors.size());
    for (const auto& t : tensors) {
        m.leaves.push_back(requires_grad ? graph.parameter(t) : graph.constant(t));
    }
    auto leaf = [&](std::string_view name) { return m.leaves[params.index_of(name)]; };
    m.embedding = leaf("embedding");
    m.init_weight = leaf("init.weight");
    m.init_bias = leaf("init.bias");
    for (std::size_t l = 0; l < m.dims.field_layers; ++l) {
        m.field_weight.push_back(leaf("field." + std::to_string(l) + ".weight"));
        m.field_bias.push_back(leaf("field." + std::to_string(l) + ".bias"));
    }
    m.intensity_weight = leaf("intensity.weight");
    m.intensity_log_beta = leaf("intensity.log_beta");
    m.type_weight = leaf("type.weight");
    m.time_weight = leaf("time.weight");
    return m;
}

std::vector<ad::Tensor> collect_grads(const ad::Graph& graph, const BoundModel& model) {
    std::vector<ad::Tensor> grads;
    grads.reserve(model.leaves.size());
    for (const auto& leaf : model.leaves) {
        grads.push_back(graph.grad_tensor(leaf));
    }
    return grads;
}

}  // namespace hpcde::model
