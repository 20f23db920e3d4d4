#pragma once

#include "hpcde/ad/graph.hpp"
#include "hpcde/ad/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hpcde::model {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ModelDims {
    std::size_t num_types = 2;
    /// dim(z); must be even so the sin/cos positional encoding pairs up.
    std::size_t embed_dim = 8;
    /// dim(h)
    std::size_t hidden_dim = 8;
    /// M, number of fully connected layers in the vector field.
    std::size_t field_layers = 3;
    /// Width of the inner layers of the vector field.
    std::size_t field_width = 16;

    /// Path channels: embedding plus the time channel.
    [[nodiscard]] std::size_t channels() const noexcept { return embed_dim + 1; }
    void validate() const;

    bool operator==(const ModelDims&) const = default;
};

/// Every trainable tensor of the model, in a fixed order:
///   embedding [K x dz], init.weight [dh x (dz+1)], init.bias [dh],
///   field.<m>.weight / field.<m>.bias for m < M,
///   intensity.weight [K x dh], intensity.log_beta [K],
///   type.weight [K x dh], time.weight [1 x dh].
class ModelParams {
public:
    ModelParams() = default;

    /// Gaussian initialisation: embedding rows N(0, 1/dz), weights N(0, 1/fan_in),
    /// zero biases, vector-field output layer scaled by 0.1, log beta = 0.
    static ModelParams initialize(const ModelDims& dims, std::uint64_t seed);
    /// Zero weights everywhere, log beta = 0 (beta = 1).
    static ModelParams zeros(const ModelDims& dims);

    [[nodiscard]] const ModelDims& dims() const noexcept { return dims_; }
    [[nodiscard]] std::span<const std::string> names() const noexcept { return names_; }
    [[nodiscard]] std::span<ad::Tensor> tensors() noexcept { return tensors_; }
    [[nodiscard]] std::span<const ad::Tensor> tensors() const noexcept { return tensors_; }
    [[nodiscard]] std::size_t count() const noexcept;

    [[nodiscard]] ad::Tensor& get(std::string_view name);
    [[nodiscard]] const ad::Tensor& get(std::string_view name) const;
    [[nodiscard]] std::size_t index_of(std::string_view name) const;

    /// Rebuild from named tensors; shapes must match `dims` exactly.
    static ModelParams from_tensors(const ModelDims& dims, std::vector<std::string> names,
                                    std::vector<ad::Tensor> tensors);

    bool operator==(const ModelParams&) const = default;

private:
    void add(std::string name, ad::Tensor t);

    ModelDims dims_;
    std::vector<std::string> names_;
    std::vector<ad::Tensor> tensors_;
};

/// The parameters registered as leaves of one graph.
struct BoundModel {
    ModelDims dims;
    std::vector<ad::Var> leaves;
    ad::Var embedding;
    ad::Var init_weight;
    ad::Var init_bias;
    std::vector<ad::Var> field_weight;
    std::vector<ad::Var> field_bias;
    ad::Var intensity_weight;
    ad::Var intensity_log_beta;
    ad::Var type_weight;
    ad::Var time_weight;
};

/// requires_grad = false registers the parameters as constants (evaluation).
[[nodiscard]] BoundModel bind(ad::Graph& graph, const ModelParams& params,
                              bool requires_grad = true);

/// Gradients of the bound leaves, in ModelParams order.
[[nodiscard]] std::vector<ad::Tensor> collect_grads(const ad::Graph& graph,
                                                    const BoundModel& model);

}  // namespace hpcde::model
