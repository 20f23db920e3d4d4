#pragma once

#include "hpcde/ad/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hpcde::ad {

struct AdamConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment accumulators for a fixed list of parameter tensors.
struct AdamState {
    AdamConfig config;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    std::uint64_t step = 0;

    AdamState() = default;
    AdamState(AdamConfig cfg, std::span<const Tensor> params);
};

/// One Adam update with decoupled weight decay (p -= lr * wd * p, applied to
/// the parameter rather than folded into the gradient).
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state);

}  // namespace hpcde::ad
