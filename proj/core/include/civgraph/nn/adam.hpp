#pragma once

#include <cstdint>
#include <span>

#include "civgraph/nn/tensor.hpp"

namespace civgraph::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-4;  // decoupled: applied to the value, not the gradient
};

/// One bias-corrected Adam update at step t (t >= 1) for every parameter.
/// Throws ErrorKind::numeric naming the first parameter with a non-finite
/// gradient; nothing is updated in that case.
void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg, std::uint64_t step);

}  // namespace civgraph::nn
