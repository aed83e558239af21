#include "civgraph/nn/adam.hpp"

#include <cmath>

#include "civgraph/error.hpp"

namespace civgraph::nn {

void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg, std::uint64_t step) {
  if (step == 0) throw Error(ErrorKind::invalid_argument, "adam_step: step counter starts at 1");
  for (const Parameter* p : params) {
    if (!p->grad.allFinite()) throw Error(ErrorKind::numeric, "non-finite gradient in parameter '" + p->name + "'");
  }
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (Parameter* p : params) {
    p->adam_m = cfg.beta1 * p->adam_m + (1.0 - cfg.beta1) * p->grad;
    p->adam_v = cfg.beta2 * p->adam_v + (1.0 - cfg.beta2) * p->grad.cwiseAbs2();
    const auto m_hat = p->adam_m.array() / correction1;
    const auto v_hat = p->adam_v.array() / correction2;
    p->value.array() -= cfg.lr * (m_hat / (v_hat.sqrt() + cfg.eps) + cfg.weight_decay * p->value.array());
    p->normalize_storage();
  }
}

}  // namespace civgraph::nn
