#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "civgraph/nn/tensor.hpp"

namespace civgraph::nn {

/// Records the sign pattern of every input to a piecewise-linear op
/// (ReLU, LeakyReLU) while a Scope is alive on the current thread. The
/// finite-difference checker compares signatures of the +h and -h
/// evaluations to detect a step that straddles a kink.
namespace kink_probe {

class Scope {
 public:
  Scope();
  ~Scope();
  Scope(const Scope&) = delete;
  Scope& operator=(const Scope&) = delete;

  std::uint64_t signature() const;
};

bool active() noexcept;
void record(const Matrix& pre_activation);
void record(std::span<const double> pre_activation);

}  // namespace kink_probe

struct GradcheckOptions {
  double step = 1e-4;
  double min_step = 1e-7;       // smallest step tried when a kink is straddled
  double magnitude_floor = 1e-3;  // denominator floor of the relative error
};

struct GradcheckStats {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;         // coordinates that sat on a kink at every step size
  std::size_t reduced_steps = 0;   // coordinates that needed a smaller step
  std::string worst;               // "<label>[index]" of the largest error

  void merge(const GradcheckStats& other);
};

/// |analytic - numeric| / max(|analytic|, |numeric|, floor)
double relative_error(double analytic, double numeric, double floor) noexcept;

/// Central-difference check of dL/d(target). `loss` re-evaluates the scalar
/// objective from scratch; `target` is perturbed in place and restored.
GradcheckStats check_gradient(const std::string& label, Matrix& target, const Matrix& analytic,
                              const std::function<double()>& loss, const GradcheckOptions& options = {});

}  // namespace civgraph::nn
