#include "civgraph/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "civgraph/error.hpp"
#include "civgraph/rng.hpp"

namespace civgraph::nn {

namespace kink_probe {

namespace {

struct State {
  int depth = 0;
  std::uint64_t hash = 0;
  std::uint64_t count = 0;
};

thread_local State state;

void fold(bool positive) {
  state.hash = mix64(state.hash ^ (positive ? 0x9E3779B97F4A7C15ULL : 0x2545F4914F6CDD1DULL) ^ state.count++);
}

}  // namespace

Scope::Scope() {
  if (state.depth++ == 0) {
    state.hash = 0;
    state.count = 0;
  }
}

Scope::~Scope() { --state.depth; }

std::uint64_t Scope::signature() const { return state.hash; }

bool active() noexcept { return state.depth > 0; }

void record(const Matrix& pre_activation) {
  if (!active()) return;
  for (Index i = 0; i < pre_activation.size(); ++i) fold(pre_activation.data()[i] > 0.0);
}

void record(std::span<const double> pre_activation) {
  if (!active()) return;
  for (double v : pre_activation) fold(v > 0.0);
}

}  // namespace kink_probe

void GradcheckStats::merge(const GradcheckStats& other) {
  if (other.checked > 0 && (worst.empty() || other.max_rel_error > max_rel_error)) {
    max_rel_error = other.max_rel_error;
    worst = other.worst;
  }
  checked += other.checked;
  skipped += other.skipped;
  reduced_steps += other.reduced_steps;
}

double relative_error(double analytic, double numeric, double floor) noexcept {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradcheckStats check_gradient(const std::string& label, Matrix& target, const Matrix& analytic,
                              const std::function<double()>& loss, const GradcheckOptions& options) {
  if (analytic.rows() != target.rows() || analytic.cols() != target.cols()) {
    throw Error(ErrorKind::shape_mismatch, "gradcheck '" + label + "': analytic gradient shape");
  }
  GradcheckStats stats;
  auto evaluate = [&](Index idx, double value, std::uint64_t& signature) {
    target.data()[idx] = value;
    kink_probe::Scope scope;
    const double l = loss();
    signature = scope.signature();
    return l;
  };

  for (Index idx = 0; idx < target.size(); ++idx) {
    const double original = target.data()[idx];
    bool resolved = false;
    for (double h = options.step; h >= options.min_step * 0.999; h /= 10.0) {
      std::uint64_t sig_plus = 0;
      std::uint64_t sig_minus = 0;
      const double plus = evaluate(idx, original + h, sig_plus);
      const double minus = evaluate(idx, original - h, sig_minus);
      target.data()[idx] = original;
      if (sig_plus != sig_minus) {
        continue;
      }
      if (h < options.step) ++stats.reduced_steps;
      const double numeric = (plus - minus) / (2.0 * h);
      const double err = relative_error(analytic.data()[idx], numeric, options.magnitude_floor);
      if (err > stats.max_rel_error || stats.worst.empty()) {
        stats.max_rel_error = std::max(stats.max_rel_error, err);
        stats.worst = label + "[" + std::to_string(idx) + "]";
      }
      ++stats.checked;
      resolved = true;
      break;
    }
    if (!resolved) ++stats.skipped;
    target.data()[idx] = original;
  }
  return stats;
}

}  // namespace civgraph::nn
