#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "civgraph/nn/tensor.hpp"
#include "civgraph/rng.hpp"

namespace civgraph::nn {

enum class Activation { identity, relu, leaky_relu, tanh };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

Matrix relu(const Matrix& x);
Matrix relu_backward(const Matrix& x, const Matrix& dy);
Matrix leaky_relu(const Matrix& x, double slope);
Matrix leaky_relu_backward(const Matrix& x, const Matrix& dy, double slope);
double sigmoid(double x) noexcept;
Matrix sigmoid(const Matrix& x);
/// Uses the forward output y = sigmoid(x).
Matrix sigmoid_backward(const Matrix& y, const Matrix& dy);

Matrix activate(Activation a, const Matrix& x, double slope = 0.01);
/// `x` is the activation input, `y` its output.
Matrix activate_backward(Activation a, const Matrix& x, const Matrix& y, const Matrix& dy, double slope = 0.01);

/// y = x W (+ b).
Matrix linear(const Matrix& x, const Parameter& weight, const Parameter* bias);
/// Accumulates into weight.grad / bias->grad and returns dL/dx.
Matrix linear_backward(const Matrix& x, const Matrix& dy, Parameter& weight, Parameter* bias);

inline constexpr double kBceEpsilon = 1e-7;

/// Mean binary cross-entropy with predictions clamped to [eps, 1 - eps].
double bce_loss(const Vector& y_hat, const Vector& y);
Vector bce_loss_backward(const Vector& y_hat, const Vector& y);

void glorot_uniform(Matrix& w, Index fan_in, Index fan_out, CounterRng& rng);

class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, Index in_dim, Index out_dim, bool with_bias, CounterRng& rng);

  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& dy);

  void collect(ParameterRefs& out);
  Index in_dim() const { return weight.value.rows(); }
  Index out_dim() const { return weight.value.cols(); }

  Parameter weight;
  Parameter bias;
  bool has_bias = true;

 private:
  Matrix input_;
};

class ActivationLayer {
 public:
  ActivationLayer() = default;
  explicit ActivationLayer(Activation a, double slope = 0.01) : kind_(a), slope_(slope) {}

  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& dy) const;

 private:
  Activation kind_ = Activation::identity;
  double slope_ = 0.01;
  Matrix input_;
  Matrix output_;
};

/// Per-feature normalization over all rows of the batch (the full graph).
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(const std::string& name, Index features, double momentum, double eps = 1e-5);

  Matrix forward(const Matrix& x, Mode mode);
  Matrix backward(const Matrix& dy);

  void collect(ParameterRefs& out);
  void collect_buffers(BufferRefs& out);

  Parameter gamma;
  Parameter beta;
  Matrix running_mean;  // 1 x features
  Matrix running_var;   // 1 x features
  double momentum = 0.1;
  double eps = 1e-5;

 private:
  std::string name_;
  Mode mode_ = Mode::eval;
  Matrix normalized_;
  RowVector inv_std_;
};

/// Inverted dropout; masks are a pure function of (context key, salt, index).
class Dropout {
 public:
  Dropout() = default;
  Dropout(double p, std::uint64_t salt);

  Matrix forward(const Matrix& x, const ForwardContext& ctx);
  Matrix backward(const Matrix& dy) const;

  double p() const { return p_; }

 private:
  double p_ = 0.0;
  std::uint64_t salt_ = 0;
  Matrix mask_;
  bool active_ = false;
};

}  // namespace civgraph::nn
