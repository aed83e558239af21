#include "civgraph/nn/layers.hpp"

#include <cmath>

#include "civgraph/error.hpp"
#include "civgraph/nn/gradcheck.hpp"

namespace civgraph::nn {

void round_to_binary32(Matrix& m) {
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "leaky_relu") return Activation::leaky_relu;
  if (name == "tanh") return Activation::tanh;
  throw Error(ErrorKind::invalid_argument, "unknown activation '" + std::string(name) + "'");
}

Matrix relu(const Matrix& x) {
  kink_probe::record(x);
  return x.cwiseMax(0.0);
}

Matrix relu_backward(const Matrix& x, const Matrix& dy) {
  return (x.array() > 0.0).select(dy, 0.0);
}

Matrix leaky_relu(const Matrix& x, double slope) {
  kink_probe::record(x);
  return (x.array() > 0.0).select(x, slope * x);
}

Matrix leaky_relu_backward(const Matrix& x, const Matrix& dy, double slope) {
  return (x.array() > 0.0).select(dy, slope * dy);
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

Matrix sigmoid_backward(const Matrix& y, const Matrix& dy) {
  return (dy.array() * y.array() * (1.0 - y.array())).matrix();
}

Matrix activate(Activation a, const Matrix& x, double slope) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::relu: return relu(x);
    case Activation::leaky_relu: return leaky_relu(x, slope);
    case Activation::tanh: return x.array().tanh().matrix();
  }
  return x;
}

Matrix activate_backward(Activation a, const Matrix& x, const Matrix& y, const Matrix& dy, double slope) {
  switch (a) {
    case Activation::identity: return dy;
    case Activation::relu: return relu_backward(x, dy);
    case Activation::leaky_relu: return leaky_relu_backward(x, dy, slope);
    case Activation::tanh: return (dy.array() * (1.0 - y.array().square())).matrix();
  }
  return dy;
}

Matrix linear(const Matrix& x, const Parameter& weight, const Parameter* bias) {
  if (x.cols() != weight.value.rows()) {
    throw Error(ErrorKind::shape_mismatch, "linear '" + weight.name + "': input has " + std::to_string(x.cols()) +
                                               " columns, weight expects " + std::to_string(weight.value.rows()));
  }
  Matrix y = x * weight.value;
  if (bias != nullptr) {
    if (bias->value.rows() != 1 || bias->value.cols() != weight.value.cols()) {
      throw Error(ErrorKind::shape_mismatch, "linear '" + weight.name + "': bias shape mismatch");
    }
    y.rowwise() += bias->value.row(0);
  }
  return y;
}

Matrix linear_backward(const Matrix& x, const Matrix& dy, Parameter& weight, Parameter* bias) {
  if (dy.rows() != x.rows() || dy.cols() != weight.value.cols()) {
    throw Error(ErrorKind::shape_mismatch, "linear '" + weight.name + "': gradient shape mismatch");
  }
  weight.grad.noalias() += x.transpose() * dy;
  if (bias != nullptr) bias->grad.row(0) += dy.colwise().sum();
  return dy * weight.value.transpose();
}

double bce_loss(const Vector& y_hat, const Vector& y) {
  if (y_hat.size() != y.size()) {
    throw Error(ErrorKind::shape_mismatch, "bce_loss: " + std::to_string(y_hat.size()) + " predictions vs " +
                                               std::to_string(y.size()) + " labels");
  }
  if (y.size() == 0) throw Error(ErrorKind::invalid_argument, "bce_loss: empty input");
  double total = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double p = std::clamp(y_hat[i], kBceEpsilon, 1.0 - kBceEpsilon);
    total -= y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
  }
  return total / static_cast<double>(y.size());
}

Vector bce_loss_backward(const Vector& y_hat, const Vector& y) {
  if (y_hat.size() != y.size()) throw Error(ErrorKind::shape_mismatch, "bce_loss_backward: length mismatch");
  const double n = static_cast<double>(y.size());
  Vector grad(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    const double p = y_hat[i];
    if (p < kBceEpsilon || p > 1.0 - kBceEpsilon) {
      grad[i] = 0.0;  // clamped region is flat
    } else {
      grad[i] = (-y[i] / p + (1.0 - y[i]) / (1.0 - p)) / n;
    }
  }
  return grad;
}

void glorot_uniform(Matrix& w, Index fan_in, Index fan_out, CounterRng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = (2.0 * rng.uniform() - 1.0) * limit;
}

Linear::Linear(const std::string& name, Index in_dim, Index out_dim, bool with_bias, CounterRng& rng)
    : weight(name + ".weight", in_dim, out_dim), bias(name + ".bias", 1, out_dim), has_bias(with_bias) {
  glorot_uniform(weight.value, in_dim, out_dim, rng);
  weight.normalize_storage();
}

Matrix Linear::forward(const Matrix& x) {
  input_ = x;
  return linear(x, weight, has_bias ? &bias : nullptr);
}

Matrix Linear::backward(const Matrix& dy) { return linear_backward(input_, dy, weight, has_bias ? &bias : nullptr); }

void Linear::collect(ParameterRefs& out) {
  out.push_back(&weight);
  if (has_bias) out.push_back(&bias);
}

Matrix ActivationLayer::forward(const Matrix& x) {
  input_ = x;
  output_ = activate(kind_, x, slope_);
  return output_;
}

Matrix ActivationLayer::backward(const Matrix& dy) const {
  return activate_backward(kind_, input_, output_, dy, slope_);
}

BatchNorm::BatchNorm(const std::string& name, Index features, double mom, double epsilon)
    : gamma(name + ".gamma", 1, features),
      beta(name + ".beta", 1, features),
      running_mean(Matrix::Zero(1, features)),
      running_var(Matrix::Ones(1, features)),
      momentum(mom),
      eps(epsilon),
      name_(name) {
  gamma.value.setOnes();
}

Matrix BatchNorm::forward(const Matrix& x, Mode mode) {
  if (x.cols() != gamma.value.cols()) throw Error(ErrorKind::shape_mismatch, "batch_norm '" + name_ + "': width");
  mode_ = mode;
  const auto n = x.rows();
  RowVector mean;
  RowVector var;
  if (mode == Mode::train) {
    if (n < 2) throw Error(ErrorKind::invalid_argument, "batch_norm '" + name_ + "': train mode needs >= 2 rows");
    mean = x.colwise().mean();
    var = (x.rowwise() - mean).array().square().colwise().mean();
    const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
    running_mean = ((1.0 - momentum) * running_mean.array() + momentum * mean.array()).matrix();
    running_var = ((1.0 - momentum) * running_var.array() + momentum * unbias * var.array()).matrix();
    round_to_binary32(running_mean);
    round_to_binary32(running_var);
  } else {
    mean = running_mean.row(0);
    var = running_var.row(0);
  }
  inv_std_ = (var.array() + eps).rsqrt().matrix();
  normalized_ = ((x.rowwise() - mean).array().rowwise() * inv_std_.array()).matrix();
  Matrix y = (normalized_.array().rowwise() * gamma.value.row(0).array()).matrix();
  y.rowwise() += beta.value.row(0);
  return y;
}

Matrix BatchNorm::backward(const Matrix& dy) {
  gamma.grad.row(0) += (dy.array() * normalized_.array()).colwise().sum().matrix();
  beta.grad.row(0) += dy.colwise().sum();
  const Matrix dxhat = (dy.array().rowwise() * gamma.value.row(0).array()).matrix();
  if (mode_ == Mode::eval) return (dxhat.array().rowwise() * inv_std_.array()).matrix();

  const double n = static_cast<double>(dy.rows());
  const RowVector sum_dxhat = dxhat.colwise().sum();
  const RowVector sum_dxhat_xhat = (dxhat.array() * normalized_.array()).colwise().sum().matrix();
  Matrix dx = (n * dxhat.array()).matrix();
  dx.rowwise() -= sum_dxhat;
  dx.array() -= normalized_.array().rowwise() * sum_dxhat_xhat.array();
  dx.array().rowwise() *= (inv_std_.array() / n);
  return dx;
}

void BatchNorm::collect(ParameterRefs& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

void BatchNorm::collect_buffers(BufferRefs& out) {
  out.push_back({name_ + ".running_mean", &running_mean});
  out.push_back({name_ + ".running_var", &running_var});
}

Dropout::Dropout(double p, std::uint64_t salt) : p_(p), salt_(salt) {
  if (!(p >= 0.0 && p < 1.0)) throw Error(ErrorKind::invalid_argument, "dropout probability must lie in [0, 1)");
}

Matrix Dropout::forward(const Matrix& x, const ForwardContext& ctx) {
  active_ = ctx.mode == Mode::train && p_ > 0.0;
  if (!active_) return x;
  const CounterRng stream = CounterRng(ctx.dropout_key).split(salt_);
  const double scale = 1.0 / (1.0 - p_);
  mask_.resize(x.rows(), x.cols());
  for (Index i = 0; i < mask_.size(); ++i) {
    mask_.data()[i] = stream.uniform_at(static_cast<std::uint64_t>(i)) >= p_ ? scale : 0.0;
  }
  return (x.array() * mask_.array()).matrix();
}

Matrix Dropout::backward(const Matrix& dy) const {
  if (!active_) return dy;
  return (dy.array() * mask_.array()).matrix();
}

}  // namespace civgraph::nn
