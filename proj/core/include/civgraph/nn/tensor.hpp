#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace civgraph::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

enum class Mode { train, eval };

/// Mode plus the key that dropout masks are derived from. Two forward
/// passes with the same context draw identical masks.
struct ForwardContext {
  Mode mode = Mode::eval;
  std::uint64_t dropout_key = 0;
};

/// Rounds every entry to the nearest binary32 value.
void round_to_binary32(Matrix& m);

/// A learnable tensor with its gradient and Adam moments. Values are held
/// in double; with binary32 storage they are kept representable in float.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  bool binary32_storage = true;

  Parameter() = default;
  Parameter(std::string param_name, Index rows, Index cols)
      : name(std::move(param_name)),
        value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)),
        adam_m(Matrix::Zero(rows, cols)),
        adam_v(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
  void normalize_storage() {
    if (binary32_storage) round_to_binary32(value);
  }
  Index size() const { return value.size(); }
};

using ParameterRefs = std::vector<Parameter*>;

/// Non-learnable persistent state (batch-norm running statistics).
struct BufferRef {
  std::string name;
  Matrix* value;
};

using BufferRefs = std::vector<BufferRef>;

}  // namespace civgraph::nn
