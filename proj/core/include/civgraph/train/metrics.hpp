#pragma once

#include <cstdint>
#include <optional>

#include "civgraph/graph/comment_graph.hpp"
#include "civgraph/model/hybrid_model.hpp"
#include "civgraph/nn/tensor.hpp"

namespace civgraph::train {

using nn::Matrix;
using nn::Vector;

inline constexpr double kDefaultThreshold = 0.5;

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Hard label is positive iff y_hat >= threshold. Labels must be 0 or 1.
ConfusionCounts confusion_counts(const Vector& y_hat, const Vector& y, double threshold = kDefaultThreshold);

struct ClassificationMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

/// Each metric is 0 when its denominator is 0.
ClassificationMetrics precision_recall_f1_accuracy(const ConfusionCounts& counts);

/// Mann-Whitney AUC with average ranks for tied scores. Throws
/// ErrorKind::invalid_argument unless both classes are present.
double auc_roc(const Vector& scores, const Vector& labels);

struct EvalReport {
  std::uint64_t n = 0;
  double auc = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  ConfusionCounts counts;
  double mean_alpha_gnn = 0.0;
  double mean_alpha_mlp = 0.0;
  std::optional<double> train_test_auc_gap;  // AUC_train - AUC_this
};

/// Report from precomputed predictions and fusion weights.
EvalReport make_report(const Vector& y_hat, const Vector& y, const Vector& alpha_gnn, const Vector& alpha_mlp,
                       double threshold = kDefaultThreshold);

struct Evaluation {
  EvalReport report;
  model::ForwardResult forward;
};

/// One eval-mode forward over the partition graph. When `train_report` is
/// given, the report carries the train-minus-this AUC gap.
Evaluation evaluate(model::HybridModel& model, const graph::CommentGraph& g, const Matrix& x, const Vector& y,
                    const EvalReport* train_report = nullptr, double threshold = kDefaultThreshold);

}  // namespace civgraph::train
