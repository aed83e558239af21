#include "civgraph/train/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "civgraph/error.hpp"

namespace civgraph::train {

namespace {

void require_binary(const Vector& y, const char* op) {
  for (nn::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) {
      throw Error(ErrorKind::invalid_argument, std::string(op) + ": label " + std::to_string(i) + " is not 0 or 1");
    }
  }
}

void require_same_length(const Vector& a, const Vector& b, const char* op) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::shape_mismatch, std::string(op) + ": " + std::to_string(a.size()) + " scores vs " +
                                               std::to_string(b.size()) + " labels");
  }
}

double ratio(std::uint64_t num, std::uint64_t den) noexcept {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionCounts confusion_counts(const Vector& y_hat, const Vector& y, double threshold) {
  require_same_length(y_hat, y, "confusion_counts");
  require_binary(y, "confusion_counts");
  ConfusionCounts c;
  for (nn::Index i = 0; i < y.size(); ++i) {
    const bool predicted = y_hat(i) >= threshold;
    const bool actual = y(i) == 1.0;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

ClassificationMetrics precision_recall_f1_accuracy(const ConfusionCounts& c) {
  ClassificationMetrics m;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  m.accuracy = ratio(c.tp + c.tn, c.total());
  return m;
}

double auc_roc(const Vector& scores, const Vector& labels) {
  require_same_length(scores, labels, "auc_roc");
  require_binary(labels, "auc_roc");
  if (!scores.allFinite()) throw Error(ErrorKind::numeric, "auc_roc: non-finite score");
  const auto n = static_cast<std::size_t>(scores.size());
  const auto n_pos = static_cast<std::size_t>(labels.sum());
  const auto n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorKind::invalid_argument, "auc_roc: both classes must be present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores(a) < scores(b); });

  // Ranks are 1-based; a tie group [i, j) shares the rank (i + 1 + j) / 2.
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && scores(order[j]) == scores(order[i])) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels(order[k]) == 1.0) positive_rank_sum += rank;
    }
    i = j;
  }
  const double p = static_cast<double>(n_pos);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_neg));
}

EvalReport make_report(const Vector& y_hat, const Vector& y, const Vector& alpha_gnn, const Vector& alpha_mlp,
                       double threshold) {
  EvalReport r;
  r.n = static_cast<std::uint64_t>(y.size());
  r.auc = auc_roc(y_hat, y);
  r.counts = confusion_counts(y_hat, y, threshold);
  const auto m = precision_recall_f1_accuracy(r.counts);
  r.precision = m.precision;
  r.recall = m.recall;
  r.f1 = m.f1;
  r.accuracy = m.accuracy;
  r.mean_alpha_gnn = alpha_gnn.size() > 0 ? alpha_gnn.mean() : 0.0;
  r.mean_alpha_mlp = alpha_mlp.size() > 0 ? alpha_mlp.mean() : 0.0;
  return r;
}

Evaluation evaluate(model::HybridModel& model, const graph::CommentGraph& g, const Matrix& x, const Vector& y,
                    const EvalReport* train_report, double threshold) {
  Evaluation out;
  out.forward = model.forward(g, x, nn::ForwardContext{nn::Mode::eval, 0});
  out.report = make_report(out.forward.y_hat, y, out.forward.fusion.alpha_gnn, out.forward.fusion.alpha_mlp, threshold);
  if (train_report) out.report.train_test_auc_gap = train_report->auc - out.report.auc;
  return out;
}

}  // namespace civgraph::train
