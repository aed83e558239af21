#include "civgraph/train/reports.hpp"

#include <charconv>

#include <json.hpp>

#include "civgraph/error.hpp"

namespace civgraph::train {

namespace {

void require_rows(std::size_t ids, nn::Index values, const char* what) {
  if (static_cast<nn::Index>(ids) != values) {
    throw Error(ErrorKind::shape_mismatch, std::string(what) + ": " + std::to_string(ids) + " node ids vs " +
                                               std::to_string(values) + " values");
  }
}

}  // namespace

std::string format_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_history(std::span<const EpochRecord> history) {
  std::string out = "epoch,train_loss,train_auc,val_auc,mean_alpha_gnn\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + ',' + format_real(r.train_loss) + ',' + format_real(r.train_auc) + ',' +
           format_real(r.val_auc) + ',' + format_real(r.mean_alpha_gnn) + '\n';
  }
  return out;
}

std::string format_report(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["auc"] = r.auc;
  j["f1"] = r.f1;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["accuracy"] = r.accuracy;
  j["tp"] = r.counts.tp;
  j["fp"] = r.counts.fp;
  j["tn"] = r.counts.tn;
  j["fn"] = r.counts.fn;
  j["mean_alpha_gnn"] = r.mean_alpha_gnn;
  j["mean_alpha_mlp"] = r.mean_alpha_mlp;
  j["train_test_auc_gap"] = r.train_test_auc_gap ? nlohmann::ordered_json(*r.train_test_auc_gap) : nullptr;
  return j.dump(2) + "\n";
}

std::string format_predictions(std::span<const data::CommentId> node_ids, const Vector& y, const Vector& y_hat) {
  require_rows(node_ids.size(), y.size(), "predictions");
  require_rows(node_ids.size(), y_hat.size(), "predictions");
  std::string out = "node_id\ty\ty_hat\n";
  for (std::size_t i = 0; i < node_ids.size(); ++i) {
    const auto k = static_cast<nn::Index>(i);
    out += std::to_string(node_ids[i]) + '\t' + std::to_string(static_cast<int>(y(k))) + '\t' + format_real(y_hat(k)) +
           '\n';
  }
  return out;
}

std::string format_attention(std::span<const data::CommentId> node_ids, const model::FusionOutput& fusion,
                             const Vector& y_hat, const Vector& y) {
  require_rows(node_ids.size(), fusion.alpha_gnn.size(), "attention report");
  require_rows(node_ids.size(), y_hat.size(), "attention report");
  require_rows(node_ids.size(), y.size(), "attention report");
  std::string out = "node_id\talpha_gnn\talpha_mlp\ty_hat\ty\n";
  for (std::size_t i = 0; i < node_ids.size(); ++i) {
    const auto k = static_cast<nn::Index>(i);
    out += std::to_string(node_ids[i]) + '\t' + format_real(fusion.alpha_gnn(k)) + '\t' +
           format_real(fusion.alpha_mlp(k)) + '\t' + format_real(y_hat(k)) + '\t' +
           std::to_string(static_cast<int>(y(k))) + '\n';
  }
  return out;
}

}  // namespace civgraph::train
