#include "civgraph/train/trainer.hpp"

#include <cmath>
#include <sstream>

#include "civgraph/error.hpp"
#include "civgraph/rng.hpp"

namespace civgraph::train {

namespace {

constexpr std::uint64_t kDropoutStream = 0xD5;

}  // namespace

void TrainConfig::validate() const {
  if (max_epochs == 0) throw Error(ErrorKind::invalid_argument, "train config: max_epochs must be positive");
  if (patience == 0 || patience >= max_epochs) {
    throw Error(ErrorKind::invalid_argument, "train config: patience must lie in [1, max_epochs)");
  }
  if (!(optimizer.lr >= 0.0) || !(optimizer.weight_decay >= 0.0)) {
    throw Error(ErrorKind::invalid_argument, "train config: lr and weight_decay must be non-negative");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "train config: threshold must lie in (0, 1)");
  }
}

void check_partition(const Partition& p, const model::HybridModel& model, const char* name) {
  if (p.graph == nullptr) throw Error(ErrorKind::invalid_argument, std::string(name) + " partition has no graph");
  const auto n = static_cast<nn::Index>(p.graph->n_nodes);
  if (p.x.rows() != n || p.y.size() != n) {
    throw Error(ErrorKind::shape_mismatch, std::string(name) + " partition: graph has " + std::to_string(n) +
                                               " nodes, features " + std::to_string(p.x.rows()) + ", labels " +
                                               std::to_string(p.y.size()));
  }
  if (p.x.cols() != model.config().input_dim) {
    throw Error(ErrorKind::shape_mismatch, std::string(name) + " partition: feature width " +
                                               std::to_string(p.x.cols()) + ", model expects " +
                                               std::to_string(model.config().input_dim));
  }
}

TrainResult train(model::HybridModel model, const Partition& train_part, const Partition& val_part,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  check_partition(train_part, model, "train");
  check_partition(val_part, model, "val");
  const CounterRng dropout_keys = CounterRng(cfg.seed).split(kDropoutStream);

  TrainResult result;
  result.best_val_auc = -1.0;
  std::uint32_t since_best = 0;
  for (std::uint32_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const nn::ForwardContext ctx{nn::Mode::train, dropout_keys.at(epoch)};
    model.zero_grad();
    const auto forward = model.forward(*train_part.graph, train_part.x, ctx);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = nn::bce_loss(forward.y_hat, train_part.y);
    if (!std::isfinite(rec.train_loss)) {
      std::ostringstream msg;
      msg << "non-finite training loss " << rec.train_loss << " at epoch " << epoch << " (y_hat range ["
          << forward.y_hat.minCoeff() << ", " << forward.y_hat.maxCoeff() << "])";
      throw Error(ErrorKind::numeric, msg.str());
    }
    rec.train_auc = auc_roc(forward.y_hat, train_part.y);
    rec.mean_alpha_gnn = forward.fusion.alpha_gnn.mean();
    model.backward(nn::bce_loss_backward(forward.y_hat, train_part.y));
    const auto params = model.parameters();
    nn::adam_step(params, cfg.optimizer, epoch);

    const auto val = evaluate(model, *val_part.graph, val_part.x, val_part.y, nullptr, cfg.threshold);
    rec.val_auc = val.report.auc;
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_auc > result.best_val_auc) {
      result.best_val_auc = rec.val_auc;
      result.best_epoch = epoch;
      result.best_model = model;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

}  // namespace civgraph::train
