#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "civgraph/graph/comment_graph.hpp"
#include "civgraph/model/hybrid_model.hpp"
#include "civgraph/nn/adam.hpp"
#include "civgraph/train/metrics.hpp"

namespace civgraph::train {

struct TrainConfig {
  std::uint32_t max_epochs = 500;
  std::uint32_t patience = 50;  // epochs without a strict validation AUC gain
  nn::AdamConfig optimizer;
  std::uint64_t seed = 0;       // dropout mask stream
  double threshold = kDefaultThreshold;

  void validate() const;
};

/// A node-aligned partition: graph row i carries features x.row(i) and label y(i).
struct Partition {
  const graph::CommentGraph* graph = nullptr;
  Matrix x;
  Vector y;
};

struct EpochRecord {
  std::uint32_t epoch = 0;     // 1-based
  double train_loss = 0.0;
  double train_auc = 0.0;      // on the training forward pass of this epoch
  double val_auc = 0.0;
  double mean_alpha_gnn = 0.0; // over training nodes, same pass
};

struct TrainResult {
  model::HybridModel best_model;
  std::vector<EpochRecord> history;
  std::uint32_t best_epoch = 0;
  double best_val_auc = 0.0;
  bool early_stopped = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Full-graph training: per epoch one train-mode forward over the whole
/// training graph, mean BCE, backward, one Adam step, then an eval-mode pass
/// over the validation graph. Returns a copy of the model at the epoch with
/// the highest validation AUC (earliest on ties).
TrainResult train(model::HybridModel model, const Partition& train_part, const Partition& val_part,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

void check_partition(const Partition& p, const model::HybridModel& model, const char* name);

}  // namespace civgraph::train
