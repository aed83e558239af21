#include "synthetic_task.hpp"

#include "civgraph/model/hybrid_model.hpp"

namespace civgraph::testing {

namespace {

PartitionBundle bundle(const TwoClusterData& data, const data::LabeledDataset& ds, data::Split split,
                       const graph::GraphConfig& cfg) {
  std::vector<data::CommentId> ids;
  PartitionBundle out;
  const auto entries = ds.partition(split);
  out.y.resize(static_cast<nn::Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    ids.push_back(entries[i].comment_id);
    out.y(static_cast<nn::Index>(i)) = entries[i].label;
  }
  const auto rows = data::l2_normalize(data.embeddings.select(ids));
  graph::GraphConfig local = cfg;
  if (local.k_min >= rows.n_rows) local.k_min = rows.n_rows - 1;
  out.graph = graph::build_graph(rows, local).graph;
  out.x = model::to_features(rows.values, rows.n_rows, rows.dim);
  return out;
}

}  // namespace

SyntheticTask make_synthetic_task(const TwoClusterData& data, std::uint64_t seed, const graph::GraphConfig& cfg) {
  data::LabelMap labels;
  std::vector<data::CommentId> ids;
  for (std::uint32_t i = 0; i < data.embeddings.n_rows; ++i) {
    labels[data.embeddings.row_ids[i]] = data.labels[i];
    ids.push_back(data.embeddings.row_ids[i]);
  }
  SyntheticTask task;
  task.dataset = data::split_dataset(ids, labels, {}, seed);
  task.train = bundle(data, task.dataset, data::Split::train, cfg);
  task.val = bundle(data, task.dataset, data::Split::val, cfg);
  task.test = bundle(data, task.dataset, data::Split::test, cfg);
  return task;
}

}  // namespace civgraph::testing
