#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "civgraph/binary_io.hpp"
#include "civgraph/data/corpus.hpp"
#include "civgraph/data/embeddings.hpp"
#include "civgraph/data/labels.hpp"
#include "civgraph/error.hpp"
#include "civgraph/graph/builder.hpp"
#include "civgraph/graph/comment_graph.hpp"
#include "civgraph/model/checkpoint.hpp"
#include "civgraph/model/gradcheck_suite.hpp"
#include "civgraph/model/hybrid_model.hpp"
#include "civgraph/train/metrics.hpp"
#include "civgraph/train/reports.hpp"
#include "civgraph/train/trainer.hpp"
#include "config_file.hpp"

namespace civgraph::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kExitFailure = 1;
constexpr int kExitInput = 2;

constexpr data::Split kSplits[] = {data::Split::train, data::Split::val, data::Split::test};

struct SharedOptions {
  std::string task = "toxicity";
  std::uint64_t seed = 0;
  std::string config;
  std::string out_dir = ".";
  double tau = 0.9;
  std::uint32_t k_min = 5;
  std::uint32_t threads = 1;
};

struct IngestOptions {
  std::string comments;
  std::string annotations;
  std::uint32_t train = 8;
  std::uint32_t val = 1;
  std::uint32_t test = 1;
};

struct BuildGraphOptions {
  std::string embeddings;
  std::string splits;
  std::uint32_t block_size = 1024;
};

struct TrainOptions {
  std::string embeddings;
  std::string splits;
  std::string graph_dir;
  model::ModelConfig model;
  train::TrainConfig train;
  std::string activation = "relu";
  std::string attention_activation = "tanh";
  std::uint32_t log_every = 10;
};

struct EvalOptions {
  std::string model;
  std::string embeddings;
  std::string splits;
  std::string graph_dir;
  std::string split = "test";
  double threshold = train::kDefaultThreshold;
};

struct GradcheckOptions {
  double tolerance = 1e-4;
  double step = 1e-4;
  double floor = 1e-3;
};

void log(const std::string& message) { std::cerr << "civgraph: " << message << '\n'; }

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw Error(ErrorKind::invalid_argument, std::string(flag) + " is required");
  if (!fs::is_regular_file(path)) throw Error(ErrorKind::io, std::string(flag) + ": no such file: " + path);
}

fs::path prepare_out_dir(const SharedOptions& shared) {
  const fs::path out(shared.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

fs::path graph_file(const fs::path& dir, data::Split split) {
  return dir / (std::string(data::to_string(split)) + ".grf1");
}

void add_shared(CLI::App& sub, SharedOptions& s) {
  sub.add_option("--task", s.task, "Label task")->check(CLI::IsMember({"attack", "aggression", "toxicity"}));
  sub.add_option("--seed", s.seed, "Seed for sampling, splitting, initialization and dropout");
  sub.add_option("--config", s.config, "JSON config file; command-line flags take precedence");
  sub.add_option("--out-dir", s.out_dir, "Directory receiving output files");
  sub.add_option("--tau", s.tau, "Similarity threshold; edges need cosine > tau");
  sub.add_option("--k-min", s.k_min, "Minimum non-self neighbors per node");
  sub.add_option("--threads", s.threads, "Worker threads for graph building")->check(CLI::PositiveNumber);
}

void add_model_flags(CLI::App& sub, TrainOptions& o) {
  auto& m = o.model;
  sub.add_option("--hidden-dim", m.hidden_dim, "Width of both branch outputs");
  sub.add_option("--gnn-layers", m.gnn_layers, "GAT layers");
  sub.add_option("--heads", m.heads, "Attention heads on every GAT layer but the last");
  sub.add_option("--mlp-layers", m.mlp_layers, "Linear layers in the MLP branch");
  sub.add_option("--classifier-hidden", m.classifier_hidden, "Hidden width of the classifier head");
  sub.add_option("--attention-hidden", m.attention_hidden, "Hidden width of the fusion scorer");
  sub.add_option("--dropout", m.dropout, "Dropout probability in the MLP branch and classifier");
  sub.add_option("--negative-slope", m.negative_slope, "LeakyReLU slope in GAT attention logits");
  sub.add_option("--bn-momentum", m.bn_momentum, "Batch-norm running statistics momentum");
  sub.add_option("--batch-norm", m.batch_norm, "Batch norm after intermediate GAT layers");
  sub.add_option("--batch-norm-final", m.batch_norm_final, "Batch norm after the last GAT layer");
  sub.add_option("--residual", m.residual, "Residual connections around GAT layers");
  sub.add_option("--activation", o.activation, "Hidden activation")
      ->check(CLI::IsMember({"identity", "relu", "leaky_relu", "tanh"}));
  sub.add_option("--attention-activation", o.attention_activation, "Fusion scorer activation")
      ->check(CLI::IsMember({"identity", "relu", "leaky_relu", "tanh"}));

  auto& t = o.train;
  sub.add_option("--max-epochs", t.max_epochs, "Upper bound on training epochs");
  sub.add_option("--patience", t.patience, "Epochs without validation AUC gain before stopping");
  sub.add_option("--lr", t.optimizer.lr, "Adam learning rate");
  sub.add_option("--weight-decay", t.optimizer.weight_decay, "Decoupled weight decay");
  sub.add_option("--beta1", t.optimizer.beta1, "Adam first-moment decay");
  sub.add_option("--beta2", t.optimizer.beta2, "Adam second-moment decay");
  sub.add_option("--adam-eps", t.optimizer.eps, "Adam denominator epsilon");
  sub.add_option("--threshold", t.threshold, "Hard-label threshold (y_hat >= threshold is positive)");
  sub.add_option("--log-every", o.log_every, "Print progress every N epochs (0 = never)");
}

void add_eval_flags(CLI::App& sub, EvalOptions& o) {
  sub.add_option("--model", o.model, "MDL1 checkpoint");
  sub.add_option("--embeddings", o.embeddings, "EMB1 embedding file");
  sub.add_option("--splits", o.splits, "Splits TSV from ingest");
  sub.add_option("--graph-dir", o.graph_dir, "Directory holding <split>.grf1 (default: --out-dir)");
  sub.add_option("--split", o.split, "Partition to score")->check(CLI::IsMember({"train", "val", "test"}));
  sub.add_option("--threshold", o.threshold, "Hard-label threshold (y_hat >= threshold is positive)");
}

std::string json_split_counts(const data::LabeledDataset& ds) {
  nlohmann::ordered_json out;
  for (auto split : kSplits) {
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    for (const auto& e : ds.partition(split)) (e.label ? pos : neg) += 1;
    out[std::string(data::to_string(split))] = {{"total", pos + neg}, {"positive", pos}, {"negative", neg}};
  }
  return out.dump();
}

int cmd_ingest(const SharedOptions& shared, const IngestOptions& o) {
  require_file(o.comments, "--comments");
  require_file(o.annotations, "--annotations");
  const auto task = data::parse_task(shared.task);
  const auto corpus = data::parse_corpus(o.comments, o.annotations, task);
  for (const auto& w : corpus.warnings) log("warning: " + w);

  const auto labels = data::aggregate_labels(corpus.annotations);
  std::uint64_t positive = 0;
  for (const auto& [id, label] : labels) positive += label;
  const auto balanced = data::balance_dataset(labels, shared.seed);
  const auto dataset = data::split_dataset(balanced, labels, {o.train, o.val, o.test}, shared.seed, task);

  const auto out = prepare_out_dir(shared);
  data::save_splits(dataset, out / "splits.tsv");

  const double fraction = labels.empty() ? 0.0 : static_cast<double>(positive) / static_cast<double>(labels.size());
  nlohmann::ordered_json stats;
  stats["task"] = shared.task;
  stats["seed"] = shared.seed;
  stats["comments"] = corpus.comments.size();
  stats["labeled"] = labels.size();
  stats["positive"] = positive;
  stats["negative"] = labels.size() - positive;
  stats["positive_fraction"] = fraction;
  stats["balanced"] = balanced.size();
  stats["splits"] = nlohmann::ordered_json::parse(json_split_counts(dataset));
  stats["warnings"] = corpus.warnings.size();
  io::write_file_atomic(out / "ingest_stats.json", stats.dump(2) + "\n");

  char pct[32];
  std::snprintf(pct, sizeof(pct), "%.1f", 100.0 * fraction);
  std::cout << "task " << shared.task << ": " << corpus.comments.size() << " comments, " << labels.size()
            << " labeled, " << pct << "% positive; balanced to " << balanced.size() << " ("
            << dataset.partition(data::Split::train).size() << " train / "
            << dataset.partition(data::Split::val).size() << " val / " << dataset.partition(data::Split::test).size()
            << " test)\n";
  return 0;
}

int cmd_build_graph(const SharedOptions& shared, const BuildGraphOptions& o) {
  require_file(o.embeddings, "--embeddings");
  require_file(o.splits, "--splits");
  const auto embeddings = data::load_embeddings(o.embeddings);
  const auto dataset = data::load_splits(o.splits);
  const auto out = prepare_out_dir(shared);

  for (auto split : kSplits) {
    const std::string name(data::to_string(split));
    std::vector<data::CommentId> ids;
    for (const auto& e : dataset.partition(split)) ids.push_back(e.comment_id);
    if (ids.empty()) {
      log("warning: split '" + name + "' is empty; no graph written");
      continue;
    }
    graph::GraphConfig cfg;
    cfg.tau = shared.tau;
    cfg.k_min = shared.k_min;
    cfg.block_size = o.block_size;
    cfg.threads = shared.threads;
    if (ids.size() <= cfg.k_min) {
      cfg.k_min = static_cast<std::uint32_t>(ids.size() - 1);
      log("warning: split '" + name + "' has " + std::to_string(ids.size()) + " nodes; k_min lowered to " +
          std::to_string(cfg.k_min));
    }
    const auto rows = data::l2_normalize(embeddings.select(ids));
    const auto build = graph::build_graph(rows, cfg);
    graph::save_graph(build.graph, graph_file(out, split));
    io::write_file_atomic(out / (name + ".stats.json"), graph::stats_to_json(build.stats) + "\n");
    std::cout << name << ": " << build.stats.n_nodes << " nodes, " << build.stats.edge_count << " edges ("
              << build.stats.fallback_edges << " fallback), degree " << build.stats.min_degree << ".."
              << build.stats.max_degree << ", " << build.stats.component_count << " components\n";
  }
  return 0;
}

/// Graph plus node-aligned features and labels for one partition.
struct LoadedPartition {
  std::unique_ptr<graph::CommentGraph> graph;
  train::Partition part;
};

LoadedPartition load_partition(const fs::path& file, data::Split split, const data::EmbeddingMatrix& embeddings,
                               const data::LabeledDataset& dataset) {
  if (!fs::is_regular_file(file)) throw Error(ErrorKind::io, "no such graph file: " + file.string());
  LoadedPartition out;
  out.graph = std::make_unique<graph::CommentGraph>(graph::load_graph(file));
  const auto& g = *out.graph;

  const auto entries = dataset.partition(split);
  if (entries.size() != g.n_nodes) {
    throw Error(ErrorKind::shape_mismatch, file.string() + " has " + std::to_string(g.n_nodes) +
                                               " nodes but the splits file lists " + std::to_string(entries.size()) +
                                               " '" + std::string(data::to_string(split)) + "' comments");
  }
  std::unordered_map<data::CommentId, std::uint8_t> label_of;
  for (const auto& e : entries) label_of.emplace(e.comment_id, e.label);
  out.part.y.resize(g.n_nodes);
  for (std::uint32_t i = 0; i < g.n_nodes; ++i) {
    const auto it = label_of.find(g.node_ids[i]);
    if (it == label_of.end()) {
      throw Error(ErrorKind::shape_mismatch, file.string() + ": node id " + std::to_string(g.node_ids[i]) +
                                                 " is not in the '" + std::string(data::to_string(split)) +
                                                 "' split");
    }
    out.part.y(i) = it->second;
  }
  const auto rows = data::l2_normalize(embeddings.select(g.node_ids));
  out.part.x = model::to_features(rows.values, rows.n_rows, rows.dim);
  out.part.graph = out.graph.get();
  return out;
}

int cmd_train(const SharedOptions& shared, TrainOptions o) {
  require_file(o.embeddings, "--embeddings");
  require_file(o.splits, "--splits");
  const fs::path graph_dir = o.graph_dir.empty() ? fs::path(shared.out_dir) : fs::path(o.graph_dir);
  const auto embeddings = data::load_embeddings(o.embeddings);
  const auto dataset = data::load_splits(o.splits);
  const auto train_part = load_partition(graph_file(graph_dir, data::Split::train), data::Split::train, embeddings, dataset);
  const auto val_part = load_partition(graph_file(graph_dir, data::Split::val), data::Split::val, embeddings, dataset);

  o.model.input_dim = embeddings.dim;
  o.model.seed = shared.seed;
  o.model.task = data::parse_task(shared.task);
  o.model.activation = nn::parse_activation(o.activation);
  o.model.attention_activation = nn::parse_activation(o.attention_activation);
  o.train.seed = shared.seed;
  const auto out = prepare_out_dir(shared);

  auto on_epoch = [&](const train::EpochRecord& r) {
    if (o.log_every == 0 || r.epoch % o.log_every != 0) return;
    char line[160];
    std::snprintf(line, sizeof(line), "epoch %u loss %.5f train_auc %.4f val_auc %.4f alpha_gnn %.3f", r.epoch,
                  r.train_loss, r.train_auc, r.val_auc, r.mean_alpha_gnn);
    log(line);
  };
  auto result = train::train(model::HybridModel(o.model), train_part.part, val_part.part, o.train, on_epoch);

  model::save_checkpoint(result.best_model, out / "model.mdl1");
  io::write_file_atomic(out / "history.csv", train::format_history(result.history));
  std::cout << "trained " << result.history.size() << " epochs" << (result.early_stopped ? " (early stop)" : "")
            << "; best epoch " << result.best_epoch << ", val AUC " << train::format_real(result.best_val_auc)
            << "\n";
  return 0;
}

struct ScoredPartition {
  LoadedPartition data;
  train::Evaluation eval;
};

ScoredPartition score(const SharedOptions& shared, const EvalOptions& o, model::HybridModel& model) {
  require_file(o.model, "--model");
  require_file(o.embeddings, "--embeddings");
  require_file(o.splits, "--splits");
  const fs::path graph_dir = o.graph_dir.empty() ? fs::path(shared.out_dir) : fs::path(o.graph_dir);
  const auto embeddings = data::load_embeddings(o.embeddings);
  const auto dataset = data::load_splits(o.splits);
  model = model::load_checkpoint(o.model);

  const auto split = data::parse_split(o.split);
  std::optional<train::EvalReport> train_report;
  if (split != data::Split::train && fs::is_regular_file(graph_file(graph_dir, data::Split::train))) {
    const auto tp = load_partition(graph_file(graph_dir, data::Split::train), data::Split::train, embeddings, dataset);
    train::check_partition(tp.part, model, "train");
    train_report = train::evaluate(model, *tp.part.graph, tp.part.x, tp.part.y, nullptr, o.threshold).report;
  }
  ScoredPartition out{load_partition(graph_file(graph_dir, split), split, embeddings, dataset), {}};
  train::check_partition(out.data.part, model, o.split.c_str());
  out.eval = train::evaluate(model, *out.data.part.graph, out.data.part.x, out.data.part.y,
                             train_report ? &*train_report : nullptr, o.threshold);
  return out;
}

int cmd_eval(const SharedOptions& shared, const EvalOptions& o) {
  model::HybridModel model;
  const auto scored = score(shared, o, model);
  const auto out = prepare_out_dir(shared);
  const auto& r = scored.eval.report;
  io::write_file_atomic(out / ("report_" + o.split + ".json"), train::format_report(r));
  io::write_file_atomic(out / ("attention_" + o.split + ".tsv"),
                        train::format_attention(scored.data.graph->node_ids, scored.eval.forward.fusion,
                                                scored.eval.forward.y_hat, scored.data.part.y));
  char line[256];
  std::snprintf(line, sizeof(line), "%s: auc %.4f f1 %.4f precision %.4f recall %.4f accuracy %.4f alpha_gnn %.3f",
                o.split.c_str(), r.auc, r.f1, r.precision, r.recall, r.accuracy, r.mean_alpha_gnn);
  std::cout << line;
  if (r.train_test_auc_gap) std::cout << " train-gap " << train::format_real(*r.train_test_auc_gap);
  std::cout << '\n';
  return 0;
}

int cmd_predict(const SharedOptions& shared, const EvalOptions& o) {
  model::HybridModel model;
  const auto scored = score(shared, o, model);
  const auto out = prepare_out_dir(shared);
  const auto file = out / ("predictions_" + o.split + ".tsv");
  io::write_file_atomic(file, train::format_predictions(scored.data.graph->node_ids, scored.data.part.y,
                                                        scored.eval.forward.y_hat));
  std::cout << "wrote " << scored.data.part.y.size() << " predictions to " << file.string() << '\n';
  return 0;
}

int cmd_gradcheck(const SharedOptions& shared, const GradcheckOptions& o) {
  model::GradcheckSuiteOptions opts;
  opts.seed = shared.seed;
  opts.tolerance = o.tolerance;
  opts.check.step = o.step;
  opts.check.magnitude_floor = o.floor;
  const auto rows = model::run_gradcheck_suite(opts);
  bool ok = true;
  std::printf("%-18s %14s %8s %8s  %s\n", "op", "max_rel_error", "checked", "skipped", "status");
  for (const auto& row : rows) {
    std::printf("%-18s %14.3e %8zu %8zu  %s\n", row.op.c_str(), row.stats.max_rel_error, row.stats.checked,
                row.stats.skipped, row.passed ? "PASS" : "FAIL");
    if (!row.passed) {
      ok = false;
      log("gradient mismatch in " + row.op + " at " + row.stats.worst);
    }
  }
  return ok ? 0 : kExitFailure;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Similarity-graph incivility classifier: data pipeline, graph builder, hybrid GAT+MLP training"};
  app.name("civgraph");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  SharedOptions shared;
  IngestOptions ingest;
  BuildGraphOptions build;
  TrainOptions training;
  EvalOptions evaluation;
  GradcheckOptions gradcheck;

  auto* ingest_cmd = app.add_subcommand("ingest", "Aggregate votes, balance and split a corpus into splits.tsv");
  add_shared(*ingest_cmd, shared);
  ingest_cmd->add_option("--comments", ingest.comments, "Comments TSV");
  ingest_cmd->add_option("--annotations", ingest.annotations, "Annotations TSV");
  ingest_cmd->add_option("--train-ratio", ingest.train, "Train share of the split ratio");
  ingest_cmd->add_option("--val-ratio", ingest.val, "Validation share of the split ratio");
  ingest_cmd->add_option("--test-ratio", ingest.test, "Test share of the split ratio");

  auto* build_cmd = app.add_subcommand("build-graph", "Build one similarity graph per partition");
  add_shared(*build_cmd, shared);
  build_cmd->add_option("--embeddings", build.embeddings, "EMB1 embedding file");
  build_cmd->add_option("--splits", build.splits, "Splits TSV from ingest");
  build_cmd->add_option("--block-size", build.block_size, "Rows per similarity block")->check(CLI::PositiveNumber);

  auto* train_cmd = app.add_subcommand("train", "Train the hybrid model with early stopping on validation AUC");
  add_shared(*train_cmd, shared);
  train_cmd->add_option("--embeddings", training.embeddings, "EMB1 embedding file");
  train_cmd->add_option("--splits", training.splits, "Splits TSV from ingest");
  train_cmd->add_option("--graph-dir", training.graph_dir, "Directory holding <split>.grf1 (default: --out-dir)");
  add_model_flags(*train_cmd, training);

  auto* eval_cmd = app.add_subcommand("eval", "Score a partition and write a metrics report and attention TSV");
  add_shared(*eval_cmd, shared);
  add_eval_flags(*eval_cmd, evaluation);

  auto* predict_cmd = app.add_subcommand("predict", "Write per-node predictions for a partition");
  add_shared(*predict_cmd, shared);
  add_eval_flags(*predict_cmd, evaluation);

  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable op");
  add_shared(*gradcheck_cmd, shared);
  gradcheck_cmd->add_option("--tolerance", gradcheck.tolerance, "Maximum relative error per op");
  gradcheck_cmd->add_option("--step", gradcheck.step, "Central-difference step");
  gradcheck_cmd->add_option("--floor", gradcheck.floor, "Magnitude floor of the relative error denominator");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!shared.config.empty()) {
      require_file(shared.config, "--config");
      apply_config_file(*sub, shared.config);
    }
    if (sub == ingest_cmd) return cmd_ingest(shared, ingest);
    if (sub == build_cmd) return cmd_build_graph(shared, build);
    if (sub == train_cmd) return cmd_train(shared, training);
    if (sub == eval_cmd) return cmd_eval(shared, evaluation);
    if (sub == predict_cmd) return cmd_predict(shared, evaluation);
    return cmd_gradcheck(shared, gradcheck);
  } catch (const Error& e) {
    log(std::string("error: ") + e.what());
    return e.kind() == ErrorKind::internal ? kExitFailure : kExitInput;
  } catch (const std::exception& e) {
    log(std::string("internal error: ") + e.what());
    return kExitFailure;
  }
}

}  // namespace civgraph::cli
