#pragma once

#include <span>
#include <string>

#include "civgraph/data/corpus.hpp"
#include "civgraph/train/metrics.hpp"
#include "civgraph/train/trainer.hpp"

namespace civgraph::train {

/// Shortest decimal text that parses back to the same double.
std::string format_real(double v);

/// CSV `epoch,train_loss,train_auc,val_auc,mean_alpha_gnn`.
std::string format_history(std::span<const EpochRecord> history);

/// JSON object holding every EvalReport field; the gap is null when absent.
std::string format_report(const EvalReport& report);

/// TSV `node_id\ty\ty_hat`.
std::string format_predictions(std::span<const data::CommentId> node_ids, const Vector& y, const Vector& y_hat);

/// TSV `node_id\talpha_gnn\talpha_mlp\ty_hat\ty`.
std::string format_attention(std::span<const data::CommentId> node_ids, const model::FusionOutput& fusion,
                             const Vector& y_hat, const Vector& y);

}  // namespace civgraph::train
