#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "civgraph/data/corpus.hpp"

namespace civgraph::data {

using LabelMap = std::map<CommentId, std::uint8_t>;

enum class Split : std::uint8_t { train, val, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

struct LabeledEntry {
  CommentId comment_id = 0;
  std::uint8_t label = 0;
  Split split = Split::train;

  friend bool operator==(const LabeledEntry&, const LabeledEntry&) = default;
};

struct LabeledDataset {
  Task task = Task::toxicity;
  std::uint64_t seed = 0;
  std::vector<LabeledEntry> entries;  // sorted by comment_id

  std::vector<LabeledEntry> partition(Split split) const;
};

struct SplitRatios {
  std::uint32_t train = 8;
  std::uint32_t val = 1;
  std::uint32_t test = 1;
};

/// Majority vote; a tie resolves to the positive class.
std::uint8_t majority_label(std::span<const std::uint8_t> votes);

LabelMap aggregate_labels(std::span<const AnnotationSet> annotations);

/// Keeps every item of the minority class and draws an equally sized
/// seeded sample without replacement from the majority class. The result
/// is sorted by comment id.
std::vector<CommentId> balance_dataset(const LabelMap& labels, std::uint64_t seed);

/// Stratified split: within each class the ids are shuffled with a seeded
/// stream and cut at the rounded cumulative ratio boundaries, so every
/// per-class split size is within one item of its exact share.
LabeledDataset split_dataset(std::span<const CommentId> ids, const LabelMap& labels, SplitRatios ratios,
                             std::uint64_t seed, Task task = Task::toxicity);

/// Cut points [train_end, val_end] for `n` items; exposed for testing.
std::array<std::size_t, 2> split_cuts(std::size_t n, SplitRatios ratios);

std::string format_splits(const LabeledDataset& dataset);
LabeledDataset parse_splits(std::string_view contents, const std::string& source);
void save_splits(const LabeledDataset& dataset, const std::filesystem::path& file);
LabeledDataset load_splits(const std::filesystem::path& file);

}  // namespace civgraph::data
