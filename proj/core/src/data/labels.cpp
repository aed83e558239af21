#include "civgraph/data/labels.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "civgraph/binary_io.hpp"
#include "civgraph/error.hpp"
#include "civgraph/rng.hpp"

namespace civgraph::data {

namespace {

constexpr std::uint64_t kBalanceStream = 0xBA1A;
constexpr std::uint64_t kSplitStream = 0x5B17;

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw Error(ErrorKind::invalid_argument, "unknown split '" + std::string(name) + "'");
}

std::vector<LabeledEntry> LabeledDataset::partition(Split split) const {
  std::vector<LabeledEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [split](const LabeledEntry& e) { return e.split == split; });
  return out;
}

std::uint8_t majority_label(std::span<const std::uint8_t> votes) {
  if (votes.empty()) throw Error(ErrorKind::invalid_argument, "empty vote list");
  std::size_t positive = 0;
  for (auto v : votes) {
    if (v > 1) throw Error(ErrorKind::invalid_argument, "vote outside {0,1}");
    positive += v;
  }
  const std::size_t negative = votes.size() - positive;
  return positive >= negative ? 1 : 0;
}

LabelMap aggregate_labels(std::span<const AnnotationSet> annotations) {
  LabelMap labels;
  for (const auto& set : annotations) {
    if (set.worker_votes.empty()) {
      throw Error(ErrorKind::invalid_argument, "comment " + std::to_string(set.comment_id) + " has no votes");
    }
    labels[set.comment_id] = majority_label(set.worker_votes);
  }
  return labels;
}

std::vector<CommentId> balance_dataset(const LabelMap& labels, std::uint64_t seed) {
  std::vector<CommentId> positives;
  std::vector<CommentId> negatives;
  for (const auto& [id, label] : labels) (label ? positives : negatives).push_back(id);
  if (positives.empty() || negatives.empty()) {
    throw Error(ErrorKind::invalid_argument, "balancing needs both classes (positives=" +
                                                 std::to_string(positives.size()) +
                                                 ", negatives=" + std::to_string(negatives.size()) + ")");
  }

  auto& minority = positives.size() <= negatives.size() ? positives : negatives;
  auto& majority = positives.size() <= negatives.size() ? negatives : positives;

  // Partial Fisher-Yates: the first |minority| slots become a uniform sample.
  CounterRng rng = CounterRng(seed).split(kBalanceStream);
  for (std::size_t i = 0; i < minority.size(); ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(majority.size() - i));
    std::swap(majority[i], majority[j]);
  }
  majority.resize(minority.size());

  std::vector<CommentId> out;
  out.reserve(2 * minority.size());
  out.insert(out.end(), positives.begin(), positives.end());
  out.insert(out.end(), negatives.begin(), negatives.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::array<std::size_t, 2> split_cuts(std::size_t n, SplitRatios ratios) {
  const std::uint64_t total = std::uint64_t{ratios.train} + ratios.val + ratios.test;
  // round(n * cumulative / total), half rounding up, in exact integer arithmetic
  auto cut = [&](std::uint64_t cumulative) {
    return static_cast<std::size_t>((2 * n * cumulative + total) / (2 * total));
  };
  return {cut(ratios.train), cut(std::uint64_t{ratios.train} + ratios.val)};
}

LabeledDataset split_dataset(std::span<const CommentId> ids, const LabelMap& labels, SplitRatios ratios,
                             std::uint64_t seed, Task task) {
  if (ratios.train == 0 || ratios.val == 0 || ratios.test == 0) {
    throw Error(ErrorKind::invalid_argument, "split ratios must be positive");
  }
  std::array<std::vector<CommentId>, 2> by_class;
  std::unordered_set<CommentId> seen;
  for (auto id : ids) {
    auto it = labels.find(id);
    if (it == labels.end()) throw Error(ErrorKind::invalid_argument, "id " + std::to_string(id) + " has no label");
    if (!seen.insert(id).second) throw Error(ErrorKind::invalid_argument, "duplicate id " + std::to_string(id));
    by_class[it->second].push_back(id);
  }

  LabeledDataset dataset{task, seed, {}};
  const CounterRng root = CounterRng(seed).split(kSplitStream);
  for (std::uint8_t label = 0; label < 2; ++label) {
    auto& members = by_class[label];
    if (members.size() < 10) {
      throw Error(ErrorKind::invalid_argument, "class " + std::to_string(label) + " has " +
                                                   std::to_string(members.size()) +
                                                   " items; at least 10 are needed for a split");
    }
    std::sort(members.begin(), members.end());
    CounterRng rng = root.split(label);
    shuffle(std::span(members), rng);
    const auto [train_end, val_end] = split_cuts(members.size(), ratios);
    for (std::size_t i = 0; i < members.size(); ++i) {
      const Split split = i < train_end ? Split::train : (i < val_end ? Split::val : Split::test);
      dataset.entries.push_back({members[i], label, split});
    }
  }
  std::sort(dataset.entries.begin(), dataset.entries.end(),
            [](const LabeledEntry& a, const LabeledEntry& b) { return a.comment_id < b.comment_id; });
  return dataset;
}

std::string format_splits(const LabeledDataset& dataset) {
  std::ostringstream out;
  out << "rev_id\tlabel\tsplit\n";
  for (const auto& e : dataset.entries) {
    out << e.comment_id << '\t' << static_cast<int>(e.label) << '\t' << to_string(e.split) << '\n';
  }
  return std::move(out).str();
}

LabeledDataset parse_splits(std::string_view contents, const std::string& source) {
  LabeledDataset dataset;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool header_seen = false;
  std::unordered_set<CommentId> seen;
  while (start < contents.size()) {
    auto end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    auto line = contents.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "rev_id\tlabel\tsplit") throw FormatError(source, line_no, "rev_id", "unexpected header");
      header_seen = true;
      continue;
    }
    std::istringstream fields{std::string(line)};
    std::string id_text, label_text, split_text;
    if (!std::getline(fields, id_text, '\t')) throw FormatError(source, line_no, "rev_id", "missing field");
    if (!std::getline(fields, label_text, '\t')) throw FormatError(source, line_no, "label", "missing field");
    if (!std::getline(fields, split_text, '\t')) throw FormatError(source, line_no, "split", "missing field");
    LabeledEntry entry;
    try {
      std::size_t used = 0;
      entry.comment_id = std::stoull(id_text, &used);
      if (used != id_text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError(source, line_no, "rev_id", "expected unsigned integer, got '" + id_text + "'");
    }
    if (label_text != "0" && label_text != "1") {
      throw FormatError(source, line_no, "label", "expected 0 or 1, got '" + label_text + "'");
    }
    entry.label = label_text == "1" ? 1 : 0;
    try {
      entry.split = parse_split(split_text);
    } catch (const Error&) {
      throw FormatError(source, line_no, "split", "unknown split '" + split_text + "'");
    }
    if (!seen.insert(entry.comment_id).second) {
      throw FormatError(source, line_no, "rev_id", "duplicate id " + id_text);
    }
    dataset.entries.push_back(entry);
  }
  if (!header_seen) throw FormatError(source, 1, "rev_id", "empty file, header row expected");
  std::sort(dataset.entries.begin(), dataset.entries.end(),
            [](const LabeledEntry& a, const LabeledEntry& b) { return a.comment_id < b.comment_id; });
  return dataset;
}

void save_splits(const LabeledDataset& dataset, const std::filesystem::path& file) {
  io::write_file_atomic(file, format_splits(dataset));
}

LabeledDataset load_splits(const std::filesystem::path& file) {
  return parse_splits(io::read_file(file), file.string());
}

}  // namespace civgraph::data
