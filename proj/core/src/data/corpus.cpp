#include "civgraph/data/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_map>
#include <unordered_set>

#include "civgraph/binary_io.hpp"
#include "civgraph/error.hpp"

namespace civgraph::data {

namespace {

struct TsvRow {
  std::size_t line = 0;
  std::vector<std::string_view> fields;
};

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

// Yields non-empty lines with their 1-based numbers; strips a trailing CR.
std::vector<TsvRow> read_rows(std::string_view contents) {
  std::vector<TsvRow> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < contents.size()) {
    auto end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    auto line = contents.substr(start, end - start);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) rows.push_back({line_no, split_tabs(line)});
    start = end + 1;
  }
  return rows;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

class Header {
 public:
  Header(const TsvRow& row, std::string source) : source_(std::move(source)) {
    for (std::size_t i = 0; i < row.fields.size(); ++i) index_[lower(row.fields[i])] = i;
  }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t require(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw FormatError(source_, 1, std::string(name), "required column missing from header");
  }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::string source_;
};

std::string_view field(const TsvRow& row, std::size_t col, std::string_view name, const std::string& source) {
  if (col >= row.fields.size()) {
    throw FormatError(source, row.line, std::string(name),
                      "missing field (row has " + std::to_string(row.fields.size()) + " columns)");
  }
  return row.fields[col];
}

// Accepts "123" and the "123.0" spelling used by the public release.
CommentId parse_id(std::string_view text, const TsvRow& row, std::string_view name, const std::string& source) {
  auto digits = text;
  if (auto dot = digits.find('.'); dot != std::string_view::npos) {
    auto frac = digits.substr(dot + 1);
    if (!std::all_of(frac.begin(), frac.end(), [](char c) { return c == '0'; })) {
      throw FormatError(source, row.line, std::string(name), "non-integral id '" + std::string(text) + "'");
    }
    digits = digits.substr(0, dot);
  }
  CommentId value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size()) {
    throw FormatError(source, row.line, std::string(name), "expected unsigned integer, got '" + std::string(text) + "'");
  }
  return value;
}

std::uint8_t parse_vote(std::string_view text, const TsvRow& row, std::string_view name, const std::string& source) {
  if (text == "0" || text == "0.0") return 0;
  if (text == "1" || text == "1.0") return 1;
  throw FormatError(source, row.line, std::string(name), "expected vote 0 or 1, got '" + std::string(text) + "'");
}

Namespace parse_namespace(std::string_view text, const TsvRow& row, std::string_view name, const std::string& source) {
  const auto value = lower(text);
  if (value == "user" || value == "user_talk") return Namespace::user_talk;
  if (value == "article" || value == "article_talk") return Namespace::article_talk;
  throw FormatError(source, row.line, std::string(name), "unknown namespace '" + std::string(text) + "'");
}

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::attack: return "attack";
    case Task::aggression: return "aggression";
    case Task::toxicity: return "toxicity";
  }
  return "toxicity";
}

Task parse_task(std::string_view name) {
  if (name == "attack") return Task::attack;
  if (name == "aggression") return Task::aggression;
  if (name == "toxicity") return Task::toxicity;
  throw Error(ErrorKind::invalid_argument, "unknown task '" + std::string(name) + "'");
}

std::string_view to_string(Namespace ns) {
  return ns == Namespace::user_talk ? "user_talk" : "article_talk";
}

std::size_t utf8_length(std::string_view text) {
  return static_cast<std::size_t>(
      std::count_if(text.begin(), text.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::vector<CommentRecord> parse_comments(std::string_view contents, const std::string& source) {
  const auto rows = read_rows(contents);
  if (rows.empty()) throw FormatError(source, 1, "rev_id", "empty file, header row expected");
  const Header header(rows.front(), source);
  const auto id_col = header.require("rev_id");
  const auto text_col = header.require("comment");
  const auto ns_col = header.find("namespace") ? *header.find("namespace") : header.require("ns");
  const std::string_view ns_name = header.find("namespace") ? "namespace" : "ns";

  std::vector<CommentRecord> comments;
  comments.reserve(rows.size() - 1);
  std::unordered_set<CommentId> seen;
  for (auto row = rows.begin() + 1; row != rows.end(); ++row) {
    CommentRecord record;
    record.comment_id = parse_id(field(*row, id_col, "rev_id", source), *row, "rev_id", source);
    record.text = std::string(field(*row, text_col, "comment", source));
    record.ns = parse_namespace(field(*row, ns_col, ns_name, source), *row, ns_name, source);
    record.char_length = utf8_length(record.text);
    if (!seen.insert(record.comment_id).second) {
      throw FormatError(source, row->line, "rev_id", "duplicate comment id " + std::to_string(record.comment_id));
    }
    comments.push_back(std::move(record));
  }
  return comments;
}

std::vector<AnnotationSet> parse_annotations(std::string_view contents, const std::string& source,
                                             std::optional<Task> task, std::vector<std::string>* warnings) {
  const auto rows = read_rows(contents);
  if (rows.empty()) throw FormatError(source, 1, "rev_id", "empty file, header row expected");
  const Header header(rows.front(), source);
  const auto id_col = header.require("rev_id");
  header.require("worker_id");
  std::string vote_name = "label";
  if (!header.find("label")) {
    if (!task) throw FormatError(source, 1, "label", "required column missing from header");
    vote_name = std::string(to_string(*task));
  }
  const auto vote_col = header.require(vote_name);

  std::vector<AnnotationSet> sets;
  std::unordered_map<CommentId, std::size_t> slot;
  for (auto row = rows.begin() + 1; row != rows.end(); ++row) {
    const auto id = parse_id(field(*row, id_col, "rev_id", source), *row, "rev_id", source);
    const auto vote = parse_vote(field(*row, vote_col, vote_name, source), *row, vote_name, source);
    auto [it, inserted] = slot.try_emplace(id, sets.size());
    if (inserted) sets.push_back({id, {}});
    sets[it->second].worker_votes.push_back(vote);
  }
  if (warnings && sets.empty()) warnings->push_back(source + ": no annotation rows");
  return sets;
}

ParsedCorpus parse_corpus(const std::filesystem::path& comments_file, const std::filesystem::path& annotations_file,
                          std::optional<Task> task) {
  ParsedCorpus corpus;
  corpus.comments = parse_comments(io::read_file(comments_file), comments_file.string());
  auto annotations =
      parse_annotations(io::read_file(annotations_file), annotations_file.string(), task, &corpus.warnings);

  std::unordered_set<CommentId> known;
  known.reserve(corpus.comments.size());
  for (const auto& c : corpus.comments) known.insert(c.comment_id);

  std::size_t orphaned = 0;
  corpus.annotations.reserve(annotations.size());
  for (auto& set : annotations) {
    if (known.contains(set.comment_id)) {
      corpus.annotations.push_back(std::move(set));
    } else {
      ++orphaned;
    }
  }
  if (orphaned > 0) {
    corpus.warnings.push_back(std::to_string(orphaned) + " annotated ids have no comment row; ignored");
  }
  if (const auto unlabeled = corpus.comments.size() - corpus.annotations.size(); unlabeled > 0) {
    corpus.warnings.push_back(std::to_string(unlabeled) + " comments have no annotations and will be dropped");
  }
  return corpus;
}

}  // namespace civgraph::data
