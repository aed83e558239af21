#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace civgraph::data {

using CommentId = std::uint64_t;

enum class Namespace { user_talk, article_talk };

enum class Task { attack, aggression, toxicity };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);
std::string_view to_string(Namespace ns);

struct CommentRecord {
  CommentId comment_id = 0;
  std::string text;  // NEWLINE_TOKEN / TAB_TOKEN markers kept verbatim
  Namespace ns = Namespace::user_talk;
  std::size_t char_length = 0;  // UTF-8 code points in `text`
};

struct AnnotationSet {
  CommentId comment_id = 0;
  std::vector<std::uint8_t> worker_votes;  // 1 = uncivil for the task
};

struct ParsedCorpus {
  std::vector<CommentRecord> comments;
  std::vector<AnnotationSet> annotations;  // first-seen order of rev_id
  std::vector<std::string> warnings;
};

/// Number of UTF-8 code points; continuation bytes are not counted.
std::size_t utf8_length(std::string_view text);

/// Reads the comments and annotations TSVs. Columns are located by header
/// name: comments need `rev_id`, `comment` and `namespace` (or `ns`);
/// annotations need `rev_id`, `worker_id` and a vote column, which is
/// `label` when present and otherwise the column named after `task`.
ParsedCorpus parse_corpus(const std::filesystem::path& comments_file,
                          const std::filesystem::path& annotations_file,
                          std::optional<Task> task = std::nullopt);

std::vector<CommentRecord> parse_comments(std::string_view contents, const std::string& source);
std::vector<AnnotationSet> parse_annotations(std::string_view contents, const std::string& source,
                                             std::optional<Task> task, std::vector<std::string>* warnings);

}  // namespace civgraph::data
