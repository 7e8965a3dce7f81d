#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace quretec {

struct AnswerSpan {
  std::string text;  // source document text
  int start = 0;     // char offsets into text, [start, end)
  int end = 0;
};

struct Turn {
  int turn_index = 0;  // 1-based, contiguous within a topic
  std::string query;
  std::optional<std::string> gold_rewrite;
  std::vector<std::string> relevant_passage_ids;
  std::optional<AnswerSpan> answer;
};

/// One conversation: ordered turns on a shared topic. Turn 1 has no
/// history by definition.
struct Topic {
  std::string topic_id;
  std::vector<Turn> turns;

  const Turn& turn(int turn_index) const;
};

/// Conventional query id for one turn: "<topic_id>_<turn>".
std::string turn_query_id(const std::string& topic_id, int turn_index);

/// JSON-lines ingestion, one topic per line:
///   {"topic_id": str, "turns": [{"turn": int, "query": str, "rewrite": str?,
///    "relevant_passages": [str]?, "answer": {"text","start","end"}?}]}
/// Validates turn indices (1-based, contiguous) and non-empty topics.
std::vector<Topic> load_topics_jsonl(const std::filesystem::path& path);

std::vector<Topic> parse_topics_jsonl(const std::string& content);

}  // namespace quretec
