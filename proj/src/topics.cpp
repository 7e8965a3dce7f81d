#include "quretec/topics.hpp"

#include <json.hpp>

#include "quretec/common.hpp"

namespace quretec {

using nlohmann::json;

const Turn& Topic::turn(int turn_index) const {
  if (turn_index < 1 || turn_index > static_cast<int>(turns.size()))
    throw InputError("topic " + topic_id + " has no turn " +
                     std::to_string(turn_index));
  return turns[static_cast<size_t>(turn_index - 1)];
}

std::string turn_query_id(const std::string& topic_id, int turn_index) {
  return topic_id + "_" + std::to_string(turn_index);
}

std::vector<Topic> parse_topics_jsonl(const std::string& content) {
  std::vector<Topic> topics;
  size_t pos = 0;
  int line_no = 0;
  while (pos < content.size()) {
    size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw InputError("topics line " + std::to_string(line_no) +
                       ": invalid JSON: " + e.what());
    }
    Topic topic;
    try {
      topic.topic_id = j.at("topic_id").get<std::string>();
      for (const auto& jt : j.at("turns")) {
        Turn turn;
        turn.turn_index = jt.at("turn").get<int>();
        turn.query = jt.at("query").get<std::string>();
        if (jt.contains("rewrite") && !jt["rewrite"].is_null())
          turn.gold_rewrite = jt["rewrite"].get<std::string>();
        if (jt.contains("relevant_passages") &&
            !jt["relevant_passages"].is_null())
          turn.relevant_passage_ids =
              jt["relevant_passages"].get<std::vector<std::string>>();
        if (jt.contains("answer") && !jt["answer"].is_null()) {
          AnswerSpan span;
          span.text = jt["answer"].at("text").get<std::string>();
          span.start = jt["answer"].at("start").get<int>();
          span.end = jt["answer"].at("end").get<int>();
          turn.answer = std::move(span);
        }
        topic.turns.push_back(std::move(turn));
      }
    } catch (const json::exception& e) {
      throw InputError("topics line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    if (topic.turns.empty())
      throw InputError("topic " + topic.topic_id + " has no turns");
    for (size_t i = 0; i < topic.turns.size(); ++i) {
      if (topic.turns[i].turn_index != static_cast<int>(i) + 1)
        throw InputError("topic " + topic.topic_id +
                         ": turn indices must be 1-based and contiguous");
    }
    topics.push_back(std::move(topic));
  }
  return topics;
}

std::vector<Topic> load_topics_jsonl(const std::filesystem::path& path) {
  return parse_topics_jsonl(read_file(path));
}

}  // namespace quretec
