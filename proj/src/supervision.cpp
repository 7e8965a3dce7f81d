#include "quretec/supervision.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "quretec/common.hpp"

namespace quretec::supervision {

using nlohmann::json;
using text::Term;
using text::Token;
using text::TokenOrigin;

void LabeledExample::validate() const {
  if (labels.size() != sequence.size() || mask.size() != sequence.size())
    throw InputError("example arrays disagree in length");
  for (size_t i = 0; i < sequence.size(); ++i) {
    const Token& tok = sequence[i];
    bool maskable = tok.origin == TokenOrigin::History && tok.term.has_value();
    if (mask[i] != (maskable ? 1 : 0))
      throw InputError("mask must be 1 exactly at history term positions");
    if (labels[i] == 1 && mask[i] == 0)
      throw InputError("label 1 at a masked-out position");
    if (labels[i] > 1 || mask[i] > 1) throw InputError("labels/mask not 0/1");
  }
}

namespace {

std::set<Term> intersect_minus(const std::set<Term>& source,
                               const std::set<Term>& history,
                               const std::set<Term>& current) {
  std::set<Term> out;
  for (const auto& t : source)
    if (history.count(t) && !current.count(t)) out.insert(t);
  return out;
}

std::set<Term> history_term_set(const std::vector<std::string>& history,
                                const text::Analyzer& analyzer) {
  std::set<Term> out;
  for (const auto& h : history) {
    auto terms = analyzer.term_set(h);
    out.insert(terms.begin(), terms.end());
  }
  return out;
}

}  // namespace

std::set<Term> gold_resolution_terms(const std::string& gold_rewrite,
                                     const std::vector<std::string>& history,
                                     const std::string& current,
                                     const text::Analyzer& analyzer) {
  return intersect_minus(analyzer.term_set(gold_rewrite),
                         history_term_set(history, analyzer),
                         analyzer.term_set(current));
}

std::set<Term> distant_resolution_terms(const std::string& relevant_passage,
                                        const std::vector<std::string>& history,
                                        const std::string& current,
                                        const text::Analyzer& analyzer) {
  return intersect_minus(analyzer.term_set(relevant_passage),
                         history_term_set(history, analyzer),
                         analyzer.term_set(current));
}

std::set<Term> distant_resolution_terms(
    const std::vector<std::string>& relevant_passages,
    const std::vector<std::string>& history, const std::string& current,
    const text::Analyzer& analyzer) {
  std::set<Term> out;
  for (const auto& p : relevant_passages) {
    auto terms = distant_resolution_terms(p, history, current, analyzer);
    out.insert(terms.begin(), terms.end());
  }
  return out;
}

std::string extract_answer_window(const std::string& document, int start,
                                  int end, int window) {
  const int len = static_cast<int>(document.size());
  if (start < 0 || end < start || end > len)
    throw InputError("answer span [" + std::to_string(start) + "," +
                     std::to_string(end) + ") outside document of length " +
                     std::to_string(len));
  int from = std::max(0, start - window);
  int to = std::min(len, end + window);
  return document.substr(static_cast<size_t>(from),
                         static_cast<size_t>(to - from));
}

std::vector<std::string> history_queries(const Topic& topic, int turn_index) {
  std::vector<std::string> out;
  for (int j = 1; j < turn_index; ++j) out.push_back(topic.turn(j).query);
  return out;
}

std::optional<LabeledExample> build_example(const Topic& topic, int turn_index,
                                            const std::set<Term>& positives,
                                            int max_len,
                                            const text::Analyzer& analyzer) {
  if (turn_index == 1) return std::nullopt;
  const Turn& current = topic.turn(turn_index);

  Token cls{kClsToken, std::nullopt, TokenOrigin::Special, 0};
  Token sep{kSepToken, std::nullopt, TokenOrigin::Special, 0};

  text::TokenSequence history;
  for (int j = 1; j < turn_index; ++j) {
    for (Token tok : analyzer.tokenize(topic.turn(j).query)) {
      tok.origin = TokenOrigin::History;
      tok.turn = j;
      history.push_back(std::move(tok));
    }
  }
  text::TokenSequence current_tokens = analyzer.tokenize(current.query);

  const size_t fixed = 2 + current_tokens.size();  // CLS + SEP + current turn
  if (static_cast<int>(fixed) > max_len)
    throw InputError("current turn of " + topic.topic_id + " turn " +
                     std::to_string(turn_index) + " exceeds max_len " +
                     std::to_string(max_len));
  size_t keep = std::min(history.size(), static_cast<size_t>(max_len) - fixed);

  LabeledExample ex;
  ex.topic_id = topic.topic_id;
  ex.turn_index = turn_index;
  ex.sequence.push_back(cls);
  // oldest history tokens are dropped first
  for (size_t i = history.size() - keep; i < history.size(); ++i)
    ex.sequence.push_back(history[i]);
  ex.sequence.push_back(sep);
  for (auto& tok : current_tokens) ex.sequence.push_back(std::move(tok));

  ex.labels.assign(ex.sequence.size(), 0);
  ex.mask.assign(ex.sequence.size(), 0);
  for (size_t i = 0; i < ex.sequence.size(); ++i) {
    const Token& tok = ex.sequence[i];
    if (tok.origin == TokenOrigin::History && tok.term) {
      ex.mask[i] = 1;
      // every occurrence of a positive term is labeled relevant
      if (positives.count(*tok.term)) ex.labels[i] = 1;
    }
  }
  return ex;
}

LabelingResult label_topics(const std::vector<Topic>& topics, LabelMode mode,
                            const PassageLookup& lookup, int answer_window,
                            int max_len, const text::Analyzer& analyzer) {
  std::vector<const Topic*> ordered;
  for (const auto& t : topics) ordered.push_back(&t);
  std::sort(ordered.begin(), ordered.end(),
            [](const Topic* a, const Topic* b) {
              return a->topic_id < b->topic_id;
            });

  LabelingResult result;
  for (const Topic* topic : ordered) {
    for (const Turn& turn : topic->turns) {
      if (turn.turn_index == 1) {
        ++result.first_turns;
        continue;
      }
      auto history = history_queries(*topic, turn.turn_index);
      std::set<Term> positives;
      if (mode == LabelMode::Gold) {
        if (!turn.gold_rewrite) {
          ++result.skipped_records;
          continue;
        }
        positives = gold_resolution_terms(*turn.gold_rewrite, history,
                                          turn.query, analyzer);
      } else {
        std::vector<std::string> passages;
        if (lookup) {
          for (const auto& pid : turn.relevant_passage_ids) {
            auto text = lookup(pid);
            if (!text)
              throw InputError("unknown relevant passage id: " + pid);
            passages.push_back(std::move(*text));
          }
        }
        if (turn.answer)
          passages.push_back(extract_answer_window(
              turn.answer->text, turn.answer->start, turn.answer->end,
              answer_window));
        if (passages.empty()) {
          ++result.skipped_records;
          continue;
        }
        positives = distant_resolution_terms(passages, history, turn.query,
                                             analyzer);
      }
      auto ex =
          build_example(*topic, turn.turn_index, positives, max_len, analyzer);
      if (ex) result.examples.push_back(std::move(*ex));
    }
  }
  return result;
}

std::string to_jsonl(const std::vector<LabeledExample>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    json j;
    j["topic_id"] = ex.topic_id;
    j["turn"] = ex.turn_index;
    json tokens = json::array();
    for (const auto& tok : ex.sequence) tokens.push_back(tok.raw);
    j["tokens"] = std::move(tokens);
    j["labels"] = ex.labels;
    j["mask"] = ex.mask;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<LabeledExample> parse_examples_jsonl(
    const std::string& content, const text::Analyzer& analyzer) {
  std::vector<LabeledExample> out;
  size_t pos = 0;
  int line_no = 0;
  while (pos < content.size()) {
    size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw InputError("examples line " + std::to_string(line_no) +
                       ": invalid JSON: " + e.what());
    }
    LabeledExample ex;
    ex.topic_id = j.value("topic_id", "");
    ex.turn_index = j.value("turn", 0);
    auto tokens = j.at("tokens").get<std::vector<std::string>>();
    ex.labels = j.at("labels").get<std::vector<std::uint8_t>>();
    ex.mask = j.at("mask").get<std::vector<std::uint8_t>>();
    // origin is positional: everything between <CLS> and the <SEP> that ends
    // the history block is a history token. Per-turn provenance is not part
    // of the export format and does not round-trip.
    bool seen_sep = false;
    for (auto& raw : tokens) {
      Token tok;
      if (raw == kClsToken || (raw == kSepToken && !seen_sep)) {
        if (raw == kSepToken) seen_sep = true;
        tok.raw = std::move(raw);
        tok.origin = TokenOrigin::Special;
      } else {
        tok.term = analyzer.normalize(raw);
        tok.raw = std::move(raw);
        tok.origin = seen_sep ? TokenOrigin::Current : TokenOrigin::History;
      }
      ex.sequence.push_back(std::move(tok));
    }
    if (ex.labels.size() != ex.sequence.size() ||
        ex.mask.size() != ex.sequence.size())
      throw InputError("examples line " + std::to_string(line_no) +
                       ": tokens/labels/mask lengths disagree");
    ex.validate();
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<LabeledExample> load_examples_jsonl(
    const std::filesystem::path& path, const text::Analyzer& analyzer) {
  return parse_examples_jsonl(read_file(path), analyzer);
}

LabelStats compute_stats(const std::vector<LabeledExample>& examples) {
  LabelStats stats;
  stats.examples = static_cast<int>(examples.size());
  if (examples.empty()) return stats;
  std::vector<double> totals, positives;
  for (const auto& ex : examples) {
    double total = 0, pos = 0;
    for (size_t i = 0; i < ex.mask.size(); ++i) {
      total += ex.mask[i];
      pos += ex.labels[i];
    }
    totals.push_back(total);
    positives.push_back(pos);
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto sd = [&](const std::vector<double>& v, double m) {
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
  };
  stats.mean_total_terms = mean(totals);
  stats.sd_total_terms = sd(totals, stats.mean_total_terms);
  stats.mean_positive_terms = mean(positives);
  stats.sd_positive_terms = sd(positives, stats.mean_positive_terms);
  return stats;
}

}  // namespace quretec::supervision
