#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "quretec/text.hpp"
#include "quretec/topics.hpp"

namespace quretec::supervision {

inline constexpr const char* kClsToken = "<CLS>";
inline constexpr const char* kSepToken = "<SEP>";

/// One term-classification instance: [<CLS>, history turns..., <SEP>,
/// current turn]. mask is 1 exactly at history positions that carry a Term;
/// labels may be 1 only where mask is 1.
struct LabeledExample {
  std::string topic_id;
  int turn_index = 0;
  text::TokenSequence sequence;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint8_t> mask;

  size_t size() const { return sequence.size(); }
  /// Throws InputError if the label/mask layout invariants are violated.
  void validate() const;
};

/// Relevant resolution terms from a gold rewrite:
/// terms(rewrite) ∩ terms(history) \ terms(current).
std::set<text::Term> gold_resolution_terms(
    const std::string& gold_rewrite, const std::vector<std::string>& history,
    const std::string& current,
    const text::Analyzer& analyzer = text::Analyzer::standard());

/// Distant labels: the gold rewrite replaced by a relevant passage.
std::set<text::Term> distant_resolution_terms(
    const std::string& relevant_passage,
    const std::vector<std::string>& history, const std::string& current,
    const text::Analyzer& analyzer = text::Analyzer::standard());

/// Union over several relevant passages.
std::set<text::Term> distant_resolution_terms(
    const std::vector<std::string>& relevant_passages,
    const std::vector<std::string>& history, const std::string& current,
    const text::Analyzer& analyzer = text::Analyzer::standard());

/// Substring of `document` from max(0, start-window) to min(len, end+window).
/// Offsets outside [0, len] or start > end are an input error.
std::string extract_answer_window(const std::string& document, int start,
                                  int end, int window = 50);

/// Assembles the model input for one turn and assigns labels from
/// `positives`. Returns nothing for turn 1 (no history, no example).
/// Sequences longer than max_len drop oldest history tokens first; the
/// current turn and the special tokens are never dropped.
std::optional<LabeledExample> build_example(
    const Topic& topic, int turn_index, const std::set<text::Term>& positives,
    int max_len = 256,
    const text::Analyzer& analyzer = text::Analyzer::standard());

/// Raw query strings of turns 1..turn_index-1.
std::vector<std::string> history_queries(const Topic& topic, int turn_index);

enum class LabelMode { Gold, Distant };

struct LabelingResult {
  std::vector<LabeledExample> examples;
  int skipped_records = 0;  // turns missing the required supervision field
  int first_turns = 0;      // turn-1 queries (never produce examples)
};

/// Resolves a passage id to its text; empty result means unknown id.
using PassageLookup =
    std::function<std::optional<std::string>(const std::string&)>;

/// Runs Eq.-(1) labeling over whole topics, gold or distant mode, ordered
/// by (topic_id, turn index). In distant mode, labels come from the
/// union of (a) passages resolved via `lookup` and (b) the answer-span
/// window when a turn carries one.
LabelingResult label_topics(
    const std::vector<Topic>& topics, LabelMode mode,
    const PassageLookup& lookup, int answer_window = 50, int max_len = 256,
    const text::Analyzer& analyzer = text::Analyzer::standard());

/// Label export / import: JSON-lines, one example per line with token
/// strings, labels and mask.
std::string to_jsonl(const std::vector<LabeledExample>& examples);
std::vector<LabeledExample> parse_examples_jsonl(
    const std::string& content,
    const text::Analyzer& analyzer = text::Analyzer::standard());
std::vector<LabeledExample> load_examples_jsonl(
    const std::filesystem::path& path,
    const text::Analyzer& analyzer = text::Analyzer::standard());

struct LabelStats {
  int examples = 0;
  double mean_total_terms = 0.0;
  double sd_total_terms = 0.0;
  double mean_positive_terms = 0.0;
  double sd_positive_terms = 0.0;
};

LabelStats compute_stats(const std::vector<LabeledExample>& examples);

}  // namespace quretec::supervision
