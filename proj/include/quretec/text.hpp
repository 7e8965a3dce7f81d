#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace quretec::text {

/// A normalized token: lowercased, stemmed, not a stopword. Terms are
/// produced only by Analyzer::normalize, so every Term equals its own
/// normalization.
using Term = std::string;

enum class TokenOrigin { History, Current, Special };

struct Token {
  std::string raw;           // surface form, original case
  std::optional<Term> term;  // empty for stopwords / punctuation-only tokens
  TokenOrigin origin = TokenOrigin::Current;
  int turn = 0;  // 1-based turn index for History tokens, 0 otherwise
};

/// Tokens in original text order. Filtered tokens stay in the sequence
/// (the model still sees them); they just carry no Term.
using TokenSequence = std::vector<Token>;

/// Classic Porter suffix stemmer, one pass. Input must be lowercase.
std::string porter_stem(std::string word);

/// porter_stem iterated to a fixed point, so the result is stable under
/// re-application (plain Porter is not: "decis" -> "deci").
std::string porter_stem_stable(std::string word);

/// Whitespace split with per-token edge punctuation stripping. Intra-token
/// hyphens and apostrophes survive; a trailing possessive 's is split off
/// as its own token. Empty pieces are dropped, order is preserved.
std::vector<std::string> split_tokens(std::string_view input);

/// Text normalization shared by labeling, the model, and retrieval.
/// Holds the stopword list; stateless otherwise, safe to share across
/// threads.
class Analyzer {
 public:
  /// The built-in stopword list (shipped as data/stopwords.txt).
  static const Analyzer& standard();

  explicit Analyzer(std::vector<std::string> stopwords);

  /// lowercase -> stopword filter -> stem (stable) -> stopword filter.
  /// Returns nothing for stopwords and tokens with no alphanumeric content.
  std::optional<Term> normalize(std::string_view raw) const;

  /// split_tokens + normalize per token; origin defaults to Current.
  TokenSequence tokenize(std::string_view input) const;

  /// Deduplicated terms of a raw text.
  std::set<Term> term_set(std::string_view input) const;

  bool is_stopword(std::string_view lowercased) const;

  const std::vector<std::string>& stopwords() const { return stopword_list_; }

  /// Identifies the normalization configuration (stemmer id + stopword list
  /// hash). Persisted with every index; queries against an index built with
  /// a different fingerprint are rejected.
  const std::string& fingerprint() const { return fingerprint_; }

 private:
  std::vector<std::string> stopword_list_;
  std::unordered_set<std::string> stopword_set_;
  std::string fingerprint_;
};

/// Deduplicated set of Terms carried by a token sequence.
std::set<Term> term_set(const TokenSequence& x);

/// Newline-joined built-in stopword list, identical to data/stopwords.txt.
std::string_view builtin_stopwords();

}  // namespace quretec::text
