#include "quretec/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "quretec/common.hpp"

namespace quretec::text {

namespace {

bool is_ascii_punct(unsigned char c) {
  return c < 0x80 && std::ispunct(c) != 0;
}

bool has_alnum(std::string_view s) {
  for (unsigned char c : s)
    if (c >= 0x80 || std::isalnum(c) != 0) return true;
  return false;
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
  });
  return out;
}

// ---- Porter (1980) stemmer ----
//
// A letter is a consonant if it is not a,e,i,o,u and not a y preceded by a
// consonant. Words are [C](VC)^m[V]; m is the "measure".

bool is_consonant(const std::string& w, size_t i) {
  char c = w[i];
  if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return false;
  if (c == 'y') return i == 0 || !is_consonant(w, i - 1);
  return true;
}

int measure(const std::string& w, size_t len) {
  int m = 0;
  bool prev_vowel = false;
  for (size_t i = 0; i < len; ++i) {
    bool vowel = !is_consonant(w, i);
    if (prev_vowel && !vowel) ++m;
    prev_vowel = vowel;
  }
  return m;
}

bool has_vowel(const std::string& w, size_t len) {
  for (size_t i = 0; i < len; ++i)
    if (!is_consonant(w, i)) return true;
  return false;
}

bool ends_double_consonant(const std::string& w) {
  size_t n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

// *o: ends consonant-vowel-consonant, final consonant not w, x or y.
bool ends_cvc(const std::string& w) {
  size_t n = w.size();
  if (n < 3) return false;
  if (!is_consonant(w, n - 3) || is_consonant(w, n - 2) ||
      !is_consonant(w, n - 1))
    return false;
  char c = w[n - 1];
  return c != 'w' && c != 'x' && c != 'y';
}

bool ends_with(const std::string& w, std::string_view suffix) {
  return w.size() >= suffix.size() &&
         w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct Rule {
  std::string_view suffix;
  std::string_view repl;
};

// Longest-match scan; once a suffix matches, the step is done whether or
// not the measure condition lets the replacement fire.
void apply_rules(std::string& w, const Rule* rules, size_t count,
                 int min_measure) {
  for (size_t r = 0; r < count; ++r) {
    if (!ends_with(w, rules[r].suffix)) continue;
    size_t stem_len = w.size() - rules[r].suffix.size();
    if (measure(w, stem_len) > min_measure) {
      w.resize(stem_len);
      w.append(rules[r].repl);
    }
    return;
  }
}

void step1a(std::string& w) {
  if (ends_with(w, "sses")) {
    w.resize(w.size() - 2);
  } else if (ends_with(w, "ies")) {
    w.resize(w.size() - 2);
  } else if (ends_with(w, "ss")) {
    // keep
  } else if (ends_with(w, "s")) {
    w.pop_back();
  }
}

void step1b(std::string& w) {
  if (ends_with(w, "eed")) {
    if (measure(w, w.size() - 3) > 0) w.pop_back();
    return;
  }
  bool fired = false;
  if (ends_with(w, "ed") && has_vowel(w, w.size() - 2)) {
    w.resize(w.size() - 2);
    fired = true;
  } else if (ends_with(w, "ing") && has_vowel(w, w.size() - 3)) {
    w.resize(w.size() - 3);
    fired = true;
  }
  if (!fired) return;
  if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
    w.push_back('e');
  } else if (ends_double_consonant(w) && w.back() != 'l' && w.back() != 's' &&
             w.back() != 'z') {
    w.pop_back();
  } else if (measure(w, w.size()) == 1 && ends_cvc(w)) {
    w.push_back('e');
  }
}

void step1c(std::string& w) {
  if (ends_with(w, "y") && has_vowel(w, w.size() - 1)) w.back() = 'i';
}

constexpr std::array<Rule, 20> kStep2{{
    {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},
    {"anci", "ance"},   {"izer", "ize"},    {"abli", "able"},
    {"alli", "al"},     {"entli", "ent"},   {"eli", "e"},
    {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
    {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"},
    {"fulness", "ful"}, {"ousness", "ous"}, {"aliti", "al"},
    {"iviti", "ive"},   {"biliti", "ble"},
}};

constexpr std::array<Rule, 7> kStep3{{
    {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
    {"ical", "ic"},  {"ful", ""},   {"ness", ""},
}};

constexpr std::array<std::string_view, 19> kStep4{
    "al",    "ance", "ence", "er",  "ic",  "able", "ible", "ant", "ement",
    "ment",  "ent",  "ion",  "ou",  "ism", "ate",  "iti",  "ous", "ive",
    "ize"};

void step4(std::string& w) {
  for (std::string_view suffix : kStep4) {
    if (!ends_with(w, suffix)) continue;
    size_t stem_len = w.size() - suffix.size();
    if (suffix == "ion" &&
        !(stem_len > 0 && (w[stem_len - 1] == 's' || w[stem_len - 1] == 't')))
      return;
    if (measure(w, stem_len) > 1) w.resize(stem_len);
    return;
  }
}

void step5a(std::string& w) {
  if (!ends_with(w, "e")) return;
  size_t stem_len = w.size() - 1;
  int m = measure(w, stem_len);
  if (m > 1) {
    w.pop_back();
  } else if (m == 1) {
    std::string stem = w.substr(0, stem_len);
    if (!ends_cvc(stem)) w.pop_back();
  }
}

void step5b(std::string& w) {
  if (measure(w, w.size()) > 1 && ends_double_consonant(w) && w.back() == 'l')
    w.pop_back();
}

}  // namespace

std::string porter_stem(std::string word) {
  if (word.size() <= 2) return word;
  step1a(word);
  step1b(word);
  step1c(word);
  apply_rules(word, kStep2.data(), kStep2.size(), 0);
  apply_rules(word, kStep3.data(), kStep3.size(), 0);
  step4(word);
  step5a(word);
  step5b(word);
  return word;
}

std::string porter_stem_stable(std::string word) {
  for (int i = 0; i < 8; ++i) {
    std::string next = porter_stem(word);
    if (next == word) break;
    word = std::move(next);
  }
  return word;
}

std::vector<std::string> split_tokens(std::string_view input) {
  std::vector<std::string> out;
  size_t i = 0;
  auto is_space = [](unsigned char c) {
    return c < 0x80 && std::isspace(c) != 0;
  };
  while (i < input.size()) {
    while (i < input.size() && is_space(input[i])) ++i;
    size_t start = i;
    while (i < input.size() && !is_space(input[i])) ++i;
    if (i == start) break;
    std::string_view piece = input.substr(start, i - start);
    size_t b = 0, e = piece.size();
    while (e > b && is_ascii_punct(piece[e - 1])) --e;
    // a bare possessive marker keeps its apostrophe, matching the token the
    // possessive split below emits
    if (e - b == 2 && piece[b] == '\'' &&
        (piece[b + 1] == 's' || piece[b + 1] == 'S')) {
      out.emplace_back(piece.substr(b, 2));
      continue;
    }
    while (b < e && is_ascii_punct(piece[b])) ++b;
    if (b == e) continue;
    std::string tok(piece.substr(b, e - b));
    if (tok.size() > 2) {
      std::string tail = to_lower_ascii(std::string_view(tok).substr(tok.size() - 2));
      if (tail == "'s") {
        out.push_back(tok.substr(0, tok.size() - 2));
        out.push_back(tok.substr(tok.size() - 2));
        continue;
      }
    }
    out.push_back(std::move(tok));
  }
  return out;
}

Analyzer::Analyzer(std::vector<std::string> stopwords)
    : stopword_list_(std::move(stopwords)),
      stopword_set_(stopword_list_.begin(), stopword_list_.end()) {
  std::string joined;
  for (const auto& w : stopword_list_) {
    joined += w;
    joined += '\n';
  }
  fingerprint_ = "porter-stable/1+stopwords:" + fnv1a64_hex(joined);
}

const Analyzer& Analyzer::standard() {
  static const Analyzer instance = [] {
    std::vector<std::string> words;
    std::string_view data = builtin_stopwords();
    size_t pos = 0;
    while (pos < data.size()) {
      size_t nl = data.find('\n', pos);
      if (nl == std::string_view::npos) nl = data.size();
      if (nl > pos) words.emplace_back(data.substr(pos, nl - pos));
      pos = nl + 1;
    }
    return Analyzer(std::move(words));
  }();
  return instance;
}

bool Analyzer::is_stopword(std::string_view lowercased) const {
  return stopword_set_.count(std::string(lowercased)) > 0;
}

std::optional<Term> Analyzer::normalize(std::string_view raw) const {
  if (raw.empty()) return std::nullopt;
  std::string low = to_lower_ascii(raw);
  if (stopword_set_.count(low)) return std::nullopt;
  if (!has_alnum(low)) return std::nullopt;
  std::string stemmed = porter_stem_stable(std::move(low));
  // a word may stem onto a stopword ("doing" -> "do"); filtering again keeps
  // normalize idempotent
  if (stopword_set_.count(stemmed)) return std::nullopt;
  return stemmed;
}

TokenSequence Analyzer::tokenize(std::string_view input) const {
  TokenSequence seq;
  for (auto& raw : split_tokens(input)) {
    Token tok;
    tok.term = normalize(raw);
    tok.raw = std::move(raw);
    seq.push_back(std::move(tok));
  }
  return seq;
}

std::set<Term> Analyzer::term_set(std::string_view input) const {
  return text::term_set(tokenize(input));
}

std::set<Term> term_set(const TokenSequence& x) {
  std::set<Term> out;
  for (const auto& tok : x)
    if (tok.term) out.insert(*tok.term);
  return out;
}

}  // namespace quretec::text
