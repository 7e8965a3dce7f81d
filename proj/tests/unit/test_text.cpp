#include <doctest.h>

#include <random>

#include "quretec/common.hpp"
#include "quretec/text.hpp"

using namespace quretec;
using text::Analyzer;

namespace {

std::vector<std::string> raw_tokens(const std::string& input) {
  return text::split_tokens(input);
}

}  // namespace

TEST_CASE("tokenize splits on whitespace and strips edge punctuation") {
  CHECK(raw_tokens("Who formed Saosin?") ==
        std::vector<std::string>{"Who", "formed", "Saosin"});
  CHECK(raw_tokens("") == std::vector<std::string>{});
  CHECK(raw_tokens("real-time  database") ==
        std::vector<std::string>{"real-time", "database"});
  CHECK(raw_tokens("  \t \n ") == std::vector<std::string>{});
  CHECK(raw_tokens("(hello), world!!") ==
        std::vector<std::string>{"hello", "world"});
  CHECK(raw_tokens("... --- ...") == std::vector<std::string>{});
}

TEST_CASE("possessive 's is split off as its own token") {
  CHECK(raw_tokens("Saosin's first") ==
        std::vector<std::string>{"Saosin", "'s", "first"});
  // pre-split possessives survive as-is
  CHECK(raw_tokens("saosin 's first") ==
        std::vector<std::string>{"saosin", "'s", "first"});
  CHECK(!Analyzer::standard().normalize("'s").has_value());
}

TEST_CASE("normalize lowercases, filters stopwords, stems") {
  const auto& az = Analyzer::standard();
  CHECK(az.normalize("Saosin") == std::string("saosin"));
  CHECK(!az.normalize("the").has_value());
  CHECK(!az.normalize("The").has_value());
  CHECK(!az.normalize("WHO").has_value());
  // frozen from the reference stemmer (iterated to its fixpoint)
  CHECK(az.normalize("released") == std::string("relea"));
  CHECK(az.normalize("formed") == std::string("form"));
  CHECK(az.normalize("first") == std::string("first"));
  // punctuation-only tokens carry no term
  CHECK(!az.normalize("--").has_value());
  // numerals survive
  CHECK(az.normalize("2003") == std::string("2003"));
  // a word that stems onto a stopword is filtered
  CHECK(!az.normalize("doing").has_value());
}

TEST_CASE("porter stemmer matches the reference implementation") {
  // single-pass values frozen from tests/oracles/porter_ref.py (stem_once)
  const std::pair<const char*, const char*> fixtures[] = {
      {"caresses", "caress"},   {"ponies", "poni"},
      {"ties", "ti"},           {"caress", "caress"},
      {"cats", "cat"},          {"feed", "feed"},
      {"agreed", "agre"},       {"plastered", "plaster"},
      {"bled", "bled"},         {"motoring", "motor"},
      {"sing", "sing"},         {"conflated", "conflat"},
      {"troubled", "troubl"},   {"sized", "size"},
      {"hopping", "hop"},       {"tanned", "tan"},
      {"falling", "fall"},      {"hissing", "hiss"},
      {"fizzed", "fizz"},       {"failing", "fail"},
      {"filing", "file"},       {"happy", "happi"},
      {"sky", "sky"},           {"relational", "relat"},
      {"conditional", "condit"},{"rational", "ration"},
      {"valenci", "valenc"},    {"hesitanci", "hesit"},
      {"digitizer", "digit"},   {"conformabli", "conform"},
      {"radicalli", "radic"},   {"differentli", "differ"},
      {"vileli", "vile"},       {"analogousli", "analog"},
      {"vietnamization", "vietnam"}, {"predication", "predic"},
      {"operator", "oper"},     {"feudalism", "feudal"},
      {"decisiveness", "decis"},{"hopefulness", "hope"},
      {"callousness", "callous"}, {"formaliti", "formal"},
      {"sensitiviti", "sensit"},{"sensibiliti", "sensibl"},
      {"triplicate", "triplic"},{"formative", "form"},
      {"formalize", "formal"},  {"electriciti", "electr"},
      {"electrical", "electr"}, {"hopeful", "hope"},
      {"goodness", "good"},     {"revival", "reviv"},
      {"allowance", "allow"},   {"inference", "infer"},
      {"airliner", "airlin"},   {"gyroscopic", "gyroscop"},
      {"adjustable", "adjust"}, {"defensible", "defens"},
      {"irritant", "irrit"},    {"replacement", "replac"},
      {"adjustment", "adjust"}, {"dependent", "depend"},
      {"adoption", "adopt"},    {"communism", "commun"},
      {"activate", "activ"},    {"angulariti", "angular"},
      {"homologous", "homolog"},{"effective", "effect"},
      {"bowdlerize", "bowdler"},{"probate", "probat"},
      {"rate", "rate"},         {"cease", "ceas"},
      {"controll", "control"},  {"roll", "roll"},
      {"released", "releas"},   {"formed", "form"},
      {"founded", "found"},     {"generalization", "gener"},
      {"oscillators", "oscil"},
  };
  for (const auto& [word, expected] : fixtures) {
    CAPTURE(word);
    CHECK(text::porter_stem(word) == expected);
  }
  // fixpoint iteration where a second pass fires (frozen from the reference)
  CHECK(text::porter_stem_stable("agreed") == "agr");
  CHECK(text::porter_stem_stable("decisiveness") == "deci");
  CHECK(text::porter_stem_stable("cease") == "cea");
  CHECK(text::porter_stem_stable("released") == "relea");
  CHECK(text::porter_stem_stable("database") == "databa");
}

TEST_CASE("normalize is idempotent") {
  const auto& az = Analyzer::standard();
  const char* words[] = {"released", "decisiveness", "Saosin",   "databases",
                         "agreed",   "ceasing",      "formalize", "sensibiliti",
                         "hopping",  "2003",         "real-time", "first"};
  for (const char* w : words) {
    auto t = az.normalize(w);
    if (!t) continue;
    auto again = az.normalize(*t);
    REQUIRE(again.has_value());
    CHECK(*again == *t);
  }
  // random ascii words
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    std::string w;
    int len = 1 + static_cast<int>(rng() % 12);
    for (int j = 0; j < len; ++j)
      w.push_back(static_cast<char>('a' + rng() % 26));
    auto t = az.normalize(w);
    if (!t) continue;
    auto again = az.normalize(*t);
    REQUIRE(again.has_value());
    CHECK(*again == *t);
  }
}

TEST_CASE("term_set dedupes and unions across concatenation") {
  const auto& az = Analyzer::standard();
  auto s = az.term_set("who formed saosin");
  CHECK(s == std::set<std::string>{"form", "saosin"});
  CHECK(az.term_set("").empty());
  CHECK(az.term_set("saosin saosin") == std::set<std::string>{"saosin"});

  std::mt19937_64 rng(13);
  const char* pool[] = {"alpha", "beta",  "gamma", "the",  "band",
                        "album", "first", "was",   "their", "released"};
  for (int trial = 0; trial < 50; ++trial) {
    std::string x, y;
    for (int i = 0; i < 6; ++i) {
      x += pool[rng() % 10];
      x += ' ';
      y += pool[rng() % 10];
      y += ' ';
    }
    auto sx = az.term_set(x);
    auto sy = az.term_set(y);
    auto sxy = az.term_set(x + " " + y);
    std::set<std::string> expected = sx;
    expected.insert(sy.begin(), sy.end());
    CHECK(sxy == expected);
  }
}

TEST_CASE("tokenization is deterministic") {
  const auto& az = Analyzer::standard();
  std::string input = "When was Saosin's first album released?  (2003)";
  auto a = az.tokenize(input);
  auto b = az.tokenize(input);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].raw == b[i].raw);
    CHECK(a[i].term == b[i].term);
  }
}

TEST_CASE("builtin stopword list matches the shipped data file") {
  std::string file = read_file(std::string(QURETEC_SOURCE_DIR) +
                               "/data/stopwords.txt");
  CHECK(file == std::string(text::builtin_stopwords()));
  CHECK(fnv1a64(file) == 0xb32b1034984428eeULL);
  CHECK(Analyzer::standard().stopwords().size() == 322);
}
