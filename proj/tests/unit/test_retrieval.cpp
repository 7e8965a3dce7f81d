#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "quretec/common.hpp"
#include "quretec/retrieval.hpp"

using namespace quretec;
using namespace quretec::retrieval;
using text::Term;

namespace {

// Full-scan reference scorer: recomputes term statistics from the raw
// passages, then scores every passage containing at least one query term
// straight from the smoothed-likelihood definition. Shares only the
// Analyzer with InvertedIndex.
struct FullScanRef {
  std::vector<Passage> passages;

  double score(const ResolvedQuery& query, const std::string& pid,
               double mu) const {
    const auto& az = text::Analyzer::standard();
    std::map<Term, double> cf;
    double total = 0;
    std::map<Term, double> tf;
    double len = 0;
    for (const auto& p : passages) {
      for (const auto& tok : az.tokenize(p.text)) {
        if (!tok.term) continue;
        cf[*tok.term] += 1;
        total += 1;
        if (p.id == pid) {
          tf[*tok.term] += 1;
          len += 1;
        }
      }
    }
    double s = 0;
    for (const auto& [t, w] : query.weights) {
      auto c = cf.find(t);
      if (c == cf.end()) continue;
      double f = tf.count(t) ? tf.at(t) : 0.0;
      s += w * std::log((f + mu * c->second / total) / (len + mu));
    }
    return s;
  }

  std::vector<std::pair<std::string, double>> search(
      const ResolvedQuery& query, int k, double mu) const {
    const auto& az = text::Analyzer::standard();
    std::vector<std::pair<std::string, double>> scored;
    for (const auto& p : passages) {
      bool candidate = false;
      for (const auto& tok : az.tokenize(p.text))
        if (tok.term && query.weights.count(*tok.term)) candidate = true;
      if (!candidate) continue;
      scored.emplace_back(p.id, score(query, p.id, mu));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (static_cast<int>(scored.size()) > k)
      scored.resize(static_cast<size_t>(k));
    return scored;
  }
};

ResolvedQuery make_query(std::initializer_list<std::pair<Term, double>> ws) {
  ResolvedQuery q;
  for (const auto& [t, w] : ws) q.weights[t] = w;
  return q;
}

const std::vector<Passage> kFruit = {
    {"p1", "apple banana apple cherry"},
    {"p2", "banana cherry banana kiwi"},
    {"p3", "cherry mango apple"},
};

}  // namespace

TEST_CASE("index statistics from a tiny collection") {
  auto index = InvertedIndex::build({{"d1", "saosin saosin band"}});
  CHECK(index.doc_count() == 1);
  CHECK(index.total_tokens() == 3);
  CHECK(index.collection_freq("saosin") == 2);
  CHECK(index.collection_freq("band") == 1);
  CHECK(index.doc_length("d1") == 3);
  CHECK(index.term_freq("saosin", "d1") == 2);
  CHECK(index.term_freq("missing", "d1") == 0);

  auto empty = InvertedIndex::build({});
  CHECK(empty.doc_count() == 0);
  CHECK(empty.total_tokens() == 0);

  CHECK_THROWS_AS(
      InvertedIndex::build({{"d1", "one text"}, {"d1", "again"}}), InputError);
  CHECK_THROWS_AS(index.doc_length("nope"), InputError);
}

TEST_CASE("ql score hand fixture") {
  // one passage of two terms; query = first term, mu = 1:
  // log[(1 + 1 * (1/2)) / (2 + 1)] = log(1/2)
  auto index = InvertedIndex::build({{"d1", "apple banana"}});
  auto q = make_query({{"appl", 1.0}});
  CHECK(index.ql_score(q, "d1", 1.0) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-12));

  // query term absent from the collection vocabulary: skipped entirely
  auto q2 = make_query({{"zzz", 1.0}});
  CHECK(index.ql_score(q2, "d1", 1.0) == 0.0);

  // doubling every weight doubles the score
  auto q3 = make_query({{"appl", 2.0}});
  CHECK(index.ql_score(q3, "d1", 1.0) ==
        doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-12));

  CHECK_THROWS_AS(index.ql_score(q, "unknown", 1.0), InputError);
}

TEST_CASE("ql scores of the fruit fixture match the scripted oracle") {
  // frozen from tests/oracles/rm3_oracle.py
  auto index = InvertedIndex::build(kFruit);
  auto q = make_query({{"appl", 1.0}});
  CHECK(index.ql_score(q, "p1", 10.0) ==
        doctest::Approx(-1.085708883832202).epsilon(1e-12));
  CHECK(index.ql_score(q, "p2", 10.0) ==
        doctest::Approx(-1.6357552207514738).epsilon(1e-12));
  CHECK(index.ql_score(q, "p3", 10.0) ==
        doctest::Approx(-1.2492725635555995).epsilon(1e-12));
}

TEST_CASE("search ranks candidates only, ties by ascending id") {
  auto index = InvertedIndex::build(kFruit);
  auto run = index.search("q1", make_query({{"appl", 1.0}}), 10, 10.0);
  run.validate();
  REQUIRE(run.entries.size() == 2);  // p2 contains no "appl"
  CHECK(run.entries[0].passage_id == "p1");
  CHECK(run.entries[1].passage_id == "p3");

  // empty query bag
  CHECK(index.search("q2", {}, 10, 10.0).entries.empty());

  // k larger than the candidate count returns all candidates
  auto wide = index.search("q3", make_query({{"cherri", 1.0}}), 100, 10.0);
  CHECK(wide.entries.size() == 3);

  // equal-scoring passages are ordered by ascending id
  auto tie_index = InvertedIndex::build({{"b", "apple"}, {"a", "apple"}});
  auto tie = tie_index.search("q4", make_query({{"appl", 1.0}}), 10, 10.0);
  REQUIRE(tie.entries.size() == 2);
  CHECK(tie.entries[0].passage_id == "a");
  CHECK(tie.entries[1].passage_id == "b");
}

TEST_CASE("indexed search equals the full-scan reference on random data") {
  std::mt19937_64 rng(2024);
  const char* pool[] = {"apple", "banana", "cherry", "kiwi",  "mango",
                        "grape", "lemon",  "pear",   "plum",  "fig",
                        "melon", "peach",  "lime",   "olive", "date"};
  for (int trial = 0; trial < 200; ++trial) {
    int n_docs = 1 + static_cast<int>(rng() % 20);
    FullScanRef ref;
    std::vector<Passage> collection;
    for (int d = 0; d < n_docs; ++d) {
      std::string body;
      int len = 1 + static_cast<int>(rng() % 12);
      for (int i = 0; i < len; ++i) {
        body += pool[rng() % 15];
        body += ' ';
      }
      char id[16];
      std::snprintf(id, sizeof(id), "d%03d", d);
      collection.push_back({id, body});
    }
    ref.passages = collection;
    // insertion order must not matter
    std::vector<Passage> shuffled = collection;
    for (size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[rng() % i]);
    auto index = InvertedIndex::build(shuffled);

    ResolvedQuery q;
    int n_terms = 1 + static_cast<int>(rng() % 8);
    const auto& az = text::Analyzer::standard();
    for (int i = 0; i < n_terms; ++i)
      q.weights[*az.normalize(pool[rng() % 15])] += 1.0;

    double mu = (trial % 2) ? 2500.0 : 7.5;
    auto got = index.search("q", q, 1000, mu);
    got.validate();
    auto want = ref.search(q, 1000, mu);
    REQUIRE(got.entries.size() == want.size());
    for (size_t i = 0; i < want.size(); ++i) {
      CHECK(got.entries[i].passage_id == want[i].first);
      CHECK(got.entries[i].score ==
            doctest::Approx(want[i].second).epsilon(1e-12));
    }
  }
}

TEST_CASE("rm3 expansion matches the scripted oracle fixture") {
  auto index = InvertedIndex::build(kFruit);
  auto q = make_query({{"appl", 1.0}});
  auto expanded = index.rm3_expand(q, 2, 2, 0.8, 10.0);

  // frozen from tests/oracles/rm3_oracle.py
  REQUIRE(expanded.weights.size() == 2);
  CHECK(expanded.weights.at("appl") ==
        doctest::Approx(0.91899587860621956).epsilon(1e-12));
  CHECK(expanded.weights.at("cherri") ==
        doctest::Approx(0.081004121393780423).epsilon(1e-12));
  CHECK(expanded.weight_sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rm3 boundary behavior") {
  auto index = InvertedIndex::build(kFruit);
  auto q = make_query({{"appl", 2.0}, {"kiwi", 1.0}});

  // lambda = 1: expansion terms get no weight, original bag normalized
  auto lam1 = index.rm3_expand(q, 2, 3, 1.0, 10.0);
  REQUIRE(lam1.weights.size() == 2);
  CHECK(lam1.weights.at("appl") == doctest::Approx(2.0 / 3.0));
  CHECK(lam1.weights.at("kiwi") == doctest::Approx(1.0 / 3.0));

  // n = 1: expansion terms come from the single retrieved passage by tf/len
  auto one = index.rm3_expand(make_query({{"mango", 1.0}}), 1, 2, 0.5, 10.0);
  // only p3 contains mango; its terms tie at tf/len = 1/3, kept
  // alphabetically: appl, cherri
  REQUIRE(one.weights.size() == 3);
  CHECK(one.weights.at("mango") == doctest::Approx(0.5));
  CHECK(one.weights.at("appl") == doctest::Approx(0.25));
  CHECK(one.weights.at("cherri") == doctest::Approx(0.25));

  // no retrieved passages: query returned unchanged
  auto none = index.rm3_expand(make_query({{"zzz", 1.0}}), 3, 5, 0.8, 10.0);
  REQUIRE(none.weights.size() == 1);
  CHECK(none.weights.at("zzz") == 1.0);

  // weights are a distribution whenever both components are non-empty
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    double lambda = 0.1 + 0.8 * static_cast<double>(rng() % 100) / 100.0;
    auto out = index.rm3_expand(q, 1 + static_cast<int>(rng() % 3),
                                1 + static_cast<int>(rng() % 4), lambda, 10.0);
    double sum = 0.0;
    for (const auto& [t, w] : out.weights) {
      CHECK(w >= 0.0);
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("index round-trips through the on-disk format") {
  auto dir = std::filesystem::temp_directory_path() / "quretec_index_test";
  std::filesystem::remove_all(dir);
  auto index = InvertedIndex::build(kFruit);
  index.save(dir);

  auto loaded = InvertedIndex::load(dir);
  CHECK(loaded.doc_count() == index.doc_count());
  CHECK(loaded.total_tokens() == index.total_tokens());
  auto q = make_query({{"appl", 1.0}, {"cherri", 1.0}});
  auto a = index.search("q", q, 10, 2500.0);
  auto b = loaded.search("q", q, 10, 2500.0);
  REQUIRE(a.entries.size() == b.entries.size());
  for (size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].passage_id == b.entries[i].passage_id);
    CHECK(a.entries[i].score == b.entries[i].score);
  }

  // a different preprocessing fingerprint is rejected
  text::Analyzer other({"only", "these", "words"});
  CHECK_THROWS_AS(InvertedIndex::load(dir, other), InputError);

  // tampering is caught by the manifest hashes
  {
    auto postings = read_file(dir / "postings.txt");
    postings[0] = postings[0] == 'a' ? 'b' : 'a';
    write_file_atomic(dir / "postings.txt", postings);
  }
  CHECK_THROWS_AS(InvertedIndex::load(dir), InputError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("corpus TSV parsing") {
  auto passages = parse_corpus_tsv("a\tsome text\nb\tmore\ttext here\n\n");
  REQUIRE(passages.size() == 2);
  CHECK(passages[0].id == "a");
  CHECK(passages[0].text == "some text");
  CHECK(passages[1].text == "more\ttext here");  // first tab splits
  CHECK_THROWS_AS(parse_corpus_tsv("no_tab_line\n"), InputError);
}
