#include <doctest.h>

#include <cmath>
#include <random>

#include "quretec/common.hpp"
#include "quretec/fusion.hpp"

using namespace quretec;
using namespace quretec::fusion;
using retrieval::RankedList;

namespace {

RankedList make_list(const std::string& qid,
                     std::initializer_list<std::string> ids) {
  RankedList list;
  list.query_id = qid;
  double score = static_cast<double>(ids.size());
  for (const auto& id : ids) list.entries.push_back({id, score--});
  return list;
}

ResolvedQuery make_query(std::initializer_list<std::pair<std::string, double>> ws) {
  ResolvedQuery q;
  for (const auto& [t, w] : ws) q.weights[t] = w;
  return q;
}

}  // namespace

TEST_CASE("rrf of two lists, hand-computed") {
  auto fused = rrf_fuse({make_list("q", {"A", "B", "C"}),
                         make_list("q", {"C", "A", "D"})});
  REQUIRE(fused.entries.size() == 3);  // universe is the first list; D absent
  CHECK(fused.entries[0].passage_id == "A");
  CHECK(fused.entries[0].score ==
        doctest::Approx(0.03252247488101534).epsilon(1e-12));  // 1/61 + 1/62
  CHECK(fused.entries[1].passage_id == "C");
  CHECK(fused.entries[1].score ==
        doctest::Approx(0.032266458495966696).epsilon(1e-12));  // 1/63 + 1/61
  CHECK(fused.entries[2].passage_id == "B");
  CHECK(fused.entries[2].score ==
        doctest::Approx(0.016129032258064516).epsilon(1e-12));  // 1/62
  fused.validate();
}

TEST_CASE("rrf boundary cases") {
  // rank 1 in both lists: 2/(60+1)
  auto both_first = rrf_fuse({make_list("q", {"X", "Y"}),
                              make_list("q", {"X", "Z"})});
  CHECK(both_first.entries[0].passage_id == "X");
  CHECK(both_first.entries[0].score ==
        doctest::Approx(0.03278688524590164).epsilon(1e-12));  // 2/61

  // fusing a single list preserves its ordering
  auto single = rrf_fuse({make_list("q", {"C", "A", "B"})});
  REQUIRE(single.entries.size() == 3);
  CHECK(single.entries[0].passage_id == "C");
  CHECK(single.entries[1].passage_id == "A");
  CHECK(single.entries[2].passage_id == "B");

  CHECK_THROWS_AS(rrf_fuse({}), InputError);
  CHECK_THROWS_AS(rrf_fuse({make_list("q", {"A"})}, 0.0), InputError);
}

TEST_CASE("rrf depends only on ranks and ignores list order") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    // lists over a shared passage universe, in different orders
    std::vector<std::string> ids;
    int n = 2 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) ids.push_back("p" + std::to_string(i));

    auto random_list = [&]() {
      auto shuffled = ids;
      for (size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[rng() % i]);
      RankedList list;
      list.query_id = "q";
      double s = 100.0;
      for (const auto& id : shuffled) {
        list.entries.push_back({id, s});
        s -= 1.0 + static_cast<double>(rng() % 5);
      }
      return list;
    };
    std::vector<RankedList> lists{random_list(), random_list(), random_list()};
    auto fused = rrf_fuse(lists);

    // strictly monotone score transform: order, hence fusion, unchanged
    auto transformed = lists;
    double a = 0.5 + static_cast<double>(rng() % 10);
    double b = static_cast<double>(rng() % 100) - 50.0;
    for (auto& list : transformed)
      for (auto& e : list.entries) e.score = a * std::exp(0.01 * e.score) + b;
    auto fused_t = rrf_fuse(transformed);
    REQUIRE(fused_t.entries.size() == fused.entries.size());
    for (size_t i = 0; i < fused.entries.size(); ++i) {
      CHECK(fused_t.entries[i].passage_id == fused.entries[i].passage_id);
      CHECK(fused_t.entries[i].score == fused.entries[i].score);
    }

    // permutation of the input lists (same universe) does not matter
    std::vector<RankedList> permuted{lists[2], lists[0], lists[1]};
    auto fused_p = rrf_fuse(permuted);
    for (size_t i = 0; i < fused.entries.size(); ++i) {
      CHECK(fused_p.entries[i].passage_id == fused.entries[i].passage_id);
      CHECK(fused_p.entries[i].score ==
            doctest::Approx(fused.entries[i].score).epsilon(1e-12));
    }

    // every fused score lies in (0, |lists|/k]
    for (const auto& e : fused.entries) {
      CHECK(e.score > 0.0);
      CHECK(e.score <= 3.0 / 60.0);
    }
  }
}

TEST_CASE("overlap scorer on a 3-passage fixture") {
  auto q = make_query({{"appl", 2.0}, {"banana", 1.0}});
  // min(2,1) + min(1,1) over 3 terms
  CHECK(overlap_score(q, "apple banana cherry") ==
        doctest::Approx(0.6666666666666666));
  CHECK(overlap_score(q, "apple apple") == doctest::Approx(1.0));
  CHECK(overlap_score(q, "cherry") == 0.0);
  CHECK(overlap_score(q, "") == 0.0);  // empty passage
}

TEST_CASE("rerank reorders by the scorer and keeps the passage set") {
  std::map<std::string, std::string> texts{
      {"pA", "apple banana cherry"}, {"pB", "apple apple"}, {"pC", "cherry"}};
  PassageTextLookup lookup =
      [&texts](const std::string& id) -> std::optional<std::string> {
    auto it = texts.find(id);
    if (it == texts.end()) return std::nullopt;
    return it->second;
  };
  auto initial = make_list("q", {"pA", "pB", "pC"});
  auto q = make_query({{"appl", 2.0}, {"banana", 1.0}});

  // hand-computed overlap order: pB (1.0), pA (2/3), pC (0)
  auto reranked = rerank(make_overlap_scorer(), initial, q, lookup);
  reranked.validate();
  REQUIRE(reranked.entries.size() == 3);
  CHECK(reranked.entries[0].passage_id == "pB");
  CHECK(reranked.entries[1].passage_id == "pA");
  CHECK(reranked.entries[2].passage_id == "pC");

  // constant scorer falls back to ascending passage id
  Scorer constant = [](const ResolvedQuery&, const std::string&) {
    return 1.0;
  };
  auto flat = rerank(constant, make_list("q", {"pC", "pA", "pB"}), q, lookup);
  CHECK(flat.entries[0].passage_id == "pA");
  CHECK(flat.entries[1].passage_id == "pB");
  CHECK(flat.entries[2].passage_id == "pC");

  // a scorer that replays the initial scores reproduces the initial order
  std::map<std::string, double> initial_scores;
  for (const auto& e : initial.entries) initial_scores[e.passage_id] = e.score;
  Scorer replay = [&](const ResolvedQuery&, const std::string& text) {
    for (const auto& [id, t] : texts)
      if (t == text) return initial_scores.at(id);
    return 0.0;
  };
  auto same = rerank(replay, initial, q, lookup);
  for (size_t i = 0; i < initial.entries.size(); ++i)
    CHECK(same.entries[i].passage_id == initial.entries[i].passage_id);

  // missing passage text names the id
  auto missing = make_list("q", {"pA", "nope"});
  CHECK_THROWS_WITH_AS(rerank(make_overlap_scorer(), missing, q, lookup),
                       "no passage text for id: nope", InputError);
}
