#include "quretec/fusion.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "quretec/common.hpp"

namespace quretec::fusion {

using retrieval::RankedEntry;
using retrieval::RankedList;

double overlap_score(const ResolvedQuery& query,
                     const std::string& passage_text,
                     const text::Analyzer& analyzer) {
  std::map<text::Term, double> tf;
  double len = 0.0;
  for (const auto& tok : analyzer.tokenize(passage_text)) {
    if (!tok.term) continue;
    tf[*tok.term] += 1.0;
    len += 1.0;
  }
  if (len == 0.0) return 0.0;
  double overlap = 0.0;
  for (const auto& [term, w] : query.weights) {
    auto it = tf.find(term);
    if (it != tf.end()) overlap += std::min(w, it->second);
  }
  return overlap / len;
}

Scorer make_overlap_scorer(const text::Analyzer& analyzer) {
  return [&analyzer](const ResolvedQuery& q, const std::string& p) {
    return overlap_score(q, p, analyzer);
  };
}

RankedList rerank(const Scorer& scorer, const RankedList& initial,
                  const ResolvedQuery& query, const PassageTextLookup& lookup) {
  RankedList out;
  out.query_id = initial.query_id;
  out.entries.reserve(initial.entries.size());
  for (const auto& entry : initial.entries) {
    auto text = lookup(entry.passage_id);
    if (!text)
      throw InputError("no passage text for id: " + entry.passage_id);
    out.entries.push_back({entry.passage_id, scorer(query, *text)});
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const RankedEntry& a, const RankedEntry& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.passage_id < b.passage_id;
            });
  return out;
}

RankedList rrf_fuse(const std::vector<RankedList>& lists, double k) {
  if (lists.empty()) throw InputError("rrf_fuse needs at least one list");
  if (!(k > 0.0)) throw InputError("rrf fusion parameter k must be > 0");

  // the fusion universe is the first list
  const RankedList& base = lists.front();
  std::unordered_map<std::string, double> score;
  score.reserve(base.entries.size());
  for (const auto& entry : base.entries) {
    if (!score.emplace(entry.passage_id, 0.0).second)
      throw InputError("duplicate passage id in list: " + entry.passage_id);
  }
  for (const auto& list : lists) {
    for (size_t i = 0; i < list.entries.size(); ++i) {
      auto it = score.find(list.entries[i].passage_id);
      if (it != score.end())
        it->second += 1.0 / (k + static_cast<double>(i + 1));
    }
  }

  RankedList out;
  out.query_id = base.query_id;
  out.entries.reserve(score.size());
  for (const auto& entry : base.entries)
    out.entries.push_back({entry.passage_id, score.at(entry.passage_id)});
  std::sort(out.entries.begin(), out.entries.end(),
            [](const RankedEntry& a, const RankedEntry& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.passage_id < b.passage_id;
            });
  return out;
}

}  // namespace quretec::fusion
