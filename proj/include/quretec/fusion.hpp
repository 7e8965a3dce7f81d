#pragma once

#include <functional>
#include <string>
#include <vector>

#include "quretec/query.hpp"
#include "quretec/retrieval.hpp"

namespace quretec::fusion {

/// Scoring contract for rerankers: higher is better, deterministic for
/// fixed inputs, safe for concurrent read-only use.
using Scorer =
    std::function<double(const ResolvedQuery&, const std::string& passage_text)>;

/// Resolves a passage id to its text; empty result means unknown id.
using PassageTextLookup =
    std::function<std::optional<std::string>(const std::string&)>;

/// Length-normalized weighted term overlap,
///   sum_t min(w_q(t), tf(t,p)) / len(p),
/// the shipped stand-in for an external neural reranker.
double overlap_score(
    const ResolvedQuery& query, const std::string& passage_text,
    const text::Analyzer& analyzer = text::Analyzer::standard());

Scorer make_overlap_scorer(
    const text::Analyzer& analyzer = text::Analyzer::standard());

/// Rescores the passages of `initial` with `scorer` and reorders. The
/// passage set is unchanged; ties fall back to ascending passage id.
/// A passage id that cannot be resolved to text is an input error.
retrieval::RankedList rerank(const Scorer& scorer,
                             const retrieval::RankedList& initial,
                             const ResolvedQuery& query,
                             const PassageTextLookup& lookup);

/// Reciprocal rank fusion over the passages of the first list:
///   score(p) = sum over lists containing p of 1 / (k + rank(p)),
/// ranks 1-based. Lists not containing p contribute nothing. Ties by
/// ascending passage id. At least one input list is required.
retrieval::RankedList rrf_fuse(const std::vector<retrieval::RankedList>& lists,
                               double k = 60.0);

}  // namespace quretec::fusion
