#pragma once

#include <map>

#include "quretec/text.hpp"

namespace quretec {

/// A weighted bag of terms, the unit of exchange between query resolution
/// and retrieval. Resolution produces integer-valued weights (term counts
/// plus appended expansion terms); RM3 produces real-valued ones.
struct ResolvedQuery {
  std::map<text::Term, double> weights;

  double weight_sum() const {
    double s = 0.0;
    for (const auto& [t, w] : weights) s += w;
    return s;
  }
  bool empty() const { return weights.empty(); }
};

}  // namespace quretec
