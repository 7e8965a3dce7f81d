#pragma once

// Fixtures and checkers shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "quretec/model.hpp"
#include "quretec/supervision.hpp"
#include "quretec/topics.hpp"

namespace fixtures {

inline quretec::Topic band_topic() {
  quretec::Topic t;
  t.topic_id = "band";
  t.turns = {
      {1, "who formed saosin?", std::nullopt, {}, std::nullopt},
      {2, "when was the band founded?", std::nullopt, {}, std::nullopt},
      {3, "what was their first album?", std::nullopt, {}, std::nullopt},
      {4, "when was the album released?",
       "when was saosin 's first album released?", {}, std::nullopt},
  };
  return t;
}

inline const char* band_passage() {
  return "The original lineup for Saosin, consisting of Burchell, Shekoski, "
         "Kennedy and Green, was formed in the summer of 2003. On June 17, "
         "the band released their first commercial production, the EP "
         "Translating the Name.";
}

/// Copy-pattern training data: each topic hides a few marker terms in the
/// history, the templated rewrite copies exactly those markers next to the
/// current turn, so Eq.-(1) labeling marks them positive. A model only has
/// to learn which vocabulary items are markers.
inline std::vector<quretec::supervision::LabeledExample>
synthetic_copy_examples(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto marker = [](int i) { return "zorin" + std::to_string(i); };
  auto filler = [](int i) { return "plarf" + std::to_string(i); };

  std::vector<quretec::supervision::LabeledExample> out;
  for (int n = 0; n < count; ++n) {
    int n_markers = 2 + static_cast<int>(rng() % 3);
    int n_filler = 3 + static_cast<int>(rng() % 3);
    std::vector<std::string> history_words;
    std::vector<std::string> marker_words;
    for (int i = 0; i < n_markers; ++i) {
      auto w = marker(static_cast<int>(rng() % 20));
      if (std::find(marker_words.begin(), marker_words.end(), w) ==
          marker_words.end())
        marker_words.push_back(w);
    }
    history_words = marker_words;
    for (int i = 0; i < n_filler; ++i)
      history_words.push_back(filler(static_cast<int>(rng() % 20)));
    for (size_t i = history_words.size(); i > 1; --i)
      std::swap(history_words[i - 1], history_words[rng() % i]);

    std::string history_text;
    for (const auto& w : history_words) {
      history_text += w;
      history_text += ' ';
    }
    std::string current = "what about " + filler(static_cast<int>(rng() % 20)) +
                          " " + filler(20 + static_cast<int>(rng() % 5));
    std::string rewrite = current;
    for (const auto& w : marker_words) {
      rewrite += ' ';
      rewrite += w;
    }

    quretec::Topic topic;
    topic.topic_id = "synth" + std::to_string(n);
    topic.turns = {
        {1, history_text, std::nullopt, {}, std::nullopt},
        {2, current, rewrite, {}, std::nullopt},
    };
    auto positives = quretec::supervision::gold_resolution_terms(
        rewrite, {history_text}, current);
    auto ex = quretec::supervision::build_example(topic, 2, positives, 64);
    out.push_back(std::move(*ex));
  }
  return out;
}

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t worst_param = 0;
  std::size_t param_count = 0;
};

/// Central finite differences against the analytic gradient, every
/// parameter, eval mode. Relative error uses a small-denominator floor so
/// near-zero gradients are compared absolutely.
inline GradCheckResult gradient_check(
    quretec::model::ResolverModel& model,
    const std::vector<quretec::supervision::LabeledExample>& examples,
    double h = 1e-5) {
  std::vector<double> analytic(model.param_count(), 0.0);
  for (const auto& ex : examples) model.loss_and_gradient(ex, analytic);

  auto total_loss = [&]() {
    double sum = 0.0;
    for (const auto& ex : examples) sum += model.loss(ex).value_or(0.0);
    return sum;
  };

  GradCheckResult result;
  result.param_count = model.param_count();
  auto& params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    double orig = params[i];
    params[i] = orig + h;
    double plus = total_loss();
    params[i] = orig - h;
    double minus = total_loss();
    params[i] = orig;
    double numeric = (plus - minus) / (2.0 * h);
    double denom =
        std::max({1e-5, std::fabs(analytic[i]), std::fabs(numeric)});
    double rel = std::fabs(analytic[i] - numeric) / denom;
    if (rel > result.max_rel_err) {
      result.max_rel_err = rel;
      result.worst_param = i;
    }
  }
  return result;
}

}  // namespace fixtures
