#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "quretec/retrieval.hpp"
#include "quretec/text.hpp"

namespace quretec::evaluation {

/// Graded relevance judgments keyed by (query id, passage id).
struct Qrels {
  std::map<std::string, std::map<std::string, int>> grades;

  bool has_query(const std::string& query_id) const {
    return grades.count(query_id) > 0;
  }
  /// Passages with grade >= binarize_at for one query.
  int relevant_count(const std::string& query_id, int binarize_at) const;

  /// Whitespace-delimited "query_id 0 passage_id grade" lines. A second
  /// grade for the same pair is an input error.
  static Qrels parse(const std::string& content);
  static Qrels load(const std::filesystem::path& path);
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Set precision/recall/F1 between predicted and gold resolution terms.
/// Conventions: P = 1 when pred is empty, R = 1 when gold is empty; F1 is
/// the harmonic mean, 0 when P + R == 0.
Prf prf(const std::set<text::Term>& predicted,
        const std::set<text::Term>& gold);

struct IntrinsicEntry {
  std::string topic_id;
  int turn = 0;
  std::set<text::Term> predicted;
  std::set<text::Term> gold;
};

struct IntrinsicReport {
  struct Row {
    std::string topic_id;
    int turn = 0;
    Prf scores;
  };
  std::vector<Row> rows;  // turn >= 2 queries only
  int first_turns_excluded = 0;
  Prf mean;                      // arithmetic mean over rows
  std::map<int, Prf> per_turn;   // means keyed by turn index
  bool empty() const { return rows.empty(); }
};

/// Per-query prf, means over all turn >= 2 queries, per-turn means.
/// First-turn entries are excluded from every aggregate.
IntrinsicReport intrinsic_eval(const std::vector<IntrinsicEntry>& entries);

struct RankingMetrics {
  double recall = 0.0;  // at depth cut, grade >= binarize_at is relevant
  double ap = 0.0;
  double rr = 0.0;
  double ndcg = 0.0;    // at cut_ndcg, linear gain, log2(rank+1) discount
  int relevant_total = 0;
};

/// Metrics for one run; empty when the query is absent from the qrels or
/// has no relevant passage (such queries are excluded from means).
std::optional<RankingMetrics> ranking_metrics(const retrieval::RankedList& run,
                                              const Qrels& qrels,
                                              int cut_ndcg = 3, int cut = 1000,
                                              int binarize_at = 1);

struct ExtrinsicReport {
  struct Row {
    std::string query_id;
    int turn = 0;  // parsed from the "<topic>_<turn>" id; 0 when unknown
    RankingMetrics metrics;
  };
  std::vector<Row> rows;
  int excluded_queries = 0;
  RankingMetrics mean;
  std::map<int, RankingMetrics> per_turn;
};

ExtrinsicReport extrinsic_eval(const std::vector<retrieval::RankedList>& runs,
                               const Qrels& qrels, int cut_ndcg = 3,
                               int cut = 1000, int binarize_at = 1);

/// Arithmetic mean per turn index.
std::map<int, double> per_turn_mean(
    const std::vector<std::pair<int, double>>& values);

struct TTestResult {
  bool defined = false;  // false when the differences have zero variance
  double t = 0.0;
  int df = 0;
  double p = 1.0;  // two-tailed
};

/// Paired two-tailed t-test on per-query metric values. Requires equal
/// lengths and n >= 2. Zero-variance differences yield defined == false
/// rather than NaN.
TTestResult paired_ttest(const std::vector<double>& a,
                         const std::vector<double>& b);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation,
/// accurate to ~1e-10. Exposed for the significance computation and tests.
double regularized_incomplete_beta(double a, double b, double x);

/// Two-tailed p for Student's t with df degrees of freedom.
double students_t_two_tailed_p(double t, int df);

// --- TREC exchange formats ---

/// Parses "query_id Q0 passage_id rank score tag" lines, grouped by query,
/// ordered by rank. Ranks must be 1-based and contiguous per query; entry
/// order (not the printed score) is authoritative.
std::vector<retrieval::RankedList> parse_run_file(const std::string& content);
std::vector<retrieval::RankedList> load_run_file(
    const std::filesystem::path& path);

/// Renders runs sorted by query id, rank 1-based, score with 6 decimals.
std::string format_run_file(const std::vector<retrieval::RankedList>& runs,
                            const std::string& tag);

nlohmann::json to_json(const IntrinsicReport& report);
nlohmann::json to_json(const ExtrinsicReport& report);
std::string to_table(const IntrinsicReport& report);
std::string to_table(const ExtrinsicReport& report);

}  // namespace quretec::evaluation
