#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "quretec/query.hpp"
#include "quretec/text.hpp"

namespace quretec::retrieval {

struct Passage {
  std::string id;
  std::string text;
};

/// Corpus ingestion: TSV with columns passage_id<TAB>text, UTF-8.
std::vector<Passage> load_corpus_tsv(const std::filesystem::path& path);
std::vector<Passage> parse_corpus_tsv(const std::string& content);

struct RankedEntry {
  std::string passage_id;
  double score = 0.0;
};

/// A scored, ordered passage list for one query. Scores are
/// non-increasing, ties are broken by ascending passage id, ids are unique.
struct RankedList {
  std::string query_id;
  std::vector<RankedEntry> entries;

  void validate() const;  // throws InputError on violated invariants
};

/// Term -> postings map with document lengths and collection statistics,
/// preprocessed with the same Analyzer as queries. Immutable once built;
/// concurrent reads are safe.
class InvertedIndex {
 public:
  /// Indexes a collection. Duplicate passage ids are an input error.
  static InvertedIndex build(
      const std::vector<Passage>& collection,
      const text::Analyzer& analyzer = text::Analyzer::standard());

  std::int64_t total_tokens() const { return total_tokens_; }
  int doc_count() const { return static_cast<int>(doc_ids_.size()); }
  std::int64_t collection_freq(const text::Term& term) const;
  /// Post-preprocessing token count; unknown id is an input error.
  int doc_length(const std::string& passage_id) const;
  int term_freq(const text::Term& term, const std::string& passage_id) const;
  const std::vector<std::string>& passage_ids() const { return doc_ids_; }
  const std::string& analyzer_fingerprint() const { return fingerprint_; }

  /// Dirichlet-smoothed query likelihood of one passage:
  ///   sum over query terms t with cf(t) > 0 of
  ///     w(t) * log[(tf(t,p) + mu*cf(t)/total) / (len(p) + mu)].
  /// Terms absent from the collection contribute nothing.
  double ql_score(const ResolvedQuery& query, const std::string& passage_id,
                  double mu) const;

  /// Top-k passages sharing at least one term with the query, by ql_score;
  /// ties by ascending passage id. Empty query bag yields an empty list.
  RankedList search(const std::string& query_id, const ResolvedQuery& query,
                    int k = 1000, double mu = 2500.0) const;

  /// RM3 pseudo-relevance feedback: estimates a relevance model from the
  /// top-n passages, keeps the top k_terms, and interpolates it with the
  /// normalized original bag at weight lambda_orig. If retrieval returns
  /// nothing the original query is returned unchanged.
  ResolvedQuery rm3_expand(const ResolvedQuery& query, int n, int k_terms,
                           double lambda_orig = 0.8, double mu = 2500.0) const;

  /// Versioned on-disk layout: manifest.json + docs.tsv + postings.txt.
  void save(const std::filesystem::path& dir) const;
  /// Rejects indexes with a different format version or a different
  /// preprocessing fingerprint than `analyzer`.
  static InvertedIndex load(
      const std::filesystem::path& dir,
      const text::Analyzer& analyzer = text::Analyzer::standard());

 private:
  struct Posting {
    std::int32_t doc;  // index into doc_ids_ (which is sorted), so postings
                       // sorted by doc are sorted by passage id
    std::int32_t tf;
  };

  std::optional<std::int32_t> term_id(const text::Term& term) const;
  std::int32_t doc_index(const std::string& passage_id) const;

  std::vector<std::string> doc_ids_;       // sorted ascending
  std::vector<std::int32_t> doc_len_;
  std::vector<text::Term> terms_;          // sorted ascending
  std::vector<std::vector<Posting>> postings_;
  std::vector<std::int64_t> cf_;
  std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> forward_;
  std::int64_t total_tokens_ = 0;
  std::string fingerprint_;
  std::unordered_map<std::string, std::int32_t> term_lookup_;
  std::unordered_map<std::string, std::int32_t> doc_lookup_;
};

}  // namespace quretec::retrieval
