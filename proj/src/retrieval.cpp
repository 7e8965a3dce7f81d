#include "quretec/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "quretec/common.hpp"

namespace quretec::retrieval {

using nlohmann::json;
using text::Term;

constexpr int kIndexFormatVersion = 1;

std::vector<Passage> parse_corpus_tsv(const std::string& content) {
  std::vector<Passage> out;
  size_t pos = 0;
  int line_no = 0;
  while (pos < content.size()) {
    size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw InputError("corpus line " + std::to_string(line_no) +
                       ": expected passage_id<TAB>text");
    out.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return out;
}

std::vector<Passage> load_corpus_tsv(const std::filesystem::path& path) {
  return parse_corpus_tsv(read_file(path));
}

void RankedList::validate() const {
  for (size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].score > entries[i - 1].score)
      throw InputError("ranked list scores increase at rank " +
                       std::to_string(i + 1));
    if (entries[i].score == entries[i - 1].score &&
        entries[i].passage_id <= entries[i - 1].passage_id)
      throw InputError("ranked list tie not broken by ascending id at rank " +
                       std::to_string(i + 1));
  }
}

InvertedIndex InvertedIndex::build(const std::vector<Passage>& collection,
                                   const text::Analyzer& analyzer) {
  InvertedIndex index;
  index.fingerprint_ = analyzer.fingerprint();

  std::vector<std::int32_t> order(collection.size());
  for (size_t i = 0; i < collection.size(); ++i)
    order[i] = static_cast<std::int32_t>(i);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    return collection[a].id < collection[b].id;
  });
  for (size_t i = 1; i < order.size(); ++i)
    if (collection[order[i]].id == collection[order[i - 1]].id)
      throw InputError("duplicate passage id: " + collection[order[i]].id);

  // first pass: per-doc term counts, in passage-id order
  std::vector<std::map<Term, std::int32_t>> doc_tf(order.size());
  std::map<Term, std::int64_t> cf;
  for (size_t d = 0; d < order.size(); ++d) {
    const Passage& p = collection[order[d]];
    index.doc_ids_.push_back(p.id);
    std::int32_t len = 0;
    for (const auto& tok : analyzer.tokenize(p.text)) {
      if (!tok.term) continue;
      ++doc_tf[d][*tok.term];
      ++cf[*tok.term];
      ++len;
    }
    index.doc_len_.push_back(len);
    index.total_tokens_ += len;
  }

  for (const auto& [term, count] : cf) {
    index.term_lookup_[term] =
        static_cast<std::int32_t>(index.terms_.size());
    index.terms_.push_back(term);
    index.cf_.push_back(count);
  }
  index.postings_.resize(index.terms_.size());
  index.forward_.resize(order.size());
  for (size_t d = 0; d < order.size(); ++d) {
    for (const auto& [term, tf] : doc_tf[d]) {
      std::int32_t tid = index.term_lookup_.at(term);
      index.postings_[tid].push_back(
          {static_cast<std::int32_t>(d), tf});
      index.forward_[d].emplace_back(tid, tf);
    }
  }
  for (size_t d = 0; d < order.size(); ++d)
    index.doc_lookup_[index.doc_ids_[d]] = static_cast<std::int32_t>(d);
  return index;
}

std::optional<std::int32_t> InvertedIndex::term_id(const Term& term) const {
  auto it = term_lookup_.find(term);
  if (it == term_lookup_.end()) return std::nullopt;
  return it->second;
}

std::int32_t InvertedIndex::doc_index(const std::string& passage_id) const {
  auto it = doc_lookup_.find(passage_id);
  if (it == doc_lookup_.end())
    throw InputError("unknown passage id: " + passage_id);
  return it->second;
}

std::int64_t InvertedIndex::collection_freq(const Term& term) const {
  auto tid = term_id(term);
  return tid ? cf_[*tid] : 0;
}

int InvertedIndex::doc_length(const std::string& passage_id) const {
  return doc_len_[static_cast<size_t>(doc_index(passage_id))];
}

int InvertedIndex::term_freq(const Term& term,
                             const std::string& passage_id) const {
  auto tid = term_id(term);
  if (!tid) return 0;
  std::int32_t d = doc_index(passage_id);
  const auto& plist = postings_[*tid];
  auto it = std::lower_bound(
      plist.begin(), plist.end(), d,
      [](const Posting& p, std::int32_t doc) { return p.doc < doc; });
  return (it != plist.end() && it->doc == d) ? it->tf : 0;
}

double InvertedIndex::ql_score(const ResolvedQuery& query,
                               const std::string& passage_id,
                               double mu) const {
  std::int32_t d = doc_index(passage_id);
  double score = 0.0;
  double len = static_cast<double>(doc_len_[static_cast<size_t>(d)]);
  double total = static_cast<double>(total_tokens_);
  for (const auto& [term, w] : query.weights) {
    auto tid = term_id(term);
    if (!tid) continue;  // zero collection frequency: skipped
    const auto& plist = postings_[*tid];
    auto it = std::lower_bound(
        plist.begin(), plist.end(), d,
        [](const Posting& p, std::int32_t doc) { return p.doc < doc; });
    double tf = (it != plist.end() && it->doc == d)
                    ? static_cast<double>(it->tf)
                    : 0.0;
    double cf = static_cast<double>(cf_[*tid]);
    score += w * std::log((tf + mu * cf / total) / (len + mu));
  }
  return score;
}

RankedList InvertedIndex::search(const std::string& query_id,
                                 const ResolvedQuery& query, int k,
                                 double mu) const {
  if (k < 1) throw InputError("search depth must be >= 1");
  RankedList out;
  out.query_id = query_id;
  if (query.empty()) return out;

  // candidates: union of postings of the query terms
  std::vector<char> is_candidate(doc_ids_.size(), 0);
  for (const auto& [term, w] : query.weights) {
    auto tid = term_id(term);
    if (!tid) continue;
    for (const Posting& p : postings_[*tid])
      is_candidate[static_cast<size_t>(p.doc)] = 1;
  }

  std::vector<std::pair<double, std::int32_t>> scored;  // (score, doc)
  for (size_t d = 0; d < doc_ids_.size(); ++d) {
    if (!is_candidate[d]) continue;
    double s = 0.0;
    double len = static_cast<double>(doc_len_[d]);
    double total = static_cast<double>(total_tokens_);
    for (const auto& [term, w] : query.weights) {
      auto tid = term_id(term);
      if (!tid) continue;
      const auto& plist = postings_[*tid];
      auto it = std::lower_bound(plist.begin(), plist.end(),
                                 static_cast<std::int32_t>(d),
                                 [](const Posting& p, std::int32_t doc) {
                                   return p.doc < doc;
                                 });
      double tf = (it != plist.end() && it->doc == static_cast<std::int32_t>(d))
                      ? static_cast<double>(it->tf)
                      : 0.0;
      double cf = static_cast<double>(cf_[*tid]);
      s += w * std::log((tf + mu * cf / total) / (len + mu));
    }
    scored.emplace_back(s, static_cast<std::int32_t>(d));
  }
  // doc indexes follow passage-id order, so ascending doc breaks ties by id
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (static_cast<int>(scored.size()) > k)
    scored.resize(static_cast<size_t>(k));
  for (const auto& [score, d] : scored)
    out.entries.push_back({doc_ids_[static_cast<size_t>(d)], score});
  return out;
}

ResolvedQuery InvertedIndex::rm3_expand(const ResolvedQuery& query, int n,
                                        int k_terms, double lambda_orig,
                                        double mu) const {
  if (n < 1 || k_terms < 1)
    throw InputError("rm3 requires n >= 1 and k_terms >= 1");
  if (lambda_orig < 0.0 || lambda_orig > 1.0)
    throw InputError("rm3 original-query weight must be in [0,1]");

  RankedList top = search("rm3", query, n, mu);
  if (top.entries.empty()) return query;

  // relevance model: P(t|R) ∝ sum over top passages of P(t|p) * exp(QL).
  // Scores are shifted by the max before exponentiation; the shift cancels
  // when the model is normalized.
  double max_score = top.entries.front().score;
  std::vector<double> weight(terms_.size(), 0.0);
  for (const auto& entry : top.entries) {
    std::int32_t d = doc_index(entry.passage_id);
    double w = std::exp(entry.score - max_score);
    double len = static_cast<double>(doc_len_[static_cast<size_t>(d)]);
    for (const auto& [tid, tf] : forward_[static_cast<size_t>(d)])
      weight[static_cast<size_t>(tid)] += w * static_cast<double>(tf) / len;
  }

  std::vector<std::int32_t> by_weight;
  for (size_t t = 0; t < weight.size(); ++t)
    if (weight[t] > 0.0) by_weight.push_back(static_cast<std::int32_t>(t));
  // ties by ascending term string == ascending term id
  std::sort(by_weight.begin(), by_weight.end(),
            [&](std::int32_t a, std::int32_t b) {
              if (weight[a] != weight[b]) return weight[a] > weight[b];
              return a < b;
            });
  if (static_cast<int>(by_weight.size()) > k_terms)
    by_weight.resize(static_cast<size_t>(k_terms));

  double expansion_mass = 0.0;
  for (std::int32_t t : by_weight) expansion_mass += weight[t];

  ResolvedQuery out;
  double orig_mass = query.weight_sum();
  if (orig_mass > 0.0 && lambda_orig > 0.0)
    for (const auto& [term, w] : query.weights)
      out.weights[term] += lambda_orig * w / orig_mass;
  if (expansion_mass > 0.0 && lambda_orig < 1.0)
    for (std::int32_t t : by_weight)
      out.weights[terms_[static_cast<size_t>(t)]] +=
          (1.0 - lambda_orig) * weight[t] / expansion_mass;
  return out;
}

void InvertedIndex::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);

  std::string docs;
  for (size_t d = 0; d < doc_ids_.size(); ++d) {
    docs += doc_ids_[d];
    docs += '\t';
    docs += std::to_string(doc_len_[d]);
    docs += '\n';
  }

  std::string postings;
  for (size_t t = 0; t < terms_.size(); ++t) {
    postings += terms_[t];
    postings += '\t';
    postings += std::to_string(cf_[t]);
    for (const Posting& p : postings_[t]) {
      postings += '\t';
      postings += std::to_string(p.doc);
      postings += ':';
      postings += std::to_string(p.tf);
    }
    postings += '\n';
  }

  json manifest;
  manifest["format_version"] = kIndexFormatVersion;
  manifest["type"] = "quretec-index";
  manifest["analyzer"] = fingerprint_;
  manifest["docs"] = doc_ids_.size();
  manifest["terms"] = terms_.size();
  manifest["total_tokens"] = total_tokens_;
  manifest["docs_hash"] = fnv1a64_hex(docs);
  manifest["postings_hash"] = fnv1a64_hex(postings);

  write_file_atomic(dir / "docs.tsv", docs);
  write_file_atomic(dir / "postings.txt", postings);
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& dir,
                                  const text::Analyzer& analyzer) {
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw InputError("bad index manifest: " + std::string(e.what()));
  }
  if (manifest.value("format_version", -1) != kIndexFormatVersion)
    throw InputError("unsupported index format version in " + dir.string());
  std::string fingerprint = manifest.value("analyzer", "");
  if (fingerprint != analyzer.fingerprint())
    throw InputError(
        "index was built with different preprocessing (" + fingerprint +
        " vs " + analyzer.fingerprint() + "); rebuild the index");

  std::string docs = read_file(dir / "docs.tsv");
  std::string postings = read_file(dir / "postings.txt");
  if (manifest.value("docs_hash", "") != fnv1a64_hex(docs) ||
      manifest.value("postings_hash", "") != fnv1a64_hex(postings))
    throw InputError("index content does not match manifest hashes");

  InvertedIndex index;
  index.fingerprint_ = fingerprint;

  std::istringstream docs_in(docs);
  std::string line;
  while (std::getline(docs_in, line)) {
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw InputError("bad docs.tsv line: " + line);
    index.doc_ids_.push_back(line.substr(0, tab));
    std::int32_t len = std::stoi(line.substr(tab + 1));
    index.doc_len_.push_back(len);
    index.total_tokens_ += len;
  }
  index.forward_.resize(index.doc_ids_.size());

  std::istringstream post_in(postings);
  while (std::getline(post_in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string term, field;
    if (!std::getline(fields, term, '\t'))
      throw InputError("bad postings line: " + line);
    if (!std::getline(fields, field, '\t'))
      throw InputError("bad postings line: " + line);
    std::int32_t tid = static_cast<std::int32_t>(index.terms_.size());
    index.term_lookup_[term] = tid;
    index.terms_.push_back(term);
    index.cf_.push_back(std::stoll(field));
    index.postings_.emplace_back();
    while (std::getline(fields, field, '\t')) {
      size_t colon = field.find(':');
      if (colon == std::string::npos)
        throw InputError("bad posting entry: " + field);
      Posting p{std::stoi(field.substr(0, colon)),
                std::stoi(field.substr(colon + 1))};
      if (p.doc < 0 || p.doc >= static_cast<std::int32_t>(index.doc_ids_.size()))
        throw InputError("posting references unknown document");
      index.postings_.back().push_back(p);
      index.forward_[static_cast<size_t>(p.doc)].emplace_back(tid, p.tf);
    }
  }
  for (size_t d = 0; d < index.doc_ids_.size(); ++d)
    index.doc_lookup_[index.doc_ids_[d]] = static_cast<std::int32_t>(d);
  return index;
}

}  // namespace quretec::retrieval
