#include "quretec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "quretec/common.hpp"

namespace quretec::evaluation {

using retrieval::RankedList;

int Qrels::relevant_count(const std::string& query_id, int binarize_at) const {
  auto it = grades.find(query_id);
  if (it == grades.end()) return 0;
  int n = 0;
  for (const auto& [pid, grade] : it->second)
    if (grade >= binarize_at) ++n;
  return n;
}

Qrels Qrels::parse(const std::string& content) {
  Qrels qrels;
  std::istringstream in(content);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string qid, iter, pid;
    int grade;
    if (!(fields >> qid)) continue;  // blank line
    if (!(fields >> iter >> pid >> grade))
      throw InputError("qrels line " + std::to_string(line_no) +
                       ": expected 'query_id 0 passage_id grade'");
    if (grade < 0)
      throw InputError("qrels line " + std::to_string(line_no) +
                       ": negative grade");
    auto [it, inserted] = qrels.grades[qid].emplace(pid, grade);
    if (!inserted)
      throw InputError("qrels line " + std::to_string(line_no) +
                       ": duplicate judgment for (" + qid + ", " + pid + ")");
  }
  return qrels;
}

Qrels Qrels::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

Prf prf(const std::set<text::Term>& predicted,
        const std::set<text::Term>& gold) {
  size_t hits = 0;
  for (const auto& t : predicted) hits += gold.count(t);
  Prf out;
  out.precision = predicted.empty()
                      ? 1.0
                      : static_cast<double>(hits) /
                            static_cast<double>(predicted.size());
  out.recall = gold.empty() ? 1.0
                            : static_cast<double>(hits) /
                                  static_cast<double>(gold.size());
  double sum = out.precision + out.recall;
  out.f1 = sum > 0.0 ? 2.0 * out.precision * out.recall / sum : 0.0;
  return out;
}

IntrinsicReport intrinsic_eval(const std::vector<IntrinsicEntry>& entries) {
  IntrinsicReport report;
  std::map<int, std::vector<Prf>> by_turn;
  for (const auto& e : entries) {
    if (e.turn <= 1) {
      ++report.first_turns_excluded;
      continue;
    }
    IntrinsicReport::Row row{e.topic_id, e.turn, prf(e.predicted, e.gold)};
    by_turn[e.turn].push_back(row.scores);
    report.rows.push_back(std::move(row));
  }
  auto mean_of = [](const std::vector<Prf>& v) {
    Prf m;
    for (const auto& s : v) {
      m.precision += s.precision;
      m.recall += s.recall;
      m.f1 += s.f1;
    }
    double n = static_cast<double>(v.size());
    if (n > 0) {
      m.precision /= n;
      m.recall /= n;
      m.f1 /= n;
    }
    return m;
  };
  std::vector<Prf> all;
  for (const auto& row : report.rows) all.push_back(row.scores);
  report.mean = mean_of(all);
  for (const auto& [turn, scores] : by_turn)
    report.per_turn[turn] = mean_of(scores);
  return report;
}

std::optional<RankingMetrics> ranking_metrics(const RankedList& run,
                                              const Qrels& qrels,
                                              int cut_ndcg, int cut,
                                              int binarize_at) {
  auto judged = qrels.grades.find(run.query_id);
  if (judged == qrels.grades.end()) return std::nullopt;
  const auto& grades = judged->second;

  int relevant_total = 0;
  std::vector<int> ideal_grades;
  for (const auto& [pid, grade] : grades) {
    if (grade >= binarize_at) ++relevant_total;
    if (grade > 0) ideal_grades.push_back(grade);
  }
  if (relevant_total == 0) return std::nullopt;

  RankingMetrics m;
  m.relevant_total = relevant_total;

  int found = 0;
  double ap_sum = 0.0;
  double dcg = 0.0;
  const int depth = std::min<int>(cut, static_cast<int>(run.entries.size()));
  for (int i = 0; i < depth; ++i) {
    const auto& entry = run.entries[static_cast<size_t>(i)];
    auto g = grades.find(entry.passage_id);
    int grade = g == grades.end() ? 0 : g->second;
    int rank = i + 1;
    if (grade >= binarize_at) {
      ++found;
      ap_sum += static_cast<double>(found) / static_cast<double>(rank);
      if (m.rr == 0.0) m.rr = 1.0 / static_cast<double>(rank);
    }
    if (rank <= cut_ndcg && grade > 0)
      dcg += static_cast<double>(grade) / std::log2(static_cast<double>(rank) + 1.0);
  }
  m.recall = static_cast<double>(found) / static_cast<double>(relevant_total);
  m.ap = ap_sum / static_cast<double>(relevant_total);

  std::sort(ideal_grades.begin(), ideal_grades.end(), std::greater<int>());
  double idcg = 0.0;
  for (int i = 0; i < cut_ndcg && i < static_cast<int>(ideal_grades.size());
       ++i)
    idcg += static_cast<double>(ideal_grades[static_cast<size_t>(i)]) /
            std::log2(static_cast<double>(i) + 2.0);
  m.ndcg = idcg > 0.0 ? dcg / idcg : 0.0;
  return m;
}

namespace {

int parse_turn_suffix(const std::string& query_id) {
  size_t us = query_id.rfind('_');
  if (us == std::string::npos || us + 1 >= query_id.size()) return 0;
  int turn = 0;
  for (size_t i = us + 1; i < query_id.size(); ++i) {
    char c = query_id[i];
    if (c < '0' || c > '9') return 0;
    turn = turn * 10 + (c - '0');
  }
  return turn;
}

RankingMetrics mean_metrics(const std::vector<RankingMetrics>& v) {
  RankingMetrics m;
  for (const auto& x : v) {
    m.recall += x.recall;
    m.ap += x.ap;
    m.rr += x.rr;
    m.ndcg += x.ndcg;
  }
  double n = static_cast<double>(v.size());
  if (n > 0) {
    m.recall /= n;
    m.ap /= n;
    m.rr /= n;
    m.ndcg /= n;
  }
  return m;
}

}  // namespace

ExtrinsicReport extrinsic_eval(const std::vector<RankedList>& runs,
                               const Qrels& qrels, int cut_ndcg, int cut,
                               int binarize_at) {
  ExtrinsicReport report;
  std::map<int, std::vector<RankingMetrics>> by_turn;
  std::vector<RankingMetrics> all;
  for (const auto& run : runs) {
    auto m = ranking_metrics(run, qrels, cut_ndcg, cut, binarize_at);
    if (!m) {
      ++report.excluded_queries;
      continue;
    }
    ExtrinsicReport::Row row{run.query_id, parse_turn_suffix(run.query_id),
                             *m};
    by_turn[row.turn].push_back(*m);
    all.push_back(*m);
    report.rows.push_back(std::move(row));
  }
  report.mean = mean_metrics(all);
  for (const auto& [turn, v] : by_turn) report.per_turn[turn] = mean_metrics(v);
  return report;
}

std::map<int, double> per_turn_mean(
    const std::vector<std::pair<int, double>>& values) {
  std::map<int, std::pair<double, int>> acc;
  for (const auto& [turn, v] : values) {
    acc[turn].first += v;
    acc[turn].second += 1;
  }
  std::map<int, double> out;
  for (const auto& [turn, sv] : acc)
    out[turn] = sv.first / static_cast<double>(sv.second);
  return out;
}

// Continued-fraction evaluation of the incomplete beta (modified Lentz).
namespace {

double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-15;
  constexpr double kFpMin = 1e-300;

  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double students_t_two_tailed_p(double t, int df) {
  double x = static_cast<double>(df) / (static_cast<double>(df) + t * t);
  return regularized_incomplete_beta(0.5 * df, 0.5, x);
}

TTestResult paired_ttest(const std::vector<double>& a,
                         const std::vector<double>& b) {
  if (a.size() != b.size())
    throw InputError("paired t-test needs equal-length samples");
  size_t n = a.size();
  if (n < 2) throw InputError("paired t-test needs n >= 2");

  double mean = 0.0;
  for (size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double d = (a[i] - b[i]) - mean;
    ss += d * d;
  }
  double var = ss / static_cast<double>(n - 1);

  TTestResult result;
  result.df = static_cast<int>(n) - 1;
  if (var == 0.0) return result;  // flagged undefined, never NaN
  result.defined = true;
  result.t = mean / std::sqrt(var / static_cast<double>(n));
  result.p = students_t_two_tailed_p(result.t, result.df);
  return result;
}

std::vector<RankedList> parse_run_file(const std::string& content) {
  struct Item {
    int rank;
    std::string pid;
    double score;
  };
  std::map<std::string, std::vector<Item>> by_query;
  std::istringstream in(content);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string qid, q0, pid, tag;
    int rank;
    double score;
    if (!(fields >> qid)) continue;
    if (!(fields >> q0 >> pid >> rank >> score >> tag))
      throw InputError("run line " + std::to_string(line_no) +
                       ": expected 'query_id Q0 passage_id rank score tag'");
    by_query[qid].push_back({rank, pid, score});
  }
  std::vector<RankedList> out;
  for (auto& [qid, items] : by_query) {
    std::sort(items.begin(), items.end(),
              [](const Item& a, const Item& b) { return a.rank < b.rank; });
    RankedList list;
    list.query_id = qid;
    std::set<std::string> seen;
    for (size_t i = 0; i < items.size(); ++i) {
      if (items[i].rank != static_cast<int>(i) + 1)
        throw InputError("run for query " + qid +
                         ": ranks must be 1-based and contiguous");
      if (!seen.insert(items[i].pid).second)
        throw InputError("run for query " + qid + ": duplicate passage " +
                         items[i].pid);
      list.entries.push_back({items[i].pid, items[i].score});
    }
    out.push_back(std::move(list));
  }
  return out;
}

std::vector<RankedList> load_run_file(const std::filesystem::path& path) {
  return parse_run_file(read_file(path));
}

std::string format_run_file(const std::vector<RankedList>& runs,
                            const std::string& tag) {
  std::vector<const RankedList*> ordered;
  for (const auto& r : runs) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const RankedList* a, const RankedList* b) {
              return a->query_id < b->query_id;
            });
  std::string out;
  char buf[64];
  for (const RankedList* run : ordered) {
    for (size_t i = 0; i < run->entries.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.6f", run->entries[i].score);
      out += run->query_id;
      out += " Q0 ";
      out += run->entries[i].passage_id;
      out += ' ';
      out += std::to_string(i + 1);
      out += ' ';
      out += buf;
      out += ' ';
      out += tag;
      out += '\n';
    }
  }
  return out;
}

nlohmann::json to_json(const IntrinsicReport& report) {
  nlohmann::json j;
  j["type"] = "intrinsic";
  j["queries"] = report.rows.size();
  j["first_turns_excluded"] = report.first_turns_excluded;
  j["mean"] = {{"precision", report.mean.precision},
               {"recall", report.mean.recall},
               {"f1", report.mean.f1}};
  nlohmann::json per_turn = nlohmann::json::object();
  for (const auto& [turn, m] : report.per_turn)
    per_turn[std::to_string(turn)] = {{"precision", m.precision},
                                      {"recall", m.recall},
                                      {"f1", m.f1}};
  j["per_turn"] = std::move(per_turn);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows)
    rows.push_back({{"topic_id", row.topic_id},
                    {"turn", row.turn},
                    {"precision", row.scores.precision},
                    {"recall", row.scores.recall},
                    {"f1", row.scores.f1}});
  j["per_query"] = std::move(rows);
  return j;
}

nlohmann::json to_json(const ExtrinsicReport& report) {
  nlohmann::json j;
  j["type"] = "extrinsic";
  j["queries"] = report.rows.size();
  j["excluded_queries"] = report.excluded_queries;
  j["mean"] = {{"recall", report.mean.recall},
               {"map", report.mean.ap},
               {"mrr", report.mean.rr},
               {"ndcg", report.mean.ndcg}};
  nlohmann::json per_turn = nlohmann::json::object();
  for (const auto& [turn, m] : report.per_turn)
    per_turn[std::to_string(turn)] = {{"recall", m.recall},
                                      {"map", m.ap},
                                      {"mrr", m.rr},
                                      {"ndcg", m.ndcg}};
  j["per_turn"] = std::move(per_turn);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows)
    rows.push_back({{"query_id", row.query_id},
                    {"turn", row.turn},
                    {"recall", row.metrics.recall},
                    {"map", row.metrics.ap},
                    {"mrr", row.metrics.rr},
                    {"ndcg", row.metrics.ndcg}});
  j["per_query"] = std::move(rows);
  return j;
}

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%8.4f", v);
  return buf;
}

}  // namespace

std::string to_table(const IntrinsicReport& report) {
  std::ostringstream out;
  out << "turn       n         P         R        F1\n";
  char buf[128];
  for (const auto& [turn, m] : report.per_turn) {
    size_t n = 0;
    for (const auto& row : report.rows)
      if (row.turn == turn) ++n;
    std::snprintf(buf, sizeof(buf), "%-6d %5zu  %s  %s  %s\n", turn, n,
                  fixed(m.precision).c_str(), fixed(m.recall).c_str(),
                  fixed(m.f1).c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "%-6s %5zu  %s  %s  %s\n", "all",
                report.rows.size(), fixed(report.mean.precision).c_str(),
                fixed(report.mean.recall).c_str(),
                fixed(report.mean.f1).c_str());
  out << buf;
  return out.str();
}

std::string to_table(const ExtrinsicReport& report) {
  std::ostringstream out;
  out << "turn       n    Recall       MAP       MRR      NDCG\n";
  char buf[160];
  for (const auto& [turn, m] : report.per_turn) {
    size_t n = 0;
    for (const auto& row : report.rows)
      if (row.turn == turn) ++n;
    std::snprintf(buf, sizeof(buf), "%-6d %5zu  %s  %s  %s  %s\n", turn, n,
                  fixed(m.recall).c_str(), fixed(m.ap).c_str(),
                  fixed(m.rr).c_str(), fixed(m.ndcg).c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "%-6s %5zu  %s  %s  %s  %s\n", "all",
                report.rows.size(), fixed(report.mean.recall).c_str(),
                fixed(report.mean.ap).c_str(), fixed(report.mean.rr).c_str(),
                fixed(report.mean.ndcg).c_str());
  out << buf;
  return out.str();
}

}  // namespace quretec::evaluation
