#include "quretec/cli.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "quretec/common.hpp"
#include "quretec/evaluation.hpp"
#include "quretec/fusion.hpp"
#include "quretec/retrieval.hpp"
#include "quretec/supervision.hpp"

namespace quretec::cli {

using nlohmann::json;
using retrieval::RankedList;
using text::Term;

namespace {

std::unordered_map<std::string, std::string> corpus_map(
    const std::string& path) {
  std::unordered_map<std::string, std::string> map;
  for (auto& p : retrieval::load_corpus_tsv(path)) {
    if (!map.emplace(p.id, std::move(p.text)).second)
      throw InputError("duplicate passage id: " + p.id);
  }
  return map;
}

struct ResolvedEntry {
  std::string topic_id;
  int turn = 0;
  ResolvedQuery query;
};

/// The resolved-queries exchange file: one JSON object per query with the
/// weighted bag, the Eq.-(1)-substituted predicted term set, and (for the
/// model variant) per-term scores.
std::vector<ResolvedEntry> load_resolved(const std::string& path) {
  std::vector<ResolvedEntry> out;
  int line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw InputError("resolved line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    ResolvedEntry entry;
    entry.topic_id = j.at("topic_id").get<std::string>();
    entry.turn = j.at("turn").get<int>();
    for (const auto& [term, w] : j.at("weights").items())
      entry.query.weights[term] = w.get<double>();
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace

void cmd_label(const LabelOptions& options) {
  auto topics = load_topics_jsonl(options.topics);

  supervision::LabelMode mode;
  if (options.mode == "gold") {
    mode = supervision::LabelMode::Gold;
  } else if (options.mode == "distant") {
    mode = supervision::LabelMode::Distant;
  } else {
    throw InputError("label mode must be 'gold' or 'distant'");
  }

  supervision::PassageLookup lookup;
  std::unordered_map<std::string, std::string> corpus;
  if (!options.corpus.empty()) {
    corpus = corpus_map(options.corpus);
    lookup = [&corpus](const std::string& id) -> std::optional<std::string> {
      auto it = corpus.find(id);
      if (it == corpus.end()) return std::nullopt;
      return it->second;
    };
  }

  auto result = supervision::label_topics(topics, mode, lookup,
                                          options.window, options.max_len);
  write_file_atomic(options.out, supervision::to_jsonl(result.examples));

  auto stats = supervision::compute_stats(result.examples);
  std::cout << "examples: " << stats.examples
            << "  (first turns: " << result.first_turns
            << ", skipped: " << result.skipped_records << ")\n";
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "terms per query: total %.2f +/- %.2f, positive %.2f +/- %.2f\n",
                stats.mean_total_terms, stats.sd_total_terms,
                stats.mean_positive_terms, stats.sd_positive_terms);
  std::cout << buf;
}

void cmd_index(const IndexOptions& options) {
  auto corpus = retrieval::load_corpus_tsv(options.corpus);
  auto index = retrieval::InvertedIndex::build(corpus);
  index.save(options.out_dir);
  std::cout << "indexed " << index.doc_count() << " passages, "
            << index.total_tokens() << " tokens\n";
}

void cmd_resolve(const ResolveOptions& options) {
  auto topics = load_topics_jsonl(options.topics);
  const auto& analyzer = text::Analyzer::standard();

  std::string variant = options.variant;
  bool rm3_marker = false;
  if (variant.rfind("rm3:", 0) == 0) {
    // rm3:<v> resolves like original:<v>; the expansion itself runs inside
    // `search --rm3-n ...` against the index
    rm3_marker = true;
    variant = "original:" + variant.substr(4);
  }

  std::optional<model::ResolverModel> resolver;
  std::optional<model::OriginalVariant> original;
  bool oracle = false;
  if (variant == "quretec") {
    if (options.model_path.empty())
      throw InputError("variant 'quretec' needs --model");
    resolver = model::ResolverModel::load(options.model_path);
  } else if (variant == "oracle") {
    oracle = true;
  } else if (variant.rfind("original:", 0) == 0) {
    original = model::parse_original_variant(variant.substr(9));
    if (!original)
      throw InputError("unknown original variant: " + variant.substr(9));
  } else {
    throw InputError("unknown resolver variant: " + options.variant);
  }

  std::vector<const Topic*> ordered;
  for (const auto& t : topics) ordered.push_back(&t);
  std::sort(ordered.begin(), ordered.end(),
            [](const Topic* a, const Topic* b) {
              return a->topic_id < b->topic_id;
            });

  std::string out;
  for (const Topic* topic : ordered) {
    for (const Turn& turn : topic->turns) {
      ResolvedQuery query;
      std::map<Term, double> scores;
      if (resolver) {
        auto expansion =
            resolver->predict_terms(*topic, turn.turn_index, options.tau);
        query = model::resolve(turn.query, expansion);
        scores = resolver->predict_term_scores(*topic, turn.turn_index);
      } else if (oracle) {
        if (!turn.gold_rewrite)
          throw InputError("oracle variant needs a rewrite for " +
                           turn_query_id(topic->topic_id, turn.turn_index));
        query = model::resolve(*turn.gold_rewrite, {});
      } else {
        query = model::baseline_original(*original, *topic, turn.turn_index);
      }

      // intrinsic prediction set: terms(q-hat) ∩ terms(history) \ terms(cur)
      std::set<Term> history_terms;
      for (const auto& h :
           supervision::history_queries(*topic, turn.turn_index)) {
        auto terms = analyzer.term_set(h);
        history_terms.insert(terms.begin(), terms.end());
      }
      auto current_terms = analyzer.term_set(turn.query);
      json predicted = json::array();
      for (const auto& [term, w] : query.weights)
        if (history_terms.count(term) && !current_terms.count(term))
          predicted.push_back(term);

      json j;
      j["topic_id"] = topic->topic_id;
      j["turn"] = turn.turn_index;
      j["query_id"] = turn_query_id(topic->topic_id, turn.turn_index);
      json weights = json::object();
      for (const auto& [term, w] : query.weights) weights[term] = w;
      j["weights"] = std::move(weights);
      j["terms"] = std::move(predicted);
      if (resolver) {
        json jscores = json::object();
        for (const auto& [term, s] : scores) jscores[term] = s;
        j["scores"] = std::move(jscores);
      }
      if (rm3_marker) j["rm3"] = true;
      out += j.dump();
      out += '\n';
    }
  }
  write_file_atomic(options.out, out);
}

void cmd_search(const SearchOptions& options) {
  auto index = retrieval::InvertedIndex::load(options.index_dir);
  auto resolved = load_resolved(options.resolved);

  std::vector<RankedList> runs;
  for (const auto& entry : resolved) {
    ResolvedQuery query = entry.query;
    if (options.rm3_n > 0)
      query = index.rm3_expand(query, options.rm3_n, options.rm3_k,
                               options.rm3_lambda, options.mu);
    runs.push_back(index.search(turn_query_id(entry.topic_id, entry.turn),
                                query, options.k, options.mu));
  }
  write_file_atomic(options.out,
                    evaluation::format_run_file(runs, options.tag));
}

void cmd_rerank(const RerankOptions& options) {
  auto runs = evaluation::load_run_file(options.run);
  auto resolved = load_resolved(options.resolved);
  auto corpus = corpus_map(options.corpus);

  std::map<std::string, const ResolvedQuery*> by_query;
  for (const auto& entry : resolved)
    by_query[turn_query_id(entry.topic_id, entry.turn)] = &entry.query;

  fusion::PassageTextLookup lookup =
      [&corpus](const std::string& id) -> std::optional<std::string> {
    auto it = corpus.find(id);
    if (it == corpus.end()) return std::nullopt;
    return it->second;
  };
  auto scorer = fusion::make_overlap_scorer();

  std::vector<RankedList> reranked;
  for (const auto& run : runs) {
    auto it = by_query.find(run.query_id);
    if (it == by_query.end())
      throw InputError("no resolved query for run query " + run.query_id);
    reranked.push_back(fusion::rerank(scorer, run, *it->second, lookup));
  }
  write_file_atomic(options.out,
                    evaluation::format_run_file(reranked, options.tag));
}

void cmd_fuse(const FuseOptions& options) {
  if (options.runs.empty()) throw InputError("fuse needs at least one run");
  std::vector<std::vector<RankedList>> all;
  for (const auto& path : options.runs)
    all.push_back(evaluation::load_run_file(path));

  std::map<std::string, std::vector<RankedList>> grouped;
  for (const auto& run : all.front())
    grouped[run.query_id].push_back(run);
  for (size_t r = 1; r < all.size(); ++r)
    for (const auto& run : all[r]) {
      auto it = grouped.find(run.query_id);
      if (it != grouped.end()) it->second.push_back(run);
    }

  std::vector<RankedList> fused;
  for (auto& [qid, lists] : grouped)
    fused.push_back(fusion::rrf_fuse(lists, options.k));
  write_file_atomic(options.out,
                    evaluation::format_run_file(fused, options.tag));
}

void cmd_train(const TrainOptions& options) {
  auto train_set = supervision::load_examples_jsonl(options.train_labels);
  auto dev_set = supervision::load_examples_jsonl(options.dev_labels);
  auto result = model::train(train_set, dev_set, options.encoder,
                             options.trainer);
  result.model.save(options.out);
  std::cout << "epochs: " << result.epochs_run << "\n";
  char buf[64];
  for (size_t e = 0; e < result.dev_f1_trace.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "epoch %zu dev-F1 %.4f\n", e + 1,
                  result.dev_f1_trace[e]);
    std::cout << buf;
  }
  std::snprintf(buf, sizeof(buf), "best dev-F1 %.4f at epoch %d\n",
                result.best_dev_f1, result.best_epoch);
  std::cout << buf;
}

void cmd_eval(const EvalOptions& options) {
  bool extrinsic = !options.run.empty();
  bool intrinsic = !options.predictions.empty();
  if (!extrinsic && !intrinsic)
    throw InputError("eval needs --run/--qrels and/or --predictions/--topics");

  json report;
  json inputs = json::object();

  if (extrinsic) {
    if (options.qrels.empty()) throw InputError("--run needs --qrels");
    std::string run_content = read_file(options.run);
    std::string qrels_content = read_file(options.qrels);
    inputs["run"] = fnv1a64_hex(run_content);
    inputs["qrels"] = fnv1a64_hex(qrels_content);
    auto runs = evaluation::parse_run_file(run_content);
    auto qrels = evaluation::Qrels::parse(qrels_content);
    auto ext = evaluation::extrinsic_eval(runs, qrels, options.ndcg_cut,
                                          options.depth, options.binarize_at);
    report["extrinsic"] = evaluation::to_json(ext);
    std::cout << evaluation::to_table(ext);

    if (!options.compare_run.empty()) {
      std::string other_content = read_file(options.compare_run);
      inputs["compare_run"] = fnv1a64_hex(other_content);
      auto other_runs = evaluation::parse_run_file(other_content);
      auto other = evaluation::extrinsic_eval(other_runs, qrels,
                                              options.ndcg_cut, options.depth,
                                              options.binarize_at);
      // pair by query id; restrict to queries scored in both runs
      std::map<std::string, const evaluation::RankingMetrics*> rows_b;
      for (const auto& row : other.rows) rows_b[row.query_id] = &row.metrics;
      std::vector<double> a_ndcg, b_ndcg, a_ap, b_ap, a_rr, b_rr, a_rec, b_rec;
      for (const auto& row : ext.rows) {
        auto it = rows_b.find(row.query_id);
        if (it == rows_b.end()) continue;
        a_ndcg.push_back(row.metrics.ndcg);
        b_ndcg.push_back(it->second->ndcg);
        a_ap.push_back(row.metrics.ap);
        b_ap.push_back(it->second->ap);
        a_rr.push_back(row.metrics.rr);
        b_rr.push_back(it->second->rr);
        a_rec.push_back(row.metrics.recall);
        b_rec.push_back(it->second->recall);
      }
      auto to_json_ttest = [](const evaluation::TTestResult& r) {
        json j;
        j["defined"] = r.defined;
        j["df"] = r.df;
        if (r.defined) {
          j["t"] = r.t;
          j["p"] = r.p;
          j["significant_p01"] = r.p < 0.01;
        }
        return j;
      };
      json sig;
      sig["ndcg"] = to_json_ttest(evaluation::paired_ttest(a_ndcg, b_ndcg));
      sig["map"] = to_json_ttest(evaluation::paired_ttest(a_ap, b_ap));
      sig["mrr"] = to_json_ttest(evaluation::paired_ttest(a_rr, b_rr));
      sig["recall"] = to_json_ttest(evaluation::paired_ttest(a_rec, b_rec));
      sig["paired_queries"] = a_ndcg.size();
      report["significance"] = std::move(sig);
    }
  }

  if (intrinsic) {
    if (options.topics.empty())
      throw InputError("--predictions needs --topics for the gold rewrites");
    std::string pred_content = read_file(options.predictions);
    std::string topics_content = read_file(options.topics);
    inputs["predictions"] = fnv1a64_hex(pred_content);
    inputs["topics"] = fnv1a64_hex(topics_content);
    auto topics = parse_topics_jsonl(topics_content);
    std::map<std::string, const Topic*> by_id;
    for (const auto& t : topics) by_id[t.topic_id] = &t;

    std::vector<evaluation::IntrinsicEntry> entries;
    int missing_gold = 0;
    int line_no = 0;
    std::istringstream in(pred_content);
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw InputError("predictions line " + std::to_string(line_no) +
                         ": " + e.what());
      }
      evaluation::IntrinsicEntry entry;
      entry.topic_id = j.at("topic_id").get<std::string>();
      entry.turn = j.at("turn").get<int>();
      for (const auto& t : j.at("terms"))
        entry.predicted.insert(t.get<std::string>());
      if (entry.turn <= 1) continue;  // first turns are never evaluated
      auto it = by_id.find(entry.topic_id);
      if (it == by_id.end())
        throw InputError("predictions reference unknown topic " +
                         entry.topic_id);
      const Turn& turn = it->second->turn(entry.turn);
      if (!turn.gold_rewrite) {
        ++missing_gold;
        continue;
      }
      entry.gold = supervision::gold_resolution_terms(
          *turn.gold_rewrite,
          supervision::history_queries(*it->second, entry.turn), turn.query);
      entries.push_back(std::move(entry));
    }
    auto intr = evaluation::intrinsic_eval(entries);
    report["intrinsic"] = evaluation::to_json(intr);
    report["intrinsic"]["missing_gold"] = missing_gold;
    std::cout << evaluation::to_table(intr);
  }

  report["header"] = {{"inputs", std::move(inputs)},
                      {"options",
                       {{"ndcg_cut", options.ndcg_cut},
                        {"depth", options.depth},
                        {"binarize_at", options.binarize_at}}}};
  if (!options.out.empty())
    write_file_atomic(options.out, report.dump(2) + "\n");
}

int run(int argc, const char* const* argv) {
  CLI::App app{"conversational passage retrieval with query resolution"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file");

  LabelOptions label;
  auto* cmd_label_p = app.add_subcommand(
      "label", "generate term-classification training labels");
  cmd_label_p->add_option("--topics", label.topics)->required();
  cmd_label_p->add_option("--mode", label.mode)
      ->check(CLI::IsMember({"gold", "distant"}));
  cmd_label_p->add_option("--corpus", label.corpus);
  cmd_label_p->add_option("--out", label.out)->required();
  cmd_label_p->add_option("--window", label.window);
  cmd_label_p->add_option("--max-len", label.max_len);

  IndexOptions index;
  auto* cmd_index_p = app.add_subcommand("index", "build the passage index");
  cmd_index_p->add_option("--corpus", index.corpus)->required();
  cmd_index_p->add_option("--out", index.out_dir)->required();

  ResolveOptions resolve;
  auto* cmd_resolve_p =
      app.add_subcommand("resolve", "resolve conversational queries");
  cmd_resolve_p->add_option("--topics", resolve.topics)->required();
  cmd_resolve_p->add_option("--variant", resolve.variant);
  cmd_resolve_p->add_option("--model", resolve.model_path);
  cmd_resolve_p->add_option("--tau", resolve.tau);
  cmd_resolve_p->add_option("--out", resolve.out)->required();

  SearchOptions search;
  auto* cmd_search_p = app.add_subcommand("search", "initial QL retrieval");
  cmd_search_p->add_option("--index", search.index_dir)->required();
  cmd_search_p->add_option("--resolved", search.resolved)->required();
  cmd_search_p->add_option("--out", search.out)->required();
  cmd_search_p->add_option("--k", search.k);
  cmd_search_p->add_option("--mu", search.mu);
  cmd_search_p->add_option("--rm3-n", search.rm3_n);
  cmd_search_p->add_option("--rm3-k", search.rm3_k);
  cmd_search_p->add_option("--rm3-lambda", search.rm3_lambda);
  cmd_search_p->add_option("--tag", search.tag);

  RerankOptions rerank;
  auto* cmd_rerank_p =
      app.add_subcommand("rerank", "rescore a run with the overlap scorer");
  cmd_rerank_p->add_option("--run", rerank.run)->required();
  cmd_rerank_p->add_option("--resolved", rerank.resolved)->required();
  cmd_rerank_p->add_option("--corpus", rerank.corpus)->required();
  cmd_rerank_p->add_option("--out", rerank.out)->required();
  cmd_rerank_p->add_option("--tag", rerank.tag);

  FuseOptions fuse;
  auto* cmd_fuse_p =
      app.add_subcommand("fuse", "reciprocal rank fusion of runs");
  cmd_fuse_p->add_option("--runs", fuse.runs)->required()->expected(-1);
  cmd_fuse_p->add_option("--out", fuse.out)->required();
  cmd_fuse_p->add_option("--k-rrf", fuse.k);
  cmd_fuse_p->add_option("--tag", fuse.tag);

  TrainOptions train;
  auto* cmd_train_p =
      app.add_subcommand("train", "train the term classification model");
  cmd_train_p->add_option("--train", train.train_labels)->required();
  cmd_train_p->add_option("--dev", train.dev_labels)->required();
  cmd_train_p->add_option("--out", train.out)->required();
  cmd_train_p->add_option("--vocab-size", train.encoder.vocab_size);
  cmd_train_p->add_option("--embed-dim", train.encoder.embed_dim);
  cmd_train_p->add_option("--layers", train.encoder.layers);
  cmd_train_p->add_option("--heads", train.encoder.heads);
  cmd_train_p->add_option("--max-len", train.encoder.max_len);
  cmd_train_p->add_option("--dropout", train.encoder.dropout_rate);
  cmd_train_p->add_option("--seed", train.encoder.seed);
  cmd_train_p->add_option("--lr", train.trainer.learning_rate);
  cmd_train_p->add_option("--batch-size", train.trainer.batch_size);
  cmd_train_p->add_option("--clip", train.trainer.grad_clip_norm);
  cmd_train_p->add_option("--patience", train.trainer.patience);
  cmd_train_p->add_option("--tau", train.trainer.threshold);
  cmd_train_p->add_option("--epochs", train.trainer.max_epochs);
  cmd_train_p->add_option("--positive-weight", train.trainer.positive_weight);

  EvalOptions eval;
  auto* cmd_eval_p =
      app.add_subcommand("eval", "intrinsic and extrinsic evaluation");
  cmd_eval_p->add_option("--run", eval.run);
  cmd_eval_p->add_option("--qrels", eval.qrels);
  cmd_eval_p->add_option("--predictions", eval.predictions);
  cmd_eval_p->add_option("--topics", eval.topics);
  cmd_eval_p->add_option("--compare", eval.compare_run);
  cmd_eval_p->add_option("--out", eval.out);
  cmd_eval_p->add_option("--ndcg-cut", eval.ndcg_cut);
  cmd_eval_p->add_option("--depth", eval.depth);
  cmd_eval_p->add_option("--binarize", eval.binarize_at);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (cmd_label_p->parsed()) cmd_label(label);
    if (cmd_index_p->parsed()) cmd_index(index);
    if (cmd_resolve_p->parsed()) cmd_resolve(resolve);
    if (cmd_search_p->parsed()) cmd_search(search);
    if (cmd_rerank_p->parsed()) cmd_rerank(rerank);
    if (cmd_fuse_p->parsed()) cmd_fuse(fuse);
    if (cmd_train_p->parsed()) cmd_train(train);
    if (cmd_eval_p->parsed()) cmd_eval(eval);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace quretec::cli
