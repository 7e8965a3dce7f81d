#pragma once

#include <string>
#include <vector>

#include "quretec/model.hpp"

namespace quretec::cli {

struct LabelOptions {
  std::string topics;
  std::string mode = "gold";  // gold | distant
  std::string corpus;         // resolves relevant passage ids (distant mode)
  std::string out;
  int window = 50;
  int max_len = 256;
};

struct IndexOptions {
  std::string corpus;
  std::string out_dir;
};

struct ResolveOptions {
  std::string topics;
  std::string variant = "quretec";  // quretec | original:<v> | rm3:<v> | oracle
  std::string model_path;           // required for quretec
  std::string out;
  double tau = 0.5;
};

struct SearchOptions {
  std::string index_dir;
  std::string resolved;
  std::string out;
  int k = 1000;
  double mu = 2500.0;
  int rm3_n = 0;  // 0 disables RM3 expansion
  int rm3_k = 10;
  double rm3_lambda = 0.8;
  std::string tag = "quretec";
};

struct RerankOptions {
  std::string run;
  std::string resolved;
  std::string corpus;
  std::string out;
  std::string tag = "rerank";
};

struct FuseOptions {
  std::vector<std::string> runs;
  std::string out;
  double k = 60.0;
  std::string tag = "rrf";
};

struct TrainOptions {
  std::string train_labels;
  std::string dev_labels;
  std::string out;
  model::EncoderConfig encoder;
  model::TrainConfig trainer;
};

struct EvalOptions {
  std::string run;          // extrinsic: run + qrels
  std::string qrels;
  std::string predictions;  // intrinsic: predictions + topics
  std::string topics;
  std::string compare_run;  // optional second run for the paired t-test
  std::string out;          // JSON report
  int ndcg_cut = 3;
  int depth = 1000;
  int binarize_at = 1;
};

void cmd_label(const LabelOptions& options);
void cmd_index(const IndexOptions& options);
void cmd_resolve(const ResolveOptions& options);
void cmd_search(const SearchOptions& options);
void cmd_rerank(const RerankOptions& options);
void cmd_fuse(const FuseOptions& options);
void cmd_train(const TrainOptions& options);
void cmd_eval(const EvalOptions& options);

/// Full argv dispatch. Exit codes: 0 success, 1 input error, 2 internal
/// error.
int run(int argc, const char* const* argv);

}  // namespace quretec::cli
