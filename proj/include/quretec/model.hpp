#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "quretec/query.hpp"
#include "quretec/supervision.hpp"
#include "quretec/text.hpp"
#include "quretec/topics.hpp"

namespace quretec::model {

struct EncoderConfig {
  int vocab_size = 0;  // 0: use every token seen when building the vocabulary
  int embed_dim = 128;
  int layers = 2;
  int heads = 4;
  int max_len = 256;
  double dropout_rate = 0.1;
  std::uint64_t seed = 17;

  int ffn_dim() const { return 4 * embed_dim; }
  void validate() const;  // embed_dim divisible by heads, dropout in [0,1)
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 4;
  double grad_clip_norm = 1.0;
  int patience = 3;       // epochs without dev-F1 improvement
  double threshold = 0.5; // term-decision probability cut
  int max_epochs = 50;
  double positive_weight = 1.0;  // optional positive-class loss weight

  void validate() const;
};

/// Whole-word vocabulary over lowercased surfaces, with reserved ids for
/// the unknown token and the two specials.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kCls = 1;
  static constexpr int kSep = 2;

  /// Frequency-sorted (ties lexicographic) vocabulary from training
  /// examples; max_size 0 keeps every token.
  static Vocabulary build(
      const std::vector<supervision::LabeledExample>& examples,
      int max_size = 0);
  /// Reconstruction from a checkpoint's token list (specials included).
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  int token_id(const text::Token& token) const;
  int id(const std::string& lowercased) const;  // kUnk when absent
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> lookup_;
};

/// Per-position binary cross entropy, averaged over masked-in positions;
/// probabilities are clamped to [1e-7, 1-1e-7]. Returns nothing when the
/// mask selects no position (the example then contributes no gradient).
std::optional<double> bce_loss(const std::vector<double>& probs,
                               const std::vector<std::uint8_t>& labels,
                               const std::vector<std::uint8_t>& mask);

/// The term-classification model: token + learned positional embeddings,
/// a stack of bidirectional self-attention blocks, and a sigmoid head
/// scoring every position. All parameters live in one flat double buffer;
/// training code and checkpoints address them through named blocks.
class ResolverModel {
 public:
  struct ParamBlock {
    std::string name;
    std::size_t offset = 0;
    int rows = 0;
    int cols = 0;
  };

  ResolverModel(EncoderConfig config, Vocabulary vocab);

  const EncoderConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }

  /// Bidirectional encoding: one embed_dim vector per position (eval mode,
  /// no dropout). Sequences longer than max_len are an input error.
  std::vector<std::vector<double>> encode(
      const supervision::LabeledExample& example) const;

  /// Sigmoid head output at every position (eval mode).
  std::vector<double> score_all(
      const supervision::LabeledExample& example) const;

  /// Probability per masked-in position; masked-out positions carry no
  /// score.
  std::map<std::size_t, double> score_terms(
      const supervision::LabeledExample& example) const;

  /// Terms whose probability reaches tau at any masked position, minus the
  /// current-turn term set. Turn 1 has no history and yields the empty set.
  std::set<text::Term> predict_terms(
      const Topic& topic, int turn_index, double tau,
      const text::Analyzer& analyzer = text::Analyzer::standard()) const;

  /// Max probability per history term, for prediction export.
  std::map<text::Term, double> predict_term_scores(
      const Topic& topic, int turn_index,
      const text::Analyzer& analyzer = text::Analyzer::standard()) const;

  /// Masked BCE loss of one example; gradient (d loss / d params) is
  /// accumulated into grad, which must have param_count() entries.
  /// dropout_rng enables training-mode dropout. Returns nothing when the
  /// example has no masked position.
  std::optional<double> loss_and_gradient(
      const supervision::LabeledExample& example, std::vector<double>& grad,
      double positive_weight = 1.0, std::mt19937_64* dropout_rng = nullptr);

  /// Loss only (eval mode unless dropout_rng given).
  std::optional<double> loss(const supervision::LabeledExample& example,
                             double positive_weight = 1.0) const;

  std::size_t param_count() const { return params_.size(); }
  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }

  /// Versioned JSON checkpoint: config + vocabulary + named flat parameter
  /// arrays with shapes and a content hash.
  void save(const std::filesystem::path& path) const;
  static ResolverModel load(const std::filesystem::path& path);

 private:
  struct Workspace;
  void forward(const std::vector<int>& ids, Workspace& ws, bool train_mode,
               std::mt19937_64* rng) const;
  std::vector<int> token_ids(const supervision::LabeledExample& ex) const;

  EncoderConfig config_;
  Vocabulary vocab_;
  std::vector<double> params_;
  std::vector<ParamBlock> blocks_;
  std::map<std::string, std::size_t> block_index_;
};

struct TrainResult {
  ResolverModel model;            // parameters of the best dev epoch
  std::vector<double> dev_f1_trace;  // micro-F1 after each epoch
  double best_dev_f1 = 0.0;
  int best_epoch = 0;  // 1-based
  int epochs_run = 0;
};

/// Adam training with gradient clipping, early stopping on dev micro-F1,
/// deterministic for a fixed seed. NaN loss aborts; an empty dev set is a
/// configuration error.
TrainResult train(const std::vector<supervision::LabeledExample>& train_set,
                  const std::vector<supervision::LabeledExample>& dev_set,
                  const EncoderConfig& model_config,
                  const TrainConfig& train_config);

/// Micro-F1 of a model over labeled examples at threshold tau (the
/// quantity early stopping optimizes).
double dev_micro_f1(ResolverModel& model,
                    const std::vector<supervision::LabeledExample>& dev_set,
                    double tau);

/// Gold term set of one labeled example (deduplicated positive positions).
std::set<text::Term> example_gold_terms(
    const supervision::LabeledExample& example);

/// Predicted term set of one labeled example at threshold tau.
std::set<text::Term> example_predicted_terms(
    const ResolverModel& model, const supervision::LabeledExample& example,
    double tau);

/// The resolved query: term multiset of the current turn plus each
/// expansion term once (append-only).
ResolvedQuery resolve(
    const std::string& current, const std::set<text::Term>& expansion,
    const text::Analyzer& analyzer = text::Analyzer::standard());

enum class OriginalVariant { Cur, CurPrev, CurFirst, All };

std::optional<OriginalVariant> parse_original_variant(const std::string& name);

/// The Original query construction baselines: current turn terms alone or
/// expanded with the previous turn, the first turn, or every turn so far.
ResolvedQuery baseline_original(
    OriginalVariant variant, const Topic& topic, int turn_index,
    const text::Analyzer& analyzer = text::Analyzer::standard());

}  // namespace quretec::model
