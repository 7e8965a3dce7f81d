#include "quretec/model.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <json.hpp>

#include "quretec/common.hpp"

namespace quretec::model {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;
using supervision::LabeledExample;
using text::Term;
using text::Token;
using text::TokenOrigin;

namespace {

constexpr int kCheckpointVersion = 1;
constexpr double kLayerNormEps = 1e-5;
constexpr double kInitStd = 0.02;

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

double uniform01(std::mt19937_64& rng) {
  // 53-bit mantissa draw; avoids implementation-defined distributions so
  // results are identical across platforms
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
}

double softplus(double x) {
  return std::log1p(std::exp(-std::fabs(x))) + std::max(x, 0.0);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
}

double gelu_grad(double x) {
  constexpr double kInvSqrt2Pi = 0.3989422804014326779;
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) +
         x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

Eigen::Map<MatrixXd> view(std::vector<double>& buf, std::size_t offset,
                          int rows, int cols) {
  return Eigen::Map<MatrixXd>(buf.data() + offset, rows, cols);
}

Eigen::Map<const MatrixXd> view(const std::vector<double>& buf,
                                std::size_t offset, int rows, int cols) {
  return Eigen::Map<const MatrixXd>(buf.data() + offset, rows, cols);
}

}  // namespace

void EncoderConfig::validate() const {
  if (embed_dim <= 0 || layers < 0 || heads <= 0 || max_len < 3)
    throw InputError("encoder config: dimensions must be positive");
  if (embed_dim % heads != 0)
    throw InputError("encoder config: embed_dim must be divisible by heads");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw InputError("encoder config: dropout_rate must be in [0,1)");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw InputError("train config: batch_size must be >= 1");
  if (!(grad_clip_norm > 0.0))
    throw InputError("train config: grad_clip_norm must be > 0");
  if (!(threshold > 0.0) || !(threshold < 1.0))
    throw InputError("train config: threshold must be in (0,1)");
  if (patience < 0) throw InputError("train config: patience must be >= 0");
  if (max_epochs < 1) throw InputError("train config: max_epochs must be >= 1");
  if (!(learning_rate > 0.0))
    throw InputError("train config: learning_rate must be > 0");
  if (!(positive_weight > 0.0))
    throw InputError("train config: positive_weight must be > 0");
}

Vocabulary Vocabulary::build(const std::vector<LabeledExample>& examples,
                             int max_size) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& ex : examples)
    for (const auto& tok : ex.sequence)
      if (tok.origin != TokenOrigin::Special) ++counts[lower_ascii(tok.raw)];

  std::vector<std::pair<std::string, std::int64_t>> ordered(counts.begin(),
                                                            counts.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  if (max_size > 3 && static_cast<int>(ordered.size()) > max_size - 3)
    ordered.resize(static_cast<size_t>(max_size - 3));

  std::vector<std::string> tokens{"<UNK>", supervision::kClsToken,
                                  supervision::kSepToken};
  for (auto& [tok, _] : ordered) tokens.push_back(std::move(tok));
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 3 || tokens[0] != "<UNK>" ||
      tokens[1] != supervision::kClsToken ||
      tokens[2] != supervision::kSepToken)
    throw InputError("vocabulary must start with <UNK>, <CLS>, <SEP>");
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  for (size_t i = 0; i < v.tokens_.size(); ++i)
    v.lookup_[v.tokens_[i]] = static_cast<int>(i);
  return v;
}

int Vocabulary::id(const std::string& lowercased) const {
  auto it = lookup_.find(lowercased);
  return it == lookup_.end() ? kUnk : it->second;
}

int Vocabulary::token_id(const Token& token) const {
  if (token.origin == TokenOrigin::Special)
    return token.raw == supervision::kClsToken ? kCls : kSep;
  return id(lower_ascii(token.raw));
}

std::optional<double> bce_loss(const std::vector<double>& probs,
                               const std::vector<std::uint8_t>& labels,
                               const std::vector<std::uint8_t>& mask) {
  if (labels.size() != mask.size())
    throw InputError("bce_loss: labels/mask lengths disagree");
  double sum = 0.0;
  int count = 0;
  for (size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    if (i >= probs.size())
      throw InputError("bce_loss: no probability at masked position");
    double p = std::clamp(probs[i], 1e-7, 1.0 - 1e-7);
    sum += labels[i] ? -std::log(p) : -std::log1p(-p);
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// ResolverModel
// ---------------------------------------------------------------------------

ResolverModel::ResolverModel(EncoderConfig config, Vocabulary vocab)
    : config_(config), vocab_(std::move(vocab)) {
  config_.vocab_size = vocab_.size();
  config_.validate();

  const int d = config_.embed_dim;
  const int f = config_.ffn_dim();
  std::size_t offset = 0;
  auto add = [&](const std::string& name, int rows, int cols) {
    blocks_.push_back({name, offset, rows, cols});
    block_index_[name] = blocks_.size() - 1;
    offset += static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  };
  add("tok_emb", d, vocab_.size());
  add("pos_emb", d, config_.max_len);
  for (int l = 0; l < config_.layers; ++l) {
    std::string p = "layer" + std::to_string(l) + ".";
    add(p + "wq", d, d);
    add(p + "bq", d, 1);
    add(p + "wk", d, d);
    add(p + "bk", d, 1);
    add(p + "wv", d, d);
    add(p + "bv", d, 1);
    add(p + "wo", d, d);
    add(p + "bo", d, 1);
    add(p + "ln1_g", d, 1);
    add(p + "ln1_b", d, 1);
    add(p + "w1", f, d);
    add(p + "b1", f, 1);
    add(p + "w2", d, f);
    add(p + "b2", d, 1);
    add(p + "ln2_g", d, 1);
    add(p + "ln2_b", d, 1);
  }
  add("head_w", d, 1);
  add("head_b", 1, 1);
  params_.assign(offset, 0.0);

  std::mt19937_64 rng(config_.seed);
  for (const auto& block : blocks_) {
    auto m = view(params_, block.offset, block.rows, block.cols);
    bool is_gamma = block.name.find("ln1_g") != std::string::npos ||
                    block.name.find("ln2_g") != std::string::npos;
    bool is_bias = block.cols == 1 && !is_gamma &&
                   block.name.find("head_w") == std::string::npos;
    if (is_gamma) {
      m.setOnes();
    } else if (is_bias) {
      m.setZero();
    } else {
      for (int c = 0; c < block.cols; ++c)
        for (int r = 0; r < block.rows; ++r) m(r, c) = kInitStd * normal(rng);
    }
  }
}

std::vector<int> ResolverModel::token_ids(const LabeledExample& ex) const {
  if (static_cast<int>(ex.sequence.size()) > config_.max_len)
    throw InputError("sequence of length " +
                     std::to_string(ex.sequence.size()) + " exceeds max_len " +
                     std::to_string(config_.max_len));
  std::vector<int> ids;
  ids.reserve(ex.sequence.size());
  for (const auto& tok : ex.sequence) ids.push_back(vocab_.token_id(tok));
  return ids;
}

struct ResolverModel::Workspace {
  struct Layer {
    MatrixXd x_in, q, k, v, c, a_drop_mask;
    std::vector<MatrixXd> attn;  // per head, n x n rows = query positions
    MatrixXd z1, x1hat, x1;
    VectorXd inv_sigma1;
    MatrixXd h1, g, f_drop_mask;
    MatrixXd z2, x2hat, x2;
    VectorXd inv_sigma2;
  };
  std::vector<int> ids;
  MatrixXd x0;
  std::vector<Layer> layers;
  MatrixXd head_in, head_drop_mask;
  VectorXd logits;
};

void ResolverModel::forward(const std::vector<int>& ids, Workspace& ws,
                            bool train_mode, std::mt19937_64* rng) const {
  const int d = config_.embed_dim;
  const int n = static_cast<int>(ids.size());
  const int heads = config_.heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const double p_drop = config_.dropout_rate;
  const bool dropout = train_mode && rng != nullptr && p_drop > 0.0;

  auto tok_emb = view(params_, blocks_[block_index_.at("tok_emb")].offset, d,
                      vocab_.size());
  auto pos_emb = view(params_, blocks_[block_index_.at("pos_emb")].offset, d,
                      config_.max_len);

  auto draw_mask = [&](MatrixXd& mask, int rows, int cols) {
    mask.resize(rows, cols);
    if (!dropout) {
      mask.setOnes();
      return;
    }
    const double keep_scale = 1.0 / (1.0 - p_drop);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r)
        mask(r, c) = uniform01(*rng) < p_drop ? 0.0 : keep_scale;
  };

  ws.ids = ids;
  ws.x0.resize(d, n);
  for (int i = 0; i < n; ++i)
    ws.x0.col(i) = tok_emb.col(ids[static_cast<size_t>(i)]) + pos_emb.col(i);

  auto layer_norm = [&](const MatrixXd& z, const VectorXd& gamma,
                        const VectorXd& beta, MatrixXd& zhat,
                        VectorXd& inv_sigma, MatrixXd& out) {
    zhat.resize(d, z.cols());
    out.resize(d, z.cols());
    inv_sigma.resize(z.cols());
    for (int c = 0; c < z.cols(); ++c) {
      double mean = z.col(c).mean();
      VectorXd centered = z.col(c).array() - mean;
      double var = centered.squaredNorm() / static_cast<double>(d);
      double inv = 1.0 / std::sqrt(var + kLayerNormEps);
      inv_sigma(c) = inv;
      zhat.col(c) = centered * inv;
      out.col(c) = zhat.col(c).cwiseProduct(gamma) + beta;
    }
  };

  MatrixXd x = ws.x0;
  ws.layers.assign(static_cast<size_t>(config_.layers), {});
  for (int l = 0; l < config_.layers; ++l) {
    auto& lw = ws.layers[static_cast<size_t>(l)];
    std::string p = "layer" + std::to_string(l) + ".";
    auto block = [&](const std::string& name) {
      const auto& b = blocks_[block_index_.at(p + name)];
      return view(params_, b.offset, b.rows, b.cols);
    };
    lw.x_in = x;
    lw.q = (block("wq") * x).colwise() + VectorXd(block("bq").col(0));
    lw.k = (block("wk") * x).colwise() + VectorXd(block("bk").col(0));
    lw.v = (block("wv") * x).colwise() + VectorXd(block("bv").col(0));

    lw.attn.assign(static_cast<size_t>(heads), MatrixXd());
    lw.c.resize(d, n);
    for (int h = 0; h < heads; ++h) {
      auto qh = lw.q.middleRows(h * dh, dh);
      auto kh = lw.k.middleRows(h * dh, dh);
      auto vh = lw.v.middleRows(h * dh, dh);
      MatrixXd scores = (qh.transpose() * kh) * scale;  // n x n
      MatrixXd& probs = lw.attn[static_cast<size_t>(h)];
      probs.resize(n, n);
      for (int i = 0; i < n; ++i) {
        double mx = scores.row(i).maxCoeff();
        VectorXd e = (scores.row(i).array() - mx).exp();
        probs.row(i) = e.transpose() / e.sum();
      }
      lw.c.middleRows(h * dh, dh) = vh * probs.transpose();
    }

    MatrixXd a = (block("wo") * lw.c).colwise() + VectorXd(block("bo").col(0));
    draw_mask(lw.a_drop_mask, d, n);
    lw.z1 = lw.x_in + a.cwiseProduct(lw.a_drop_mask);
    layer_norm(lw.z1, VectorXd(block("ln1_g").col(0)),
               VectorXd(block("ln1_b").col(0)), lw.x1hat, lw.inv_sigma1,
               lw.x1);

    lw.h1 = (block("w1") * lw.x1).colwise() + VectorXd(block("b1").col(0));
    lw.g = lw.h1.unaryExpr([](double v) { return gelu(v); });
    MatrixXd f =
        (block("w2") * lw.g).colwise() + VectorXd(block("b2").col(0));
    draw_mask(lw.f_drop_mask, d, n);
    lw.z2 = lw.x1 + f.cwiseProduct(lw.f_drop_mask);
    layer_norm(lw.z2, VectorXd(block("ln2_g").col(0)),
               VectorXd(block("ln2_b").col(0)), lw.x2hat, lw.inv_sigma2,
               lw.x2);
    x = lw.x2;
  }

  draw_mask(ws.head_drop_mask, d, n);
  ws.head_in = x.cwiseProduct(ws.head_drop_mask);
  auto head_w = view(params_, blocks_[block_index_.at("head_w")].offset, d, 1);
  double head_b = params_[blocks_[block_index_.at("head_b")].offset];
  ws.logits = (head_w.col(0).transpose() * ws.head_in).transpose();
  ws.logits.array() += head_b;
}

std::vector<std::vector<double>> ResolverModel::encode(
    const LabeledExample& example) const {
  Workspace ws;
  forward(token_ids(example), ws, false, nullptr);
  const MatrixXd& x =
      config_.layers > 0 ? ws.layers.back().x2 : ws.x0;
  std::vector<std::vector<double>> out;
  for (int i = 0; i < x.cols(); ++i) {
    out.emplace_back(x.col(i).data(), x.col(i).data() + x.rows());
  }
  return out;
}

std::vector<double> ResolverModel::score_all(
    const LabeledExample& example) const {
  Workspace ws;
  forward(token_ids(example), ws, false, nullptr);
  std::vector<double> probs(static_cast<size_t>(ws.logits.size()));
  for (int i = 0; i < ws.logits.size(); ++i) probs[static_cast<size_t>(i)] = sigmoid(ws.logits(i));
  return probs;
}

std::map<std::size_t, double> ResolverModel::score_terms(
    const LabeledExample& example) const {
  auto probs = score_all(example);
  std::map<std::size_t, double> out;
  for (size_t i = 0; i < example.mask.size(); ++i)
    if (example.mask[i]) out[i] = probs[i];
  return out;
}

std::optional<double> ResolverModel::loss_and_gradient(
    const LabeledExample& example, std::vector<double>& grad,
    double positive_weight, std::mt19937_64* dropout_rng) {
  if (grad.size() != params_.size())
    throw InputError("gradient buffer size mismatch");

  Workspace ws;
  forward(token_ids(example), ws, dropout_rng != nullptr, dropout_rng);

  const int d = config_.embed_dim;
  const int n = static_cast<int>(ws.ids.size());
  const int heads = config_.heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  int masked = 0;
  for (size_t i = 0; i < example.mask.size(); ++i) masked += example.mask[i];
  if (masked == 0) return std::nullopt;

  // loss from logits (numerically stable form of the clamped-prob BCE)
  double loss_sum = 0.0;
  VectorXd dlogits = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (!example.mask[static_cast<size_t>(i)]) continue;
    double z = ws.logits(i);
    double y = example.labels[static_cast<size_t>(i)];
    double w = y > 0.5 ? positive_weight : 1.0;
    loss_sum += w * (softplus(-z) + (1.0 - y) * z);
    double p = sigmoid(z);
    dlogits(i) = w * (p - y) / static_cast<double>(masked);
  }
  double loss = loss_sum / static_cast<double>(masked);

  auto gblock = [&](const std::string& name) {
    const auto& b = blocks_[block_index_.at(name)];
    return view(grad, b.offset, b.rows, b.cols);
  };
  auto pblock = [&](const std::string& name) {
    const auto& b = blocks_[block_index_.at(name)];
    return view(params_, b.offset, b.rows, b.cols);
  };

  // head
  gblock("head_w").col(0) += ws.head_in * dlogits;
  gblock("head_b")(0, 0) += dlogits.sum();
  auto head_w = pblock("head_w");
  MatrixXd dx = (head_w.col(0) * dlogits.transpose()).cwiseProduct(
      ws.head_drop_mask);  // d x n

  auto layer_norm_backward =
      [&](const MatrixXd& dout, const MatrixXd& zhat, const VectorXd& inv_sigma,
          const VectorXd& gamma, Eigen::Map<MatrixXd> dgamma,
          Eigen::Map<MatrixXd> dbeta, MatrixXd& dz) {
        dz.resize(d, dout.cols());
        for (int c = 0; c < dout.cols(); ++c) {
          dgamma.col(0) += dout.col(c).cwiseProduct(zhat.col(c));
          dbeta.col(0) += dout.col(c);
          VectorXd dxhat = dout.col(c).cwiseProduct(gamma);
          double mean_dxhat = dxhat.mean();
          double mean_dxhat_xhat =
              dxhat.cwiseProduct(zhat.col(c)).mean();
          dz.col(c) = inv_sigma(c) *
                      (dxhat.array() - mean_dxhat -
                       zhat.col(c).array() * mean_dxhat_xhat)
                          .matrix();
        }
      };

  for (int l = config_.layers - 1; l >= 0; --l) {
    auto& lw = ws.layers[static_cast<size_t>(l)];
    std::string p = "layer" + std::to_string(l) + ".";

    // LN2
    MatrixXd dz2;
    layer_norm_backward(dx, lw.x2hat, lw.inv_sigma2,
                        VectorXd(pblock(p + "ln2_g").col(0)),
                        gblock(p + "ln2_g"), gblock(p + "ln2_b"), dz2);

    // FFN branch: z2 = x1 + dropout(w2 * gelu(w1 * x1 + b1) + b2)
    MatrixXd df = dz2.cwiseProduct(lw.f_drop_mask);
    gblock(p + "w2") += df * lw.g.transpose();
    gblock(p + "b2").col(0) += df.rowwise().sum();
    MatrixXd dg = pblock(p + "w2").transpose() * df;
    MatrixXd dh1 =
        dg.cwiseProduct(lw.h1.unaryExpr([](double v) { return gelu_grad(v); }));
    gblock(p + "w1") += dh1 * lw.x1.transpose();
    gblock(p + "b1").col(0) += dh1.rowwise().sum();
    MatrixXd dx1 = pblock(p + "w1").transpose() * dh1 + dz2;  // + residual

    // LN1
    MatrixXd dz1;
    layer_norm_backward(dx1, lw.x1hat, lw.inv_sigma1,
                        VectorXd(pblock(p + "ln1_g").col(0)),
                        gblock(p + "ln1_g"), gblock(p + "ln1_b"), dz1);

    // attention branch: z1 = x_in + dropout(wo * C + bo)
    MatrixXd da = dz1.cwiseProduct(lw.a_drop_mask);
    gblock(p + "wo") += da * lw.c.transpose();
    gblock(p + "bo").col(0) += da.rowwise().sum();
    MatrixXd dc = pblock(p + "wo").transpose() * da;

    MatrixXd dq = MatrixXd::Zero(d, n);
    MatrixXd dk = MatrixXd::Zero(d, n);
    MatrixXd dv = MatrixXd::Zero(d, n);
    for (int h = 0; h < heads; ++h) {
      auto dch = dc.middleRows(h * dh, dh);
      auto qh = lw.q.middleRows(h * dh, dh);
      auto kh = lw.k.middleRows(h * dh, dh);
      auto vh = lw.v.middleRows(h * dh, dh);
      const MatrixXd& probs = lw.attn[static_cast<size_t>(h)];

      dv.middleRows(h * dh, dh) = dch * probs;
      MatrixXd dprobs = dch.transpose() * vh;  // n x n
      MatrixXd dscores(n, n);
      for (int i = 0; i < n; ++i) {
        double dot = dprobs.row(i).dot(probs.row(i));
        dscores.row(i) =
            (probs.row(i).array() * (dprobs.row(i).array() - dot)).matrix();
      }
      dq.middleRows(h * dh, dh) = kh * dscores.transpose() * scale;
      dk.middleRows(h * dh, dh) = qh * dscores * scale;
    }

    gblock(p + "wq") += dq * lw.x_in.transpose();
    gblock(p + "bq").col(0) += dq.rowwise().sum();
    gblock(p + "wk") += dk * lw.x_in.transpose();
    gblock(p + "bk").col(0) += dk.rowwise().sum();
    gblock(p + "wv") += dv * lw.x_in.transpose();
    gblock(p + "bv").col(0) += dv.rowwise().sum();

    dx = pblock(p + "wq").transpose() * dq + pblock(p + "wk").transpose() * dk +
         pblock(p + "wv").transpose() * dv + dz1;  // + residual into x_in
  }

  auto dtok = gblock("tok_emb");
  auto dpos = gblock("pos_emb");
  for (int i = 0; i < n; ++i) {
    dtok.col(ws.ids[static_cast<size_t>(i)]) += dx.col(i);
    dpos.col(i) += dx.col(i);
  }
  return loss;
}

std::optional<double> ResolverModel::loss(const LabeledExample& example,
                                          double positive_weight) const {
  Workspace ws;
  forward(token_ids(example), ws, false, nullptr);
  int masked = 0;
  double loss_sum = 0.0;
  for (size_t i = 0; i < example.mask.size(); ++i) {
    if (!example.mask[i]) continue;
    ++masked;
    double z = ws.logits(static_cast<int>(i));
    double y = example.labels[i];
    double w = y > 0.5 ? positive_weight : 1.0;
    loss_sum += w * (softplus(-z) + (1.0 - y) * z);
  }
  if (masked == 0) return std::nullopt;
  return loss_sum / static_cast<double>(masked);
}

std::set<Term> example_gold_terms(const LabeledExample& example) {
  std::set<Term> out;
  for (size_t i = 0; i < example.labels.size(); ++i)
    if (example.labels[i] && example.sequence[i].term)
      out.insert(*example.sequence[i].term);
  return out;
}

std::set<Term> example_predicted_terms(const ResolverModel& model,
                                       const LabeledExample& example,
                                       double tau) {
  auto probs = model.score_all(example);
  std::set<Term> current;
  for (const auto& tok : example.sequence)
    if (tok.origin == TokenOrigin::Current && tok.term)
      current.insert(*tok.term);
  std::set<Term> out;
  for (size_t i = 0; i < example.mask.size(); ++i) {
    if (!example.mask[i] || probs[i] < tau) continue;
    const auto& term = *example.sequence[i].term;
    if (!current.count(term)) out.insert(term);
  }
  return out;
}

std::set<Term> ResolverModel::predict_terms(const Topic& topic, int turn_index,
                                            double tau,
                                            const text::Analyzer& analyzer) const {
  if (turn_index == 1) return {};
  auto ex = supervision::build_example(topic, turn_index, {}, config_.max_len,
                                       analyzer);
  if (!ex) return {};
  return example_predicted_terms(*this, *ex, tau);
}

std::map<Term, double> ResolverModel::predict_term_scores(
    const Topic& topic, int turn_index, const text::Analyzer& analyzer) const {
  std::map<Term, double> out;
  if (turn_index == 1) return out;
  auto ex = supervision::build_example(topic, turn_index, {}, config_.max_len,
                                       analyzer);
  if (!ex) return out;
  auto probs = score_all(*ex);
  for (size_t i = 0; i < ex->mask.size(); ++i) {
    if (!ex->mask[i]) continue;
    const auto& term = *ex->sequence[i].term;
    auto it = out.find(term);
    if (it == out.end() || probs[i] > it->second) out[term] = probs[i];
  }
  return out;
}

void ResolverModel::save(const std::filesystem::path& path) const {
  json params = json::array();
  for (const auto& block : blocks_) {
    json entry;
    entry["name"] = block.name;
    entry["shape"] = {block.rows, block.cols};
    std::vector<double> values(
        params_.begin() + static_cast<std::ptrdiff_t>(block.offset),
        params_.begin() + static_cast<std::ptrdiff_t>(
                              block.offset + static_cast<std::size_t>(
                                                 block.rows) *
                                                 static_cast<std::size_t>(
                                                     block.cols)));
    entry["values"] = std::move(values);
    params.push_back(std::move(entry));
  }
  std::string params_dump = params.dump();

  json j;
  j["format_version"] = kCheckpointVersion;
  j["type"] = "quretec-resolver";
  j["config"] = {{"vocab_size", config_.vocab_size},
                 {"embed_dim", config_.embed_dim},
                 {"layers", config_.layers},
                 {"heads", config_.heads},
                 {"max_len", config_.max_len},
                 {"dropout_rate", config_.dropout_rate},
                 {"seed", config_.seed}};
  j["vocab"] = vocab_.tokens();
  j["params"] = std::move(params);
  j["content_hash"] = fnv1a64_hex(params_dump);
  write_file_atomic(path, j.dump() + "\n");
}

ResolverModel ResolverModel::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw InputError("bad checkpoint: " + std::string(e.what()));
  }
  if (j.value("format_version", -1) != kCheckpointVersion ||
      j.value("type", "") != "quretec-resolver")
    throw InputError("unsupported checkpoint format in " + path.string());

  EncoderConfig config;
  const auto& jc = j.at("config");
  config.vocab_size = jc.at("vocab_size").get<int>();
  config.embed_dim = jc.at("embed_dim").get<int>();
  config.layers = jc.at("layers").get<int>();
  config.heads = jc.at("heads").get<int>();
  config.max_len = jc.at("max_len").get<int>();
  config.dropout_rate = jc.at("dropout_rate").get<double>();
  config.seed = jc.at("seed").get<std::uint64_t>();

  auto vocab =
      Vocabulary::from_tokens(j.at("vocab").get<std::vector<std::string>>());
  ResolverModel model(config, std::move(vocab));

  if (j.value("content_hash", "") != fnv1a64_hex(j.at("params").dump()))
    throw InputError("checkpoint content hash mismatch in " + path.string());

  const auto& params = j.at("params");
  if (params.size() != model.blocks_.size())
    throw InputError("checkpoint parameter blocks do not match the config");
  for (size_t b = 0; b < model.blocks_.size(); ++b) {
    const auto& block = model.blocks_[b];
    const auto& entry = params[b];
    if (entry.at("name").get<std::string>() != block.name ||
        entry.at("shape")[0].get<int>() != block.rows ||
        entry.at("shape")[1].get<int>() != block.cols)
      throw InputError("checkpoint block " + block.name +
                       " has unexpected name or shape");
    auto values = entry.at("values").get<std::vector<double>>();
    if (values.size() !=
        static_cast<std::size_t>(block.rows) * static_cast<std::size_t>(block.cols))
      throw InputError("checkpoint block " + block.name + " has wrong size");
    std::copy(values.begin(), values.end(),
              model.params_.begin() + static_cast<std::ptrdiff_t>(block.offset));
  }
  return model;
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

double dev_micro_f1(ResolverModel& model,
                    const std::vector<LabeledExample>& dev_set, double tau) {
  double f1_sum = 0.0;
  for (const auto& ex : dev_set) {
    auto pred = example_predicted_terms(model, ex, tau);
    auto gold = example_gold_terms(ex);
    size_t hits = 0;
    for (const auto& t : pred) hits += gold.count(t);
    double p = pred.empty() ? 1.0
                            : static_cast<double>(hits) /
                                  static_cast<double>(pred.size());
    double r = gold.empty() ? 1.0
                            : static_cast<double>(hits) /
                                  static_cast<double>(gold.size());
    f1_sum += (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  return dev_set.empty() ? 0.0 : f1_sum / static_cast<double>(dev_set.size());
}

namespace {

// Fisher-Yates with explicit draws; std::shuffle is implementation-defined
// and would break cross-platform determinism.
void deterministic_shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[rng() % i]);
}

}  // namespace

TrainResult train(const std::vector<LabeledExample>& train_set,
                  const std::vector<LabeledExample>& dev_set,
                  const EncoderConfig& model_config,
                  const TrainConfig& train_config) {
  if (train_set.empty()) throw InputError("training set is empty");
  if (dev_set.empty())
    throw InputError("dev set is empty; early stopping needs gold labels");
  train_config.validate();

  auto vocab = Vocabulary::build(train_set, model_config.vocab_size);
  ResolverModel model(model_config, std::move(vocab));

  const std::size_t n_params = model.param_count();
  std::vector<double> grad(n_params, 0.0);
  std::vector<double> m(n_params, 0.0), v(n_params, 0.0);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::int64_t step = 0;

  std::mt19937_64 order_rng(model_config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 dropout_rng(model_config.seed ^ 0x5851f42d4c957f2dULL);

  TrainResult result{model, {}, -1.0, 0, 0};
  std::vector<double> best_params = model.parameters();

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    deterministic_shuffle(order, order_rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(train_config.batch_size)) {
      std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(train_config.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      int contributing = 0;
      for (std::size_t i = start; i < end; ++i) {
        auto loss = model.loss_and_gradient(train_set[order[i]], grad,
                                            train_config.positive_weight,
                                            &dropout_rng);
        if (!loss) continue;  // no masked positions: contributes no gradient
        if (!std::isfinite(*loss))
          throw std::runtime_error(
              "NaN/inf loss at epoch " + std::to_string(epoch) +
              ", example " + train_set[order[i]].topic_id + ":" +
              std::to_string(train_set[order[i]].turn_index));
        ++contributing;
      }
      if (contributing == 0) continue;
      double inv = 1.0 / static_cast<double>(contributing);
      for (auto& g : grad) g *= inv;

      double norm_sq = 0.0;
      for (double g : grad) norm_sq += g * g;
      double norm = std::sqrt(norm_sq);
      if (norm > train_config.grad_clip_norm) {
        double scale = train_config.grad_clip_norm / norm;
        for (auto& g : grad) g *= scale;
      }

      ++step;
      double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      auto& params = model.parameters();
      for (std::size_t i = 0; i < n_params; ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
        params[i] -= train_config.learning_rate * (m[i] / bc1) /
                     (std::sqrt(v[i] / bc2) + kEps);
      }
    }

    double f1 = dev_micro_f1(model, dev_set, train_config.threshold);
    result.dev_f1_trace.push_back(f1);
    result.epochs_run = epoch;
    if (f1 > result.best_dev_f1) {
      result.best_dev_f1 = f1;
      result.best_epoch = epoch;
      best_params = model.parameters();
    }
    if (epoch - result.best_epoch >= train_config.patience) break;
  }

  result.model = std::move(model);
  result.model.parameters() = std::move(best_params);
  return result;
}

// ---------------------------------------------------------------------------
// resolved queries and baselines
// ---------------------------------------------------------------------------

ResolvedQuery resolve(const std::string& current,
                      const std::set<Term>& expansion,
                      const text::Analyzer& analyzer) {
  ResolvedQuery out;
  for (const auto& tok : analyzer.tokenize(current))
    if (tok.term) out.weights[*tok.term] += 1.0;
  for (const auto& term : expansion) out.weights[term] += 1.0;
  return out;
}

std::optional<OriginalVariant> parse_original_variant(const std::string& name) {
  if (name == "cur") return OriginalVariant::Cur;
  if (name == "cur+prev") return OriginalVariant::CurPrev;
  if (name == "cur+first") return OriginalVariant::CurFirst;
  if (name == "all") return OriginalVariant::All;
  return std::nullopt;
}

ResolvedQuery baseline_original(OriginalVariant variant, const Topic& topic,
                                int turn_index,
                                const text::Analyzer& analyzer) {
  const Turn& current = topic.turn(turn_index);
  std::set<Term> current_terms = analyzer.term_set(current.query);

  std::set<Term> expansion;
  auto add_turn = [&](int j) {
    for (const auto& t : analyzer.term_set(topic.turn(j).query))
      if (!current_terms.count(t)) expansion.insert(t);
  };
  switch (variant) {
    case OriginalVariant::Cur:
      break;
    case OriginalVariant::CurPrev:
      if (turn_index >= 2) add_turn(turn_index - 1);
      break;
    case OriginalVariant::CurFirst:
      if (turn_index >= 2) add_turn(1);
      break;
    case OriginalVariant::All:
      for (int j = 1; j < turn_index; ++j) add_turn(j);
      break;
  }
  return resolve(current.query, expansion, analyzer);
}

}  // namespace quretec::model
