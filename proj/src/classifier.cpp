#include "lace/classifier.hpp"

#include "lace/errors.hpp"
#include "lace/ops.hpp"

namespace lace {
namespace {

void require_logit_row(const Var& logits, const std::set<std::size_t>& gold) {
  if (logits.value().rank() != 2 || logits.rows() != 1 || logits.cols() < 1) {
    throw ShapeError("expected a 1 x (r+1) logit row, got " + shape_str(logits.shape()));
  }
  const std::size_t th = logits.cols() - 1;
  for (std::size_t c : gold) {
    if (c >= th) throw ShapeError("gold relation " + std::to_string(c) + " outside 0.." + std::to_string(th - 1));
  }
}

}  // namespace

std::vector<double> PairScores::probabilities() const {
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) p[i] = sigmoid(logits[i]);
  return p;
}

void init_classifier_params(ParamStore& store, const ClassifierConfig& config,
                            std::size_t num_relations, std::size_t entity_dim, Rng& rng) {
  const std::size_t n = entity_dim + num_relations;
  const std::size_t g = config.bilinear_groups;
  if (g == 0 || n % g != 0) {
    throw ConfigError("bilinear groups " + std::to_string(g) + " must divide d_B + r = " +
                      std::to_string(n));
  }
  const std::size_t m = n / g;
  store.add("classifier.ln_s.gain", Tensor({1, num_relations}, 1.0));
  store.add("classifier.ln_s.bias", Tensor({1, num_relations}));
  store.add("classifier.ln_o.gain", Tensor({1, num_relations}, 1.0));
  store.add("classifier.ln_o.bias", Tensor({1, num_relations}));
  store.add("classifier.W", glorot_uniform({num_relations + 1, g, m, m}, n, n, rng));
  store.add("classifier.b", Tensor({1, num_relations + 1}));
}

Var project(const Var& entities, const Var& relation_features, const Var& gain, const Var& bias,
            double eps) {
  if (entities.cols() != relation_features.cols()) {
    throw ShapeError("project: entity width " + std::to_string(entities.cols()) +
                     " vs relation feature width " + std::to_string(relation_features.cols()));
  }
  return ops::layer_norm(ops::matmul(entities, ops::transpose(relation_features)), gain, bias, eps);
}

Var bilinear_score(const Var& subject, const Var& object, const Var& weights, const Var& bias) {
  return ops::bilinear(subject, weights, object, bias);
}

Var mat_loss_positive(const Var& logits, const std::set<std::size_t>& gold) {
  require_logit_row(logits, gold);
  const std::size_t th = logits.cols() - 1;
  const std::size_t th_idx[] = {th};
  // -log(1 - sigma(x)) = -log_sigmoid(-x)
  Var loss = ops::neg(ops::log_sigmoid(ops::neg(ops::select_cols(logits, th_idx))));
  if (!gold.empty()) {
    const std::vector<std::size_t> idx(gold.begin(), gold.end());
    loss = ops::sub(loss, ops::sum(ops::log_sigmoid(ops::select_cols(logits, idx))));
  }
  return loss;
}

Var mat_loss_negative(const Var& logits, const std::set<std::size_t>& gold) {
  require_logit_row(logits, gold);
  const std::size_t th = logits.cols() - 1;
  std::vector<std::size_t> idx;
  for (std::size_t c = 0; c < th; ++c) {
    if (!gold.count(c)) idx.push_back(c);
  }
  idx.push_back(th);
  const std::size_t th_idx[] = {th};
  return ops::sub(ops::logsumexp(ops::select_cols(logits, idx)),
                  ops::select_cols(logits, th_idx));
}

Var total_loss(const Var& positive, const Var& negative, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  return ops::add(ops::scale(positive, alpha), ops::scale(negative, 1.0 - alpha));
}

Var at_loss_positive(const Var& logits, const std::set<std::size_t>& gold) {
  require_logit_row(logits, gold);
  const std::size_t th = logits.cols() - 1;
  if (gold.empty()) return logits.tape().constant(Tensor::scalar(0.0));
  std::vector<std::size_t> idx(gold.begin(), gold.end());
  idx.push_back(th);
  const Var support = ops::select_cols(logits, idx);
  const Var lse = ops::logsumexp(support);
  // sum over gold of (lse - logit_c)
  const Var gold_logits = ops::slice_cols(support, 0, gold.size());
  return ops::sub(ops::scale(lse, static_cast<double>(gold.size())), ops::sum(gold_logits));
}

Var pair_loss(const Var& logits, const std::set<std::size_t>& gold, LossKind kind, double alpha) {
  if (kind == LossKind::AdaptiveThreshold) {
    return ops::add(at_loss_positive(logits, gold), mat_loss_negative(logits, gold));
  }
  return total_loss(mat_loss_positive(logits, gold), mat_loss_negative(logits, gold), alpha);
}

std::set<std::size_t> predict(const PairScores& scores, double theta) {
  if (theta < 0.0) throw ConfigError("theta must be >= 0, got " + std::to_string(theta));
  const auto probs = scores.probabilities();
  const std::size_t th = scores.threshold_index();
  const double cut = (1.0 + theta) * probs[th];
  std::set<std::size_t> out;
  for (std::size_t c = 0; c < th; ++c) {
    if (probs[c] >= cut) out.insert(c);
  }
  return out;
}

std::set<std::size_t> predict_above_threshold(const PairScores& scores) {
  const std::size_t th = scores.threshold_index();
  std::set<std::size_t> out;
  for (std::size_t c = 0; c < th; ++c) {
    if (scores.logits[c] > scores.logits[th]) out.insert(c);
  }
  return out;
}

std::set<std::size_t> decode_pair(const PairScores& scores, double theta, LossKind kind) {
  return kind == LossKind::Mat ? predict(scores, theta) : predict_above_threshold(scores);
}

}  // namespace lace
