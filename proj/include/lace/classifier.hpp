#pragma once

#include <cstddef>
#include <set>
#include <vector>

#include "lace/init.hpp"
#include "lace/params.hpp"
#include "lace/tape.hpp"

namespace lace {

// Logits for r relations followed by the threshold class at index r.
struct PairScores {
  std::vector<double> logits;

  std::size_t threshold_index() const { return logits.size() - 1; }
  std::vector<double> probabilities() const;
};

struct ClassifierConfig {
  std::size_t bilinear_groups = 1;  // 1 = dense (d_B + r)^2 forms
  double layer_norm_eps = 1e-5;

  friend bool operator==(const ClassifierConfig&, const ClassifierConfig&) = default;
};

// Adds classifier.* parameters: layer-norm gain/bias for both sides and a
// (r + 1) x g x m x m stack of bilinear forms with g * m = d_B + r.
void init_classifier_params(ParamStore& store, const ClassifierConfig& config,
                            std::size_t num_relations, std::size_t entity_dim, Rng& rng);

// LayerNorm(E * relfeat^T): (N x d_B), (r x d_B) -> (N x r).
Var project(const Var& entities, const Var& relation_features, const Var& gain, const Var& bias,
            double eps);

// sigma-free logits (P x (r+1)) for stacked [E_s ; I_s] and [E_o ; I_o].
Var bilinear_score(const Var& subject, const Var& object, const Var& weights, const Var& bias);

// -log(1 - P(TH)) - sum_{c in gold} log P(c), in log-sigmoid form.
Var mat_loss_positive(const Var& logits, const std::set<std::size_t>& gold);
// -log softmax_TH over {TH} + non-gold relations.
Var mat_loss_negative(const Var& logits, const std::set<std::size_t>& gold);
// Throws ConfigError when alpha is outside [0, 1].
Var total_loss(const Var& positive, const Var& negative, double alpha);

// Adaptive thresholding loss with a joint softmax over {gold} + {TH} for
// the positive part; the negative part equals mat_loss_negative.
Var at_loss_positive(const Var& logits, const std::set<std::size_t>& gold);

enum class LossKind { Mat, AdaptiveThreshold };

// Per-pair objective. Mat: alpha * L+ + (1 - alpha) * L-.
// AdaptiveThreshold: at_loss_positive + mat_loss_negative (alpha unused).
Var pair_loss(const Var& logits, const std::set<std::size_t>& gold, LossKind kind, double alpha);

// Relations whose probability reaches (1 + theta) * P(TH). Empty = NA.
std::set<std::size_t> predict(const PairScores& scores, double theta);
// Relations whose logit exceeds the TH logit. AT-trained parameters only
// order logits relative to TH, so their decision uses this rule.
std::set<std::size_t> predict_above_threshold(const PairScores& scores);
// predict for Mat, predict_above_threshold (theta unused) otherwise.
std::set<std::size_t> decode_pair(const PairScores& scores, double theta, LossKind kind);

}  // namespace lace
