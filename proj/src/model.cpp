#include "lace/model.hpp"

#include "lace/errors.hpp"
#include "lace/ops.hpp"

namespace lace {

std::vector<EntityPair> all_pairs(const Document& doc) {
  std::vector<EntityPair> pairs;
  const std::size_t n = doc.entities.size();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t o = 0; o < n; ++o)
      if (s != o) pairs.emplace_back(s, o);
  return pairs;
}

LaceModel::LaceModel(ModelConfig config, EncoderVocab vocab, CorrelationGraph graph,
                     std::uint64_t seed)
    : config_(std::move(config)),
      vocab_(std::move(vocab)),
      graph_(std::move(graph)),
      relations_(graph_.relations) {
  if (graph_.size() == 0) throw ConfigError("model needs at least one relation type");
  Rng rng(seed);
  const std::size_t d_b = config_.encoder.output_dim();
  init_encoder_params(params_, config_.encoder, vocab_, rng);
  if (config_.use_correlation) {
    init_propagation_params(params_, config_.propagation, graph_.size(), d_b, rng);
  } else {
    params_.add("relation.features", truncated_normal({graph_.size(), d_b}, 0.02, rng));
  }
  init_classifier_params(params_, config_.classifier, graph_.size(), d_b, rng);
}

LaceModel::LaceModel(ModelConfig config, EncoderVocab vocab, CorrelationGraph graph,
                     ParamStore params)
    : config_(std::move(config)),
      vocab_(std::move(vocab)),
      graph_(std::move(graph)),
      relations_(graph_.relations),
      params_(std::move(params)) {}

Var LaceModel::relation_features(const BoundParams& bound) const {
  const Var table = bound["relation.features"];
  if (!config_.use_correlation) return table;
  return propagate(table, graph_.reweighted, config_.propagation, bound);
}

Var LaceModel::pair_logits(const Document& doc, std::span<const EntityPair> pairs,
                           const BoundParams& bound, const Var& relation_features) const {
  const double eps = config_.classifier.layer_norm_eps;
  const Var entities = encode_entities(doc, vocab_, config_.encoder, bound);
  const Var subj_proj = project(entities, relation_features, bound["classifier.ln_s.gain"],
                                bound["classifier.ln_s.bias"], eps);
  const Var obj_proj = project(entities, relation_features, bound["classifier.ln_o.gain"],
                               bound["classifier.ln_o.bias"], eps);
  const Var subj_parts[] = {entities, subj_proj};
  const Var obj_parts[] = {entities, obj_proj};
  const Var subj_all = ops::concat_cols(subj_parts);
  const Var obj_all = ops::concat_cols(obj_parts);

  std::vector<std::size_t> heads, tails;
  heads.reserve(pairs.size());
  tails.reserve(pairs.size());
  for (const auto& [s, o] : pairs) {
    if (s >= doc.entities.size() || o >= doc.entities.size() || s == o) {
      throw ValidationError("document '" + doc.title + "': invalid pair (" + std::to_string(s) +
                            ", " + std::to_string(o) + ")");
    }
    heads.push_back(s);
    tails.push_back(o);
  }
  return bilinear_score(ops::gather_rows(subj_all, heads), ops::gather_rows(obj_all, tails),
                        bound["classifier.W"], bound["classifier.b"]);
}

Var LaceModel::document_loss(const Document& doc, std::span<const EntityPair> pairs,
                             const PairLabels& gold, const BoundParams& bound,
                             const Var& relation_features, LossKind loss, double alpha) const {
  const Var logits = pair_logits(doc, pairs, bound, relation_features);
  static const std::set<std::size_t> kNone;
  std::vector<Var> losses;
  losses.reserve(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    auto it = gold.find(pairs[p]);
    losses.push_back(
        pair_loss(ops::slice_rows(logits, p, 1), it == gold.end() ? kNone : it->second, loss, alpha));
  }
  return ops::sum(ops::stack_rows(losses));
}

std::vector<std::pair<EntityPair, PairScores>> LaceModel::score_document(const Document& doc) const {
  std::vector<std::pair<EntityPair, PairScores>> out;
  const auto pairs = all_pairs(doc);
  if (pairs.empty()) return out;
  Tape tape;
  const BoundParams bound(tape, params_, false);
  const Var logits = pair_logits(doc, pairs, bound, relation_features(bound));
  const Tensor& l = logits.value();
  out.reserve(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    PairScores scores;
    scores.logits.assign(l.data().begin() + static_cast<std::ptrdiff_t>(p * l.cols()),
                         l.data().begin() + static_cast<std::ptrdiff_t>((p + 1) * l.cols()));
    out.emplace_back(pairs[p], std::move(scores));
  }
  return out;
}

}  // namespace lace
