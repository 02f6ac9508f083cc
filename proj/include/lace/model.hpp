#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lace/classifier.hpp"
#include "lace/correlation_graph.hpp"
#include "lace/docred.hpp"
#include "lace/encoder.hpp"
#include "lace/params.hpp"
#include "lace/propagation.hpp"

namespace lace {

struct ModelConfig {
  EncoderConfig encoder;
  PropagationConfig propagation;
  ClassifierConfig classifier;
  // false: relation features are a free r x d_B table (no graph, no GAT).
  bool use_correlation = true;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Encoder, relation correlation module and bilinear classifier over one
// parameter store.
class LaceModel {
 public:
  LaceModel(ModelConfig config, EncoderVocab vocab, CorrelationGraph graph, std::uint64_t seed);
  // Rebuilds a model around existing parameters (checkpoint load).
  LaceModel(ModelConfig config, EncoderVocab vocab, CorrelationGraph graph, ParamStore params);

  const ModelConfig& config() const { return config_; }
  const EncoderVocab& vocab() const { return vocab_; }
  const CorrelationGraph& graph() const { return graph_; }
  const RelationVocab& relations() const { return relations_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // r x d_B transformed relation features.
  Var relation_features(const BoundParams& bound) const;

  // (P x (r+1)) logits for the listed (subject, object) pairs.
  Var pair_logits(const Document& doc, std::span<const EntityPair> pairs, const BoundParams& bound,
                  const Var& relation_features) const;

  // Summed pair losses for one document. `gold` maps pairs to label sets;
  // pairs absent from it are NA.
  Var document_loss(const Document& doc, std::span<const EntityPair> pairs, const PairLabels& gold,
                    const BoundParams& bound, const Var& relation_features, LossKind loss,
                    double alpha) const;

  // Inference on every ordered pair (s != o), pairs in (s, o) order.
  std::vector<std::pair<EntityPair, PairScores>> score_document(const Document& doc) const;

 private:
  ModelConfig config_;
  EncoderVocab vocab_;
  CorrelationGraph graph_;
  RelationVocab relations_;
  ParamStore params_;
};

std::vector<EntityPair> all_pairs(const Document& doc);

}  // namespace lace
