#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lace/docred.hpp"
#include "lace/model.hpp"

namespace lace {

struct PredictedFact {
  std::string title;
  std::size_t head = 0;
  std::size_t tail = 0;
  std::string relation;
  double score = 0.0;  // sigmoid probability of the relation

  friend bool operator==(const PredictedFact&, const PredictedFact&) = default;
};

// Document order, then (head, tail), then relation index. `loss` selects the
// decision rule matching the training objective (see decode_pair).
std::vector<PredictedFact> predict_corpus(const LaceModel& model, const Corpus& corpus, double theta,
                                          LossKind loss = LossKind::Mat);

// Raw per-pair scores for a corpus so several thetas can be decoded cheaply.
struct ScoredPair {
  std::size_t document = 0;
  EntityPair pair;
  PairScores scores;
};
std::vector<ScoredPair> score_corpus(const LaceModel& model, const Corpus& corpus);
std::vector<PredictedFact> decode(const std::vector<ScoredPair>& scored, const Corpus& corpus,
                                  const RelationVocab& relations, double theta,
                                  LossKind loss = LossKind::Mat);

// [{"title", "h_idx", "t_idx", "r", "score"}, ...]; submission mode drops
// "score".
std::string predictions_to_json(const std::vector<PredictedFact>& facts, bool submission = false);
std::vector<PredictedFact> predictions_from_json(const std::string& text);
void write_predictions(const std::vector<PredictedFact>& facts, const std::filesystem::path& path,
                       bool submission = false);
std::vector<PredictedFact> read_predictions(const std::filesystem::path& path);

struct Metrics {
  std::size_t predicted = 0;  // distinct predicted tuples
  std::size_t gold = 0;
  std::size_t correct = 0;
  std::size_t correct_in_train = 0;  // correct tuples whose fact is a training fact
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ign_precision = 0.0;
  double ign_f1 = 0.0;
};

// Micro P/R/F1 over (title, head, tail, relation) tuples. 0/0 is 0.
// Ign F1 follows the official DocRED scorer: a correct prediction counts as
// seen in training when any (head mention name, tail mention name, relation)
// triple of it is a training fact; such predictions are dropped from both
// numerator and denominator of precision, recall is unchanged.
// Throws ValidationError for titles absent from `gold`.
Metrics evaluate(const std::vector<PredictedFact>& predictions, const Corpus& gold,
                 const Corpus* train = nullptr);

struct SplitScore {
  std::size_t pairs = 0;  // gold pairs in the split
  std::size_t predicted = 0;
  std::size_t gold = 0;
  std::size_t correct = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// F1 restricted to entity pairs whose gold label set has exactly k
// relations; absent when no such pair exists.
std::optional<SplitScore> multi_label_f1(const std::vector<PredictedFact>& predictions,
                                         const Corpus& gold, std::size_t k);
// Same restricted to pairs with two or more gold relations.
std::optional<SplitScore> overall_multi_label_f1(const std::vector<PredictedFact>& predictions,
                                                 const Corpus& gold);

struct ThetaPoint {
  double theta = 0.0;
  Metrics metrics;
};
std::vector<ThetaPoint> theta_sweep(const LaceModel& model, const Corpus& labeled, double start,
                                    double stop, double step, const Corpus* train = nullptr);

}  // namespace lace
