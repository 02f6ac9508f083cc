#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <vector>

#include "lace/docred.hpp"

namespace lace {

// Generator for DocRED-shaped corpora with planted relation correlations.
// Tokens are "w0".."w<vocab_size-1>": the first `relations` are trigger
// words (one per relation), the next third of the rest are entity names and
// the remainder are fillers. Each document holds exactly one related pair
// whose sentence reads
//   fillers  head-name  trigger(s)  filler  tail-name  .
// plus distractor entities in trigger-free sentences. Relation codes are
// "R0".."R<relations-1>".
struct SyntheticConfig {
  std::size_t documents = 50;
  std::size_t relations = 6;
  std::size_t vocab_size = 100;
  std::uint64_t seed = 1;
  std::size_t distractors = 2;      // unrelated entities per document
  double multi_label_rate = 0.6;    // share of documents drawing a multi-relation template
  double trigger_dropout = 0.0;     // chance of omitting each trigger of a multi-relation set
  double second_mention_rate = 0.3; // chance the head entity is mentioned again
  std::size_t fillers = 3;          // filler tokens per sentence
};

// Singletons {i}, correlated pairs {2i, 2i+1} and the triple {0, 1, 2}.
std::vector<std::set<std::size_t>> planted_label_sets(std::size_t relations);

// Throws ConfigError when the vocabulary cannot host triggers, names and
// fillers for the requested shape.
Corpus generate_synthetic(const SyntheticConfig& config);

}  // namespace lace
