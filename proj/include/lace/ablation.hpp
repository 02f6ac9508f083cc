#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lace/evaluation.hpp"
#include "lace/train.hpp"

namespace lace {

enum class AblationSwitch { NoCorrelationModule, AtLossInsteadOfMat, MaskOnlyGat };

// "no-correlation-module", "at-loss-instead-of-mat", "mask-only-gat".
AblationSwitch parse_ablation_switch(const std::string& name);
std::string ablation_switch_name(AblationSwitch s);
TrainConfig apply_switch(TrainConfig config, AblationSwitch s);

struct AblationRow {
  std::string variant;  // "baseline" or the switch name
  Metrics metrics;
  std::optional<SplitScore> two_rel;
  std::optional<SplitScore> three_rel;
  std::optional<SplitScore> overall_multi;
};

// Baseline plus one row per switch, all trained from the same seed on
// `train_corpus` and scored on `eval_corpus`.
std::vector<AblationRow> run_ablation(const Corpus& train_corpus, const Corpus& eval_corpus,
                                      const CorrelationGraph& graph, const TrainConfig& config,
                                      const std::vector<AblationSwitch>& switches);

// Fixed-width table with deltas against the baseline row.
std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace lace
