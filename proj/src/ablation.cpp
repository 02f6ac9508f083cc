#include "lace/ablation.hpp"

#include <cstdio>
#include <sstream>

#include "lace/errors.hpp"

namespace lace {

AblationSwitch parse_ablation_switch(const std::string& name) {
  if (name == "no-correlation-module") return AblationSwitch::NoCorrelationModule;
  if (name == "at-loss-instead-of-mat") return AblationSwitch::AtLossInsteadOfMat;
  if (name == "mask-only-gat") return AblationSwitch::MaskOnlyGat;
  throw ConfigError("unknown ablation switch '" + name +
                    "' (expected no-correlation-module, at-loss-instead-of-mat or mask-only-gat)");
}

std::string ablation_switch_name(AblationSwitch s) {
  switch (s) {
    case AblationSwitch::NoCorrelationModule:
      return "no-correlation-module";
    case AblationSwitch::AtLossInsteadOfMat:
      return "at-loss-instead-of-mat";
    case AblationSwitch::MaskOnlyGat:
      return "mask-only-gat";
  }
  return "?";
}

TrainConfig apply_switch(TrainConfig config, AblationSwitch s) {
  switch (s) {
    case AblationSwitch::NoCorrelationModule:
      config.model.use_correlation = false;
      break;
    case AblationSwitch::AtLossInsteadOfMat:
      config.loss = LossKind::AdaptiveThreshold;
      break;
    case AblationSwitch::MaskOnlyGat:
      config.model.propagation.mode = GatMode::MaskOnly;
      break;
  }
  return config;
}

namespace {

AblationRow score_variant(std::string name, const Corpus& train_corpus, const Corpus& eval_corpus,
                          const CorrelationGraph& graph, const TrainConfig& config) {
  const TrainResult trained = train(train_corpus, graph, config);
  const auto preds = predict_corpus(trained.model, eval_corpus, config.theta, config.loss);
  AblationRow row;
  row.variant = std::move(name);
  row.metrics = evaluate(preds, eval_corpus, &train_corpus);
  row.two_rel = multi_label_f1(preds, eval_corpus, 2);
  row.three_rel = multi_label_f1(preds, eval_corpus, 3);
  row.overall_multi = overall_multi_label_f1(preds, eval_corpus);
  return row;
}

std::string cell(const std::optional<SplitScore>& s) {
  if (!s) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", s->f1);
  return buf;
}

std::string delta(double v, double base) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.4f", v - base);
  return buf;
}

}  // namespace

std::vector<AblationRow> run_ablation(const Corpus& train_corpus, const Corpus& eval_corpus,
                                      const CorrelationGraph& graph, const TrainConfig& config,
                                      const std::vector<AblationSwitch>& switches) {
  std::vector<AblationRow> rows;
  rows.push_back(score_variant("baseline", train_corpus, eval_corpus, graph, config));
  for (AblationSwitch s : switches) {
    rows.push_back(score_variant(ablation_switch_name(s), train_corpus, eval_corpus, graph,
                                 apply_switch(config, s)));
  }
  return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %8s %8s %8s %8s %8s %9s %9s\n", "variant", "F1", "IgnF1",
                "2-Rel", "3-Rel", "Overall", "dF1", "dOverall");
  os << line;
  if (rows.empty()) return os.str();
  const AblationRow& base = rows.front();
  const double base_overall = base.overall_multi ? base.overall_multi->f1 : 0.0;
  for (const auto& r : rows) {
    const double overall = r.overall_multi ? r.overall_multi->f1 : 0.0;
    std::snprintf(line, sizeof line, "%-24s %8.4f %8.4f %8s %8s %8s %9s %9s\n", r.variant.c_str(),
                  r.metrics.f1, r.metrics.ign_f1, cell(r.two_rel).c_str(), cell(r.three_rel).c_str(),
                  cell(r.overall_multi).c_str(), delta(r.metrics.f1, base.metrics.f1).c_str(),
                  delta(overall, base_overall).c_str());
    os << line;
  }
  return os.str();
}

}  // namespace lace
