#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lace/classifier.hpp"
#include "lace/correlation_graph.hpp"
#include "lace/docred.hpp"
#include "lace/model.hpp"

namespace lace {

struct TrainConfig {
  std::uint64_t seed = 1;
  std::size_t epochs = 30;
  std::size_t batch_size = 4;  // documents per update
  double lr_encoder = 1e-3;    // encoder.* parameters
  double lr_head = 1e-3;       // everything else
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 1.0;  // global gradient norm; 0 disables clipping
  double negative_rate = 0.25;  // fraction of NA pairs kept per document
  double alpha = 0.4;
  double theta = 0.85;
  LossKind loss = LossKind::Mat;
  bool lowercase = true;
  GraphParams graph;
  ModelConfig model;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Small dimensions for synthetic corpora and tests:
// d_w 16, d_t 4, d_h 16, d_rel = d_head = 16, 2 layers x 2 heads.
TrainConfig desk_scale_config();

// Throws ConfigError naming the first offending field.
void validate(const TrainConfig& config);

nlohmann::ordered_json to_json(const TrainConfig& config);
// Keys present in `j` override `base`; unknown keys are a ConfigError.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});

std::string loss_kind_name(LossKind kind);
LossKind parse_loss_kind(const std::string& name);
std::string gat_mode_name(GatMode mode);
GatMode parse_gat_mode(const std::string& name);

// Adam with bias correction. One learning rate per parameter.
class Adam {
 public:
  Adam(double beta1, double beta2, double eps);
  void step(std::vector<Parameter>& params, const std::vector<Tensor>& grads,
            const std::vector<double>& learning_rates);
  std::size_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

// Scales `grads` in place so their joint L2 norm is at most max_norm.
// Returns the norm before scaling.
double clip_global_norm(std::vector<Tensor>& grads, double max_norm);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;  // mean over the sampled pairs of the epoch
  std::size_t pairs = 0;
  std::optional<double> dev_f1;
};

struct TrainOptions {
  const Corpus* dev = nullptr;  // scored after every epoch when set
  std::optional<std::filesystem::path> embeddings;
  std::function<void(const EpochStats&)> on_epoch;
};

struct TrainResult {
  LaceModel model;
  std::vector<EpochStats> trace;
};

// The graph's relation codes define the label vocabulary; a corpus fact
// outside it is a ConfigError.
TrainResult train(const Corpus& corpus, const CorrelationGraph& graph, const TrainConfig& config,
                  const TrainOptions& options = {});

// "epoch,mean_loss,dev_f1" with an empty dev_f1 column when absent.
std::string loss_trace_csv(const std::vector<EpochStats>& trace);

}  // namespace lace
