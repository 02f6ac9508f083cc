#include "lace/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "lace/errors.hpp"
#include "lace/evaluation.hpp"
#include "lace/ops.hpp"

namespace lace {

using nlohmann::json;
using nlohmann::ordered_json;

TrainConfig desk_scale_config() {
  TrainConfig c;
  c.model.encoder.word_dim = 16;
  c.model.encoder.type_dim = 4;
  c.model.encoder.hidden_dim = 16;
  c.model.propagation.relation_dim = 16;
  c.model.propagation.head_dim = 16;
  return c;
}

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw ConfigError("config '" + field + "': " + what);
}

void require_positive(const std::string& field, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) bad(field, "must be positive, got " + std::to_string(v));
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.batch_size == 0) bad("batch_size", "must be >= 1");
  require_positive("lr_encoder", c.lr_encoder);
  require_positive("lr_head", c.lr_head);
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0)) bad("beta1", "must lie in [0, 1)");
  if (!(c.beta2 >= 0.0 && c.beta2 < 1.0)) bad("beta2", "must lie in [0, 1)");
  require_positive("adam_eps", c.adam_eps);
  if (!(c.clip_norm >= 0.0)) bad("clip_norm", "must be >= 0");
  if (!(c.negative_rate > 0.0 && c.negative_rate <= 1.0)) bad("negative_rate", "must lie in (0, 1]");
  if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) bad("alpha", "must lie in [0, 1]");
  if (!(c.theta >= 0.0)) bad("theta", "must be >= 0");
  if (c.graph.tau < 0) bad("tau", "must be >= 0");
  if (!(c.graph.delta > 0.0 && c.graph.delta <= 1.0)) bad("delta", "must lie in (0, 1]");
  if (!(c.graph.p > 0.0 && c.graph.p < 1.0)) bad("p", "must lie in (0, 1)");
  const auto& e = c.model.encoder;
  if (e.word_dim == 0) bad("word_dim", "must be >= 1");
  if (e.type_dim == 0) bad("type_dim", "must be >= 1");
  if (e.hidden_dim == 0) bad("hidden_dim", "must be >= 1");
  if (e.layers == 0) bad("lstm_layers", "must be >= 1");
  const auto& p = c.model.propagation;
  if (p.relation_dim == 0) bad("relation_dim", "must be >= 1");
  if (p.layers > 0 && p.heads == 0) bad("gat_heads", "must be >= 1");
  if (p.layers > 0 && p.head_dim == 0) bad("head_dim", "must be >= 1");
  if (!(p.leaky_slope >= 0.0)) bad("leaky_slope", "must be >= 0");
  if (c.model.classifier.bilinear_groups == 0) bad("bilinear_groups", "must be >= 1");
  require_positive("layer_norm_eps", c.model.classifier.layer_norm_eps);
}

std::string loss_kind_name(LossKind kind) { return kind == LossKind::Mat ? "mat" : "at"; }

LossKind parse_loss_kind(const std::string& name) {
  if (name == "mat") return LossKind::Mat;
  if (name == "at") return LossKind::AdaptiveThreshold;
  throw ConfigError("unknown loss '" + name + "' (expected mat or at)");
}

std::string gat_mode_name(GatMode mode) {
  return mode == GatMode::Reweighted ? "reweighted" : "mask-only";
}

GatMode parse_gat_mode(const std::string& name) {
  if (name == "reweighted") return GatMode::Reweighted;
  if (name == "mask-only") return GatMode::MaskOnly;
  throw ConfigError("unknown GAT mode '" + name + "' (expected reweighted or mask-only)");
}

ordered_json to_json(const TrainConfig& c) {
  const auto& e = c.model.encoder;
  const auto& p = c.model.propagation;
  ordered_json j;
  j["seed"] = c.seed;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["lr_encoder"] = c.lr_encoder;
  j["lr_head"] = c.lr_head;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["adam_eps"] = c.adam_eps;
  j["clip_norm"] = c.clip_norm;
  j["negative_rate"] = c.negative_rate;
  j["alpha"] = c.alpha;
  j["theta"] = c.theta;
  j["loss"] = loss_kind_name(c.loss);
  j["lowercase"] = c.lowercase;
  j["tau"] = c.graph.tau;
  j["delta"] = c.graph.delta;
  j["p"] = c.graph.p;
  j["word_dim"] = e.word_dim;
  j["type_dim"] = e.type_dim;
  j["hidden_dim"] = e.hidden_dim;
  j["lstm_layers"] = e.layers;
  j["relation_dim"] = p.relation_dim;
  j["gat_layers"] = p.layers;
  j["gat_heads"] = p.heads;
  j["head_dim"] = p.head_dim;
  j["leaky_slope"] = p.leaky_slope;
  j["gat_mode"] = gat_mode_name(p.mode);
  j["use_correlation"] = c.model.use_correlation;
  j["bilinear_groups"] = c.model.classifier.bilinear_groups;
  j["layer_norm_eps"] = c.model.classifier.layer_norm_eps;
  return j;
}

TrainConfig config_from_json(const json& j, TrainConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  auto& e = c.model.encoder;
  auto& p = c.model.propagation;
  using Setter = std::function<void(const json&)>;
  // nlohmann converts silently between number kinds; a config must not.
  auto count = [](const json& v) -> std::uint64_t {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      throw ConfigError("expected a non-negative integer, got " + v.dump());
    return v.get<std::uint64_t>();
  };
  auto integer = [](const json& v) -> std::int64_t {
    if (!v.is_number_integer()) throw ConfigError("expected an integer, got " + v.dump());
    return v.get<std::int64_t>();
  };
  auto real = [](const json& v) -> double {
    if (!v.is_number()) throw ConfigError("expected a number, got " + v.dump());
    return v.get<double>();
  };
  const std::map<std::string, Setter> setters = {
      {"seed", [&](const json& v) { c.seed = count(v); }},
      {"epochs", [&](const json& v) { c.epochs = count(v); }},
      {"batch_size", [&](const json& v) { c.batch_size = count(v); }},
      {"lr_encoder", [&](const json& v) { c.lr_encoder = real(v); }},
      {"lr_head", [&](const json& v) { c.lr_head = real(v); }},
      {"beta1", [&](const json& v) { c.beta1 = real(v); }},
      {"beta2", [&](const json& v) { c.beta2 = real(v); }},
      {"adam_eps", [&](const json& v) { c.adam_eps = real(v); }},
      {"clip_norm", [&](const json& v) { c.clip_norm = real(v); }},
      {"negative_rate", [&](const json& v) { c.negative_rate = real(v); }},
      {"alpha", [&](const json& v) { c.alpha = real(v); }},
      {"theta", [&](const json& v) { c.theta = real(v); }},
      {"loss", [&](const json& v) { c.loss = parse_loss_kind(v.get<std::string>()); }},
      {"lowercase", [&](const json& v) { c.lowercase = v.get<bool>(); }},
      {"tau", [&](const json& v) { c.graph.tau = integer(v); }},
      {"delta", [&](const json& v) { c.graph.delta = real(v); }},
      {"p", [&](const json& v) { c.graph.p = real(v); }},
      {"word_dim", [&](const json& v) { e.word_dim = count(v); }},
      {"type_dim", [&](const json& v) { e.type_dim = count(v); }},
      {"hidden_dim", [&](const json& v) { e.hidden_dim = count(v); }},
      {"lstm_layers", [&](const json& v) { e.layers = count(v); }},
      {"relation_dim", [&](const json& v) { p.relation_dim = count(v); }},
      {"gat_layers", [&](const json& v) { p.layers = count(v); }},
      {"gat_heads", [&](const json& v) { p.heads = count(v); }},
      {"head_dim", [&](const json& v) { p.head_dim = count(v); }},
      {"leaky_slope", [&](const json& v) { p.leaky_slope = real(v); }},
      {"gat_mode", [&](const json& v) { p.mode = parse_gat_mode(v.get<std::string>()); }},
      {"use_correlation", [&](const json& v) { c.model.use_correlation = v.get<bool>(); }},
      {"bilinear_groups",
       [&](const json& v) { c.model.classifier.bilinear_groups = count(v); }},
      {"layer_norm_eps",
       [&](const json& v) { c.model.classifier.layer_norm_eps = real(v); }},
  };
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& ex) {
      throw ConfigError("config '" + key + "': " + ex.what());
    } catch (const ConfigError& ex) {
      throw ConfigError("config '" + key + "': " + ex.what());
    }
  }
  return c;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& ex) {
    throw ParseError("config " + path.string() + ": " + ex.what());
  }
  return config_from_json(j, std::move(base));
}

Adam::Adam(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(std::vector<Parameter>& params, const std::vector<Tensor>& grads,
                const std::vector<double>& learning_rates) {
  if (grads.size() != params.size() || learning_rates.size() != params.size()) {
    throw ContractError("Adam::step: parameter, gradient and rate counts differ");
  }
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Tensor::zeros_like(p.value));
      v_.push_back(Tensor::zeros_like(p.value));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto w = params[k].value.data();
    const auto g = grads[k].data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    const double lr = learning_rates[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

double clip_global_norm(std::vector<Tensor>& grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (double v : g.data()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (Tensor& g : grads)
      for (double& v : g.data()) v *= s;
  }
  return norm;
}

TrainResult train(const Corpus& corpus, const CorrelationGraph& graph, const TrainConfig& config,
                  const TrainOptions& options) {
  validate(config);
  const RelationVocab relations(graph.relations);
  std::vector<PairLabels> gold;
  gold.reserve(corpus.documents.size());
  for (const Document& doc : corpus.documents) {
    if (!doc.has_labels) throw ConfigError("training document '" + doc.title + "' has no labels");
    for (const RelationFact& f : doc.facts) {
      if (!relations.find(f.relation)) {
        throw ConfigError("relation '" + f.relation + "' in document '" + doc.title +
                          "' is not in the correlation graph");
      }
    }
    gold.push_back(entity_pair_labels(doc, relations));
  }

  LaceModel model(config.model, EncoderVocab::build(corpus, config.lowercase), graph, config.seed);
  if (options.embeddings) {
    load_word_embeddings(*options.embeddings, model.vocab(), model.params().get("encoder.word_emb"));
  }

  std::vector<double> rates;
  for (const auto& p : model.params().items()) {
    rates.push_back(p.name.starts_with("encoder.") ? config.lr_encoder : config.lr_head);
  }

  // Separate stream from parameter initialisation.
  Rng rng(config.seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  std::bernoulli_distribution keep_negative(config.negative_rate);
  Adam adam(config.beta1, config.beta2, config.adam_eps);
  std::vector<std::size_t> order(corpus.documents.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochStats> trace;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t pair_count = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      Tape tape;
      const BoundParams bound(tape, model.params());
      const Var relfeat = model.relation_features(bound);
      std::vector<Var> doc_losses;
      std::size_t batch_pairs = 0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t d = order[k];
        const Document& doc = corpus.documents[d];
        std::vector<EntityPair> pairs;
        for (const EntityPair& pair : all_pairs(doc)) {
          if (gold[d].count(pair) || keep_negative(rng)) pairs.push_back(pair);
        }
        if (pairs.empty()) continue;
        doc_losses.push_back(
            model.document_loss(doc, pairs, gold[d], bound, relfeat, config.loss, config.alpha));
        batch_pairs += pairs.size();
      }
      if (batch_pairs == 0) continue;
      const Var total = ops::sum(ops::stack_rows(doc_losses));
      tape.backward(ops::scale(total, 1.0 / static_cast<double>(batch_pairs)));
      loss_sum += total.value().item();
      pair_count += batch_pairs;

      std::vector<Tensor> grads;
      grads.reserve(bound.leaves().size());
      for (const Var& leaf : bound.leaves()) grads.push_back(leaf.grad());
      clip_global_norm(grads, config.clip_norm);
      adam.step(model.params().items(), grads, rates);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.pairs = pair_count;
    stats.mean_loss = pair_count ? loss_sum / static_cast<double>(pair_count) : 0.0;
    if (options.dev) {
      stats.dev_f1 = evaluate(predict_corpus(model, *options.dev, config.theta, config.loss), *options.dev).f1;
    }
    if (options.on_epoch) options.on_epoch(stats);
    trace.push_back(stats);
  }
  return {std::move(model), std::move(trace)};
}

std::string loss_trace_csv(const std::vector<EpochStats>& trace) {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,mean_loss,dev_f1\n";
  for (const auto& s : trace) {
    os << s.epoch << ',' << s.mean_loss << ',';
    if (s.dev_f1) os << *s.dev_f1;
    os << '\n';
  }
  return os.str();
}

}  // namespace lace
