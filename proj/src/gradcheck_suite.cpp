#include "lace/gradcheck_suite.hpp"

#include <chrono>
#include <random>

#include "lace/encoder.hpp"
#include "lace/model.hpp"
#include "lace/ops.hpp"
#include "lace/propagation.hpp"
#include "lace/synthetic.hpp"

namespace lace {
namespace {

Tensor uniform(Shape shape, Rng& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

Var weighted_sum(const Var& x, const Tensor& w) { return ops::sum(ops::mul_const(x, w)); }

template <class F>
GradCheckReport timed(std::string name, F&& run) {
  const auto start = std::chrono::steady_clock::now();
  GradCheckResult r = run();
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
  return {std::move(name), r, dt.count()};
}

GradCheckResult lstm_cell_check(Rng& rng) {
  const std::size_t d = 3, h = 4;
  std::vector<Tensor> p{uniform({1, d}, rng, -1, 1),     uniform({1, h}, rng, -1, 1),
                        uniform({1, h}, rng, -1, 1),     uniform({d, 4 * h}, rng, -1, 1),
                        uniform({h, 4 * h}, rng, -1, 1), uniform({1, 4 * h}, rng, -1, 1)};
  const Tensor wh = uniform({1, h}, rng, -1, 1), wc = uniform({1, h}, rng, -1, 1);
  return grad_check(
      [&](Tape&, std::span<const Var> v) {
        const auto [hn, cn] = lstm_cell(v[0], v[1], v[2], {v[3], v[4], v[5]});
        return ops::add(weighted_sum(hn, wh), weighted_sum(cn, wc));
      },
      p);
}

GradCheckResult bilstm_check(Rng& rng) {
  EncoderConfig cfg;
  cfg.word_dim = 2;
  cfg.type_dim = 1;
  cfg.hidden_dim = 4;
  cfg.layers = 2;
  ParamStore store;
  init_encoder_params(store, cfg, EncoderVocab::build(Corpus{}), rng);
  std::vector<Tensor> p;
  for (const auto& item : store.items()) {
    p.push_back(item.name.find("lstm") != std::string::npos
                    ? uniform(item.value.shape(), rng, -1, 1)
                    : item.value);
  }
  p.push_back(uniform({4, 3}, rng, -1, 1));
  const Tensor w = uniform({4, 8}, rng, -1, 1);
  return grad_check(
      [&](Tape&, std::span<const Var> v) {
        const BoundParams bound(store, std::vector<Var>(v.begin(), v.end() - 1));
        return weighted_sum(bilstm_encode(v.back(), cfg, bound), w);
      },
      p);
}

GradCheckResult gat_check(Rng& rng) {
  const std::size_t n = 4, d_in = 5, d_head = 3;
  BinaryMatrix b(n);
  for (std::size_t i = 0; i < n; ++i) b(i, i) = 1;
  b(0, 1) = b(0, 2) = b(1, 2) = b(2, 0) = b(3, 1) = 1;
  const ProbMatrix r = reweight(b, 0.3);
  // Wide attention vectors so scores fall on both sides of the LeakyReLU
  // kink; otherwise the source half has an exactly-zero gradient.
  std::vector<Tensor> p{uniform({n, d_in}, rng, -1, 1), uniform({d_in, d_head}, rng, -1, 1),
                        uniform({1, 2 * d_head}, rng, -3, 3), uniform({d_in, d_head}, rng, -1, 1),
                        uniform({1, 2 * d_head}, rng, -3, 3)};
  const Tensor w = uniform({n, 2 * d_head}, rng, -1, 1);
  return grad_check(
      [&](Tape&, std::span<const Var> v) {
        GatLayer layer;
        layer.heads = {{v[1], v[2]}, {v[3], v[4]}};
        layer.combine = HeadCombine::Concat;
        layer.apply_elu = true;
        return weighted_sum(gat_layer(v[0], r, layer, 0.2, GatMode::Reweighted), w);
      },
      p);
}

// The ELU output feeding a GAT layer has a common-mode component, so
// a . z_j often has one sign for every node and each row's scores sit on
// one side of the LeakyReLU kink. The source half of `.a` then has an
// exactly-zero gradient, which central differences report as roundoff
// noise. Projecting the mean of z out of both halves centres the scores.
void center_attention(LaceModel& model, const PropagationConfig& cfg) {
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    Tape tape;
    const BoundParams bound(tape, model.params(), false);
    const auto stack = bind_gat_stack(cfg, bound);
    Var h = bound["relation.features"];
    for (std::size_t k = 0; k < l; ++k)
      h = gat_layer(h, model.graph().reweighted, stack[k], cfg.leaky_slope, cfg.mode);
    for (std::size_t hd = 0; hd < cfg.heads; ++hd) {
      const Tensor z = ops::matmul(h, stack[l].heads[hd].weight).value();
      const std::size_t n = z.rows(), d = z.cols();
      std::vector<double> mean(d, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) mean[c] += z[i * d + c] / static_cast<double>(n);
      double mm = 0.0;
      for (double v : mean) mm += v * v;
      if (mm == 0.0) continue;
      Tensor& a = model.params().get("relation.gat" + std::to_string(l) + ".head" +
                                     std::to_string(hd) + ".a");
      for (std::size_t half = 0; half < 2; ++half) {
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += a[half * d + c] * mean[c];
        for (std::size_t c = 0; c < d; ++c) a[half * d + c] -= dot / mm * mean[c];
      }
    }
  }
}

GradCheckResult model_check(std::uint64_t seed, Rng& rng) {
  SyntheticConfig sc;
  sc.documents = 2;
  sc.relations = 6;
  sc.vocab_size = 24;
  sc.distractors = 1;
  sc.fillers = 2;
  sc.multi_label_rate = 1.0;
  sc.second_mention_rate = 1.0;
  sc.seed = seed;
  Corpus corpus = generate_synthetic(sc);
  // Overlapping neighbourhoods of different sizes. A graph row whose
  // attention scores all sit on one side of the LeakyReLU kink gives the
  // source half of `.a` an exactly-zero gradient, which central differences
  // report as roundoff noise; several mixed rows make that unlikely.
  const std::vector<std::vector<std::size_t>> labels{{0, 1, 2}, {2, 3, 4, 5}};
  for (std::size_t d = 0; d < 2; ++d) {
    corpus.documents[d].facts.clear();
    for (std::size_t r : labels[d])
      corpus.documents[d].facts.push_back({0, 1, "R" + std::to_string(r), {}});
  }
  std::vector<std::string> codes;
  for (std::size_t i = 0; i < sc.relations; ++i) codes.push_back("R" + std::to_string(i));
  const RelationVocab relations(codes);
  const CorrelationGraph graph = build_graph(corpus, relations, {0, 0.05, 0.3});

  ModelConfig cfg;
  cfg.encoder.word_dim = 8;
  cfg.encoder.type_dim = 4;
  cfg.encoder.hidden_dim = 8;
  cfg.propagation.relation_dim = 16;
  cfg.propagation.head_dim = 16;
  LaceModel model(cfg, EncoderVocab::build(corpus), graph, seed);
  for (auto& p : model.params().items()) {
    if (p.name.ends_with(".a")) {
      // Narrow source half: the sign of each score follows the target node.
      p.value = uniform(p.value.shape(), rng, -3, 3);
      for (std::size_t k = 0; k < p.value.size() / 2; ++k) p.value[k] /= 6.0;
    } else if (p.name.ends_with("_emb") || p.name == "relation.features") {
      p.value = uniform(p.value.shape(), rng, -1, 1);
    }
  }
  center_attention(model, cfg.propagation);
  std::vector<PairLabels> gold;
  for (const auto& doc : corpus.documents) gold.push_back(entity_pair_labels(doc, relations));
  std::vector<Tensor> values;
  for (const auto& p : model.params().items()) values.push_back(p.value);
  return grad_check(
      [&](Tape&, std::span<const Var> v) {
        const BoundParams bound(model.params(), std::vector<Var>(v.begin(), v.end()));
        const Var relfeat = model.relation_features(bound);
        std::vector<Var> losses;
        for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
          const auto pairs = all_pairs(corpus.documents[d]);
          losses.push_back(model.document_loss(corpus.documents[d], pairs, gold[d], bound, relfeat,
                                               LossKind::Mat, 0.4));
        }
        return ops::sum(ops::stack_rows(losses));
      },
      values);
}

}  // namespace

std::vector<GradCheckReport> run_gradcheck_suite(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckReport> out;
  out.push_back(timed("lstm-cell", [&] { return lstm_cell_check(rng); }));
  out.push_back(timed("bilstm-stack", [&] { return bilstm_check(rng); }));
  out.push_back(timed("gat-layer", [&] { return gat_check(rng); }));
  out.push_back(timed("full-model-loss", [&] { return model_check(seed, rng); }));
  return out;
}

}  // namespace lace
