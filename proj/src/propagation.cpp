#include "lace/propagation.hpp"

#include "lace/errors.hpp"
#include "lace/ops.hpp"

namespace lace {
namespace {

std::string head_prefix(std::size_t layer, std::size_t head) {
  return "relation.gat" + std::to_string(layer) + ".head" + std::to_string(head);
}

}  // namespace

Var gat_layer(const Var& features, const ProbMatrix& correlation, const GatLayer& layer,
              double leaky_slope, GatMode mode, std::vector<Tensor>* mixing) {
  const std::size_t r = features.rows();
  if (correlation.size() != r) {
    throw ShapeError("gat_layer: " + std::to_string(r) + " feature rows but correlation matrix of size " +
                     std::to_string(correlation.size()));
  }
  if (layer.heads.empty()) throw ConfigError("gat_layer needs at least one head");

  ops::Mask neighbours(r * r, 0);
  Tensor weights({r, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      neighbours[i * r + j] = correlation(i, j) > 0.0 ? 1 : 0;
      weights(i, j) = correlation(i, j);
    }

  std::vector<Var> outputs;
  outputs.reserve(layer.heads.size());
  for (const GatHead& head : layer.heads) {
    const Var z = ops::matmul(features, head.weight);
    const std::size_t d = z.cols();
    if (head.attention.shape() != Shape{1, 2 * d}) {
      throw ShapeError("gat_layer: attention vector " + shape_str(head.attention.shape()) +
                       " for head width " + std::to_string(d));
    }
    const Var src = ops::matmul(z, ops::transpose(ops::slice_cols(head.attention, 0, d)));
    const Var dst = ops::slice_cols(head.attention, d, d);
    const Var dst_scores = ops::transpose(ops::matmul(z, ops::transpose(dst)));
    const Var scores = ops::leaky_relu(ops::outer_add(src, dst_scores), leaky_slope);
    Var mix = ops::softmax_masked(scores, neighbours);
    if (mode == GatMode::Reweighted) mix = ops::row_normalize(ops::mul_const(mix, weights));
    if (mixing) mixing->push_back(mix.value());
    outputs.push_back(ops::matmul(mix, z));
  }

  Var out;
  if (outputs.size() == 1) {
    out = outputs.front();
  } else if (layer.combine == HeadCombine::Concat) {
    out = ops::concat_cols(outputs);
  } else {
    out = outputs.front();
    for (std::size_t k = 1; k < outputs.size(); ++k) out = ops::add(out, outputs[k]);
    out = ops::scale(out, 1.0 / static_cast<double>(outputs.size()));
  }
  return layer.apply_elu ? ops::elu(out) : out;
}

Tensor init_relation_features(std::size_t num_relations, std::size_t relation_dim,
                              std::uint64_t seed) {
  Rng rng(seed);
  return truncated_normal({num_relations, relation_dim}, 0.02, rng);
}

void init_propagation_params(ParamStore& store, const PropagationConfig& config,
                             std::size_t num_relations, std::size_t output_dim, Rng& rng) {
  if (config.relation_dim == 0) throw ConfigError("relation feature width must be positive");
  store.add("relation.features", truncated_normal({num_relations, config.relation_dim}, 0.02, rng));
  if (config.layers == 0) {
    store.add("relation.proj", glorot_uniform({config.relation_dim, output_dim},
                                              config.relation_dim, output_dim, rng));
    return;
  }
  if (config.heads == 0 || config.head_dim == 0) {
    throw ConfigError("GAT heads and head width must be positive");
  }
  std::size_t d_in = config.relation_dim;
  for (std::size_t layer = 0; layer < config.layers; ++layer) {
    const bool last = layer + 1 == config.layers;
    const std::size_t d_head = last ? output_dim : config.head_dim;
    for (std::size_t k = 0; k < config.heads; ++k) {
      const std::string p = head_prefix(layer, k);
      store.add(p + ".W", glorot_uniform({d_in, d_head}, d_in, d_head, rng));
      store.add(p + ".a", glorot_uniform({1, 2 * d_head}, 2 * d_head, 1, rng));
    }
    d_in = config.heads * d_head;
  }
}

std::vector<GatLayer> bind_gat_stack(const PropagationConfig& config, const BoundParams& params) {
  std::vector<GatLayer> stack;
  for (std::size_t layer = 0; layer < config.layers; ++layer) {
    const bool last = layer + 1 == config.layers;
    GatLayer l;
    l.combine = last ? HeadCombine::Average : HeadCombine::Concat;
    l.apply_elu = !last;
    for (std::size_t k = 0; k < config.heads; ++k) {
      const std::string p = head_prefix(layer, k);
      l.heads.push_back({params[p + ".W"], params[p + ".a"]});
    }
    stack.push_back(std::move(l));
  }
  return stack;
}

Var propagate(const Var& features, const ProbMatrix& correlation,
              const PropagationConfig& config, const BoundParams& params) {
  if (features.cols() != config.relation_dim) {
    throw ShapeError("propagate: features " + shape_str(features.shape()) +
                     " do not have width " + std::to_string(config.relation_dim));
  }
  if (config.layers == 0) return ops::matmul(features, params["relation.proj"]);
  Var h = features;
  for (const GatLayer& layer : bind_gat_stack(config, params)) {
    const std::size_t expected = layer.heads.front().weight.rows();
    if (h.cols() != expected) {
      throw ShapeError("propagate: layer expects width " + std::to_string(expected) + ", got " +
                       std::to_string(h.cols()));
    }
    h = gat_layer(h, correlation, layer, config.leaky_slope, config.mode);
  }
  return h;
}

}  // namespace lace
