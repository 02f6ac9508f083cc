#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lace/correlation_graph.hpp"
#include "lace/init.hpp"
#include "lace/params.hpp"
#include "lace/tape.hpp"

namespace lace {

// How the correlation matrix enters attention.
//   Reweighted: mix_ij = alpha_ij * R_ij / sum_k alpha_ik * R_ik over N(i).
//   MaskOnly:   mix_ij = alpha_ij, R only defines N(i).
enum class GatMode { Reweighted, MaskOnly };

enum class HeadCombine { Concat, Average };

struct PropagationConfig {
  std::size_t relation_dim = 500;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t head_dim = 500;  // hidden-layer width per head
  double leaky_slope = 0.2;
  GatMode mode = GatMode::Reweighted;

  friend bool operator==(const PropagationConfig&, const PropagationConfig&) = default;
};

struct GatHead {
  Var weight;     // d_in x d_head
  Var attention;  // 1 x 2 d_head: [source half ; target half]
};

struct GatLayer {
  std::vector<GatHead> heads;
  HeadCombine combine = HeadCombine::Concat;
  bool apply_elu = true;
};

// Row i attends over N(i) = { j : R_ij > 0 }. Per head:
//   z = H W, e_ij = leaky_relu(a_src . z_i + a_dst . z_j),
//   alpha_i = softmax over N(i), out_i = sum_j mix_ij z_j.
// Heads are concatenated or averaged; ELU follows when apply_elu is set.
// When `mixing` is non-null it receives each head's r x r mixing weights.
Var gat_layer(const Var& features, const ProbMatrix& correlation, const GatLayer& layer,
              double leaky_slope, GatMode mode, std::vector<Tensor>* mixing = nullptr);

// Adds relation.* parameters: the r x relation_dim feature table and the
// GAT stack ending in width `output_dim` (or a single projection when
// config.layers == 0).
void init_propagation_params(ParamStore& store, const PropagationConfig& config,
                             std::size_t num_relations, std::size_t output_dim, Rng& rng);

// Seeded r x d_rel relation embedding table.
Tensor init_relation_features(std::size_t num_relations, std::size_t relation_dim,
                              std::uint64_t seed);

std::vector<GatLayer> bind_gat_stack(const PropagationConfig& config, const BoundParams& params);

// (r x relation_dim) -> (r x output_dim) over the correlation matrix.
Var propagate(const Var& features, const ProbMatrix& correlation,
              const PropagationConfig& config, const BoundParams& params);

}  // namespace lace
