#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lace/docred.hpp"

namespace lace {

template <class T>
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, T fill = T{}) : n_(n), values_(n * n, fill) {}

  std::size_t size() const { return n_; }
  T& operator()(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  const std::vector<T>& values() const { return values_; }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<T> values_;
};

using CountMatrix = SquareMatrix<std::int64_t>;
using ProbMatrix = SquareMatrix<double>;
using BinaryMatrix = SquareMatrix<std::uint8_t>;

struct GraphParams {
  std::int64_t tau = 10;  // minimum co-occurrence count kept
  double delta = 0.05;    // minimum conditional probability for an edge
  double p = 0.3;         // total weight a node spreads over its neighbours
  friend bool operator==(const GraphParams&, const GraphParams&) = default;
};

// C: symmetric pair counts, zero diagonal. P: row-normalised C after the
// tau filter, P_ij = P(relation j | relation i). B: P >= delta with forced
// self-loops. R: self weight 1 - p, p split evenly across neighbours.
struct CorrelationGraph {
  std::vector<std::string> relations;
  GraphParams params;
  CountMatrix counts;
  ProbMatrix conditional;
  BinaryMatrix adjacency;
  ProbMatrix reweighted;

  std::size_t size() const { return relations.size(); }
  // Off-diagonal edges of the binarised adjacency.
  std::size_t edge_count() const;
  double density() const;
  // FNV-1a over relation codes and the re-weighted matrix bytes.
  std::uint64_t hash() const;

  friend bool operator==(const CorrelationGraph&, const CorrelationGraph&) = default;
};

// ConfigError for tau < 0, delta outside (0, 1] or p outside (0, 1).
void validate(const GraphParams& params);

CountMatrix count_cooccurrence(const Corpus& corpus, const RelationVocab& vocab);
// Counts below tau are zeroed before the rows are normalised.
ProbMatrix conditional_matrix(const CountMatrix& counts, std::int64_t tau);
BinaryMatrix binarize(const ProbMatrix& conditional, double delta);
// Clears off-diagonal edges whose co-occurrence count is below tau.
void drop_rare_edges(BinaryMatrix& adjacency, const CountMatrix& counts, std::int64_t tau);
ProbMatrix reweight(const BinaryMatrix& adjacency, double p);

// Validates parameter ranges (ConfigError), then P = conditional_matrix(C, 0)
// and B = binarize(P, delta) minus edges with C_ij < tau. Filtering after
// normalisation keeps B monotone in tau.
CorrelationGraph build_graph(const Corpus& corpus, const RelationVocab& vocab,
                             const GraphParams& params);
CorrelationGraph build_graph_from_counts(std::vector<std::string> relations, CountMatrix counts,
                                         const GraphParams& params);

enum class GraphFormat { Json, Tsv, Dot };
GraphFormat parse_graph_format(const std::string& name);

std::string graph_to_json(const CorrelationGraph& graph);
std::string graph_to_tsv(const CorrelationGraph& graph);
std::string graph_to_dot(const CorrelationGraph& graph);
CorrelationGraph graph_from_json(const std::string& text);

void export_graph(const CorrelationGraph& graph, GraphFormat format,
                  const std::filesystem::path& path);
CorrelationGraph load_graph(const std::filesystem::path& path);

}  // namespace lace
