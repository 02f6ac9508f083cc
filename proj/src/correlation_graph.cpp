#include "lace/correlation_graph.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lace/errors.hpp"

namespace lace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

CountMatrix count_cooccurrence(const Corpus& corpus, const RelationVocab& vocab) {
  CountMatrix c(vocab.size(), 0);
  for (const Document& doc : corpus.documents) {
    for (const auto& [pair, labels] : entity_pair_labels(doc, vocab)) {
      for (auto a = labels.begin(); a != labels.end(); ++a)
        for (auto b = std::next(a); b != labels.end(); ++b) {
          ++c(*a, *b);
          ++c(*b, *a);
        }
    }
  }
  return c;
}

ProbMatrix conditional_matrix(const CountMatrix& counts, std::int64_t tau) {
  if (tau < 0) throw ConfigError("tau must be >= 0, got " + std::to_string(tau));
  const std::size_t r = counts.size();
  ProbMatrix p(r, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    std::int64_t row_sum = 0;
    for (std::size_t j = 0; j < r; ++j) {
      if (counts(i, j) >= tau) row_sum += counts(i, j);
    }
    if (row_sum == 0) continue;
    for (std::size_t j = 0; j < r; ++j) {
      if (counts(i, j) >= tau) {
        p(i, j) = static_cast<double>(counts(i, j)) / static_cast<double>(row_sum);
      }
    }
  }
  return p;
}

BinaryMatrix binarize(const ProbMatrix& conditional, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw ConfigError("delta must lie in (0, 1], got " + std::to_string(delta));
  }
  const std::size_t r = conditional.size();
  BinaryMatrix b(r, 0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) b(i, j) = (i == j || conditional(i, j) >= delta) ? 1 : 0;
  return b;
}

void drop_rare_edges(BinaryMatrix& adjacency, const CountMatrix& counts, std::int64_t tau) {
  if (tau < 0) throw ConfigError("tau must be >= 0, got " + std::to_string(tau));
  if (adjacency.size() != counts.size()) throw ShapeError("adjacency and count matrices differ in size");
  for (std::size_t i = 0; i < counts.size(); ++i)
    for (std::size_t j = 0; j < counts.size(); ++j)
      if (i != j && counts(i, j) < tau) adjacency(i, j) = 0;
}

ProbMatrix reweight(const BinaryMatrix& adjacency, double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("p must lie in (0, 1), got " + std::to_string(p));
  const std::size_t r = adjacency.size();
  ProbMatrix w(r, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    std::size_t neighbours = 0;
    for (std::size_t j = 0; j < r; ++j) neighbours += (j != i && adjacency(i, j)) ? 1 : 0;
    w(i, i) = 1.0 - p;
    if (neighbours == 0) continue;
    const double share = p / static_cast<double>(neighbours);
    for (std::size_t j = 0; j < r; ++j) {
      if (j != i && adjacency(i, j)) w(i, j) = share;
    }
  }
  return w;
}

void validate(const GraphParams& params) {
  if (params.tau < 0) throw ConfigError("tau must be >= 0, got " + std::to_string(params.tau));
  if (!(params.delta > 0.0 && params.delta <= 1.0)) {
    throw ConfigError("delta must lie in (0, 1], got " + std::to_string(params.delta));
  }
  if (!(params.p > 0.0 && params.p < 1.0)) {
    throw ConfigError("p must lie in (0, 1), got " + std::to_string(params.p));
  }
}

CorrelationGraph build_graph_from_counts(std::vector<std::string> relations, CountMatrix counts,
                                         const GraphParams& params) {
  validate(params);
  if (counts.size() != relations.size()) {
    throw ShapeError("count matrix of size " + std::to_string(counts.size()) + " for " +
                     std::to_string(relations.size()) + " relations");
  }
  CorrelationGraph g;
  g.relations = std::move(relations);
  g.params = params;
  g.counts = std::move(counts);
  g.conditional = conditional_matrix(g.counts, 0);
  g.adjacency = binarize(g.conditional, params.delta);
  drop_rare_edges(g.adjacency, g.counts, params.tau);
  g.reweighted = reweight(g.adjacency, params.p);
  return g;
}

CorrelationGraph build_graph(const Corpus& corpus, const RelationVocab& vocab,
                             const GraphParams& params) {
  return build_graph_from_counts(vocab.codes(), count_cooccurrence(corpus, vocab), params);
}

std::size_t CorrelationGraph::edge_count() const {
  std::size_t edges = 0;
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < size(); ++j) edges += (i != j && adjacency(i, j)) ? 1 : 0;
  return edges;
}

double CorrelationGraph::density() const {
  const std::size_t r = size();
  if (r < 2) return 0.0;
  return static_cast<double>(edge_count()) / static_cast<double>(r * (r - 1));
}

std::uint64_t CorrelationGraph::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  for (const std::string& code : relations) {
    mix(code.data(), code.size());
    mix("\0", 1);
  }
  for (double v : reweighted.values()) mix(&v, sizeof v);
  return h;
}

GraphFormat parse_graph_format(const std::string& name) {
  if (name == "json") return GraphFormat::Json;
  if (name == "tsv") return GraphFormat::Tsv;
  if (name == "dot") return GraphFormat::Dot;
  throw ConfigError("unknown graph format '" + name + "' (expected json, tsv or dot)");
}

namespace {

template <class T, class Out = T>
ordered_json matrix_json(const SquareMatrix<T>& m) {
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t j = 0; j < m.size(); ++j) row.push_back(static_cast<Out>(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class T, class In = T>
SquareMatrix<T> matrix_from_json(const json& j, std::size_t r, const char* name) {
  if (!j.is_array() || j.size() != r) {
    throw ParseError(std::string("graph matrix ") + name + " must have " + std::to_string(r) +
                     " rows");
  }
  SquareMatrix<T> m(r);
  for (std::size_t i = 0; i < r; ++i) {
    if (!j[i].is_array() || j[i].size() != r) {
      throw ParseError(std::string("graph matrix ") + name + " row " + std::to_string(i) +
                       " must have " + std::to_string(r) + " entries");
    }
    for (std::size_t k = 0; k < r; ++k) m(i, k) = static_cast<T>(j[i][k].get<In>());
  }
  return m;
}

}  // namespace

std::string graph_to_json(const CorrelationGraph& g) {
  ordered_json j;
  j["r"] = g.size();
  j["relations"] = g.relations;
  j["C"] = matrix_json(g.counts);
  j["P"] = matrix_json(g.conditional);
  j["B"] = matrix_json<std::uint8_t, int>(g.adjacency);
  j["R"] = matrix_json(g.reweighted);
  j["tau"] = g.params.tau;
  j["delta"] = g.params.delta;
  j["p"] = g.params.p;
  return j.dump() + "\n";
}

CorrelationGraph graph_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed graph JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    CorrelationGraph g;
    g.relations = j.at("relations").get<std::vector<std::string>>();
    const std::size_t r = g.relations.size();
    if (j.at("r").get<std::size_t>() != r) throw ParseError("graph 'r' disagrees with relations");
    g.params.tau = j.at("tau").get<std::int64_t>();
    g.params.delta = j.at("delta").get<double>();
    g.params.p = j.at("p").get<double>();
    g.counts = matrix_from_json<std::int64_t>(j.at("C"), r, "C");
    g.conditional = matrix_from_json<double>(j.at("P"), r, "P");
    g.adjacency = matrix_from_json<std::uint8_t, int>(j.at("B"), r, "B");
    g.reweighted = matrix_from_json<double>(j.at("R"), r, "R");
    return g;
  } catch (const json::exception& e) {
    throw ParseError(std::string("graph JSON: ") + e.what());
  }
}

std::string graph_to_tsv(const CorrelationGraph& g) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (g.reweighted(i, j) > 0.0) {
        os << g.relations[i] << '\t' << g.relations[j] << '\t' << g.reweighted(i, j) << '\n';
      }
    }
  return os.str();
}

std::string graph_to_dot(const CorrelationGraph& g) {
  std::ostringstream os;
  os << "digraph relations {\n";
  for (const std::string& code : g.relations) os << "  \"" << code << "\";\n";
  char label[32];
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (i == j || g.reweighted(i, j) <= 0.0) continue;
      std::snprintf(label, sizeof label, "%.3f", g.reweighted(i, j));
      os << "  \"" << g.relations[i] << "\" -> \"" << g.relations[j] << "\" [label=\"" << label
         << "\"];\n";
    }
  os << "}\n";
  return os.str();
}

void export_graph(const CorrelationGraph& graph, GraphFormat format,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write graph file " + path.string());
  switch (format) {
    case GraphFormat::Json: out << graph_to_json(graph); break;
    case GraphFormat::Tsv: out << graph_to_tsv(graph); break;
    case GraphFormat::Dot: out << graph_to_dot(graph); break;
  }
  if (!out) throw IoError("failed writing graph file " + path.string());
}

CorrelationGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open graph file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return graph_from_json(buf.str());
}

}  // namespace lace
