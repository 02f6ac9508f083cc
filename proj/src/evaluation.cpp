#include "lace/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "lace/errors.hpp"

namespace lace {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<ScoredPair> score_corpus(const LaceModel& model, const Corpus& corpus) {
  const std::size_t n = corpus.documents.size();
  std::vector<std::vector<std::pair<EntityPair, PairScores>>> per_doc(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t d = next++; d < n; d = next++) {
      try {
        per_doc[d] = model.score_document(corpus.documents[d]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<ScoredPair> out;
  for (std::size_t d = 0; d < n; ++d) {
    for (auto& [pair, scores] : per_doc[d]) out.push_back({d, pair, std::move(scores)});
  }
  return out;
}

std::vector<PredictedFact> decode(const std::vector<ScoredPair>& scored, const Corpus& corpus,
                                  const RelationVocab& relations, double theta, LossKind loss) {
  std::vector<PredictedFact> out;
  for (const ScoredPair& s : scored) {
    const auto probs = s.scores.probabilities();
    for (std::size_t c : decode_pair(s.scores, theta, loss)) {
      out.push_back({corpus.documents[s.document].title, s.pair.first, s.pair.second,
                     relations.code(c), probs[c]});
    }
  }
  return out;
}

std::vector<PredictedFact> predict_corpus(const LaceModel& model, const Corpus& corpus, double theta,
                                          LossKind loss) {
  return decode(score_corpus(model, corpus), corpus, model.relations(), theta, loss);
}

std::string predictions_to_json(const std::vector<PredictedFact>& facts, bool submission) {
  ordered_json arr = ordered_json::array();
  for (const auto& f : facts) {
    ordered_json j;
    j["title"] = f.title;
    j["h_idx"] = f.head;
    j["t_idx"] = f.tail;
    j["r"] = f.relation;
    if (!submission) j["score"] = f.score;
    arr.push_back(std::move(j));
  }
  return arr.dump(1) + "\n";
}

std::vector<PredictedFact> predictions_from_json(const std::string& text) {
  json arr;
  try {
    arr = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed predictions JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!arr.is_array()) throw ParseError("predictions JSON must be an array");
  std::vector<PredictedFact> out;
  try {
    for (const json& j : arr) {
      PredictedFact f;
      f.title = j.at("title").get<std::string>();
      f.head = j.at("h_idx").get<std::size_t>();
      f.tail = j.at("t_idx").get<std::size_t>();
      f.relation = j.at("r").get<std::string>();
      f.score = j.value("score", 0.0);
      out.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("predictions JSON: ") + e.what());
  }
  return out;
}

void write_predictions(const std::vector<PredictedFact>& facts, const std::filesystem::path& path,
                       bool submission) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write predictions file " + path.string());
  out << predictions_to_json(facts, submission);
  if (!out) throw IoError("failed writing predictions file " + path.string());
}

std::vector<PredictedFact> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open predictions file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return predictions_from_json(ss.str());
}

namespace {

using Tuple = std::tuple<std::string, std::size_t, std::size_t, std::string>;
using PairKey = std::tuple<std::string, std::size_t, std::size_t>;

double safe_div(double a, double b) { return b > 0.0 ? a / b : 0.0; }
double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

std::map<std::string, const Document*> index_titles(const Corpus& gold) {
  std::map<std::string, const Document*> titles;
  for (const auto& d : gold.documents) titles.emplace(d.title, &d);
  return titles;
}

std::set<Tuple> prediction_set(const std::vector<PredictedFact>& predictions,
                               const std::map<std::string, const Document*>& titles) {
  std::set<Tuple> out;
  for (const auto& p : predictions) {
    if (!titles.count(p.title)) {
      throw ValidationError("prediction for unknown document '" + p.title + "'");
    }
    out.emplace(p.title, p.head, p.tail, p.relation);
  }
  return out;
}

std::set<Tuple> gold_set(const Corpus& gold) {
  std::set<Tuple> out;
  for (const auto& d : gold.documents)
    for (const auto& f : d.facts) out.emplace(d.title, f.head, f.tail, f.relation);
  return out;
}

std::optional<SplitScore> split_f1(const std::vector<PredictedFact>& predictions, const Corpus& gold,
                                   const std::function<bool(std::size_t)>& include) {
  const auto titles = index_titles(gold);
  const std::set<Tuple> preds = prediction_set(predictions, titles);
  std::map<PairKey, std::set<std::string>> pair_sets;
  for (const auto& d : gold.documents)
    for (const auto& f : d.facts) pair_sets[{d.title, f.head, f.tail}].insert(f.relation);

  SplitScore s;
  std::set<PairKey> kept;
  for (const auto& [key, rels] : pair_sets) {
    if (!include(rels.size())) continue;
    kept.insert(key);
    ++s.pairs;
    s.gold += rels.size();
  }
  if (s.pairs == 0) return std::nullopt;
  for (const auto& [title, h, t, r] : preds) {
    const PairKey key{title, h, t};
    if (!kept.count(key)) continue;
    ++s.predicted;
    if (pair_sets.at(key).count(r)) ++s.correct;
  }
  s.precision = safe_div(static_cast<double>(s.correct), static_cast<double>(s.predicted));
  s.recall = safe_div(static_cast<double>(s.correct), static_cast<double>(s.gold));
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

}  // namespace

Metrics evaluate(const std::vector<PredictedFact>& predictions, const Corpus& gold, const Corpus* train) {
  const auto titles = index_titles(gold);
  const std::set<Tuple> preds = prediction_set(predictions, titles);
  const std::set<Tuple> truth = gold_set(gold);

  std::set<std::tuple<std::string, std::string, std::string>> train_facts;
  if (train) {
    for (const auto& d : train->documents)
      for (const auto& f : d.facts)
        for (const auto& m1 : d.entities[f.head].mentions)
          for (const auto& m2 : d.entities[f.tail].mentions) train_facts.emplace(m1.name, m2.name, f.relation);
  }

  Metrics m;
  m.predicted = preds.size();
  m.gold = truth.size();
  for (const Tuple& t : preds) {
    if (!truth.count(t)) continue;
    ++m.correct;
    if (train_facts.empty()) continue;
    const auto& [title, h, tl, r] = t;
    const Document& doc = *titles.at(title);
    if (h >= doc.entities.size() || tl >= doc.entities.size()) continue;
    bool seen = false;
    for (const auto& m1 : doc.entities[h].mentions)
      for (const auto& m2 : doc.entities[tl].mentions) seen = seen || train_facts.count({m1.name, m2.name, r});
    if (seen) ++m.correct_in_train;
  }
  m.precision = safe_div(static_cast<double>(m.correct), static_cast<double>(m.predicted));
  m.recall = safe_div(static_cast<double>(m.correct), static_cast<double>(m.gold));
  m.f1 = harmonic(m.precision, m.recall);
  m.ign_precision = safe_div(static_cast<double>(m.correct - m.correct_in_train),
                             static_cast<double>(m.predicted - m.correct_in_train));
  m.ign_f1 = harmonic(m.ign_precision, m.recall);
  return m;
}

std::optional<SplitScore> multi_label_f1(const std::vector<PredictedFact>& predictions,
                                         const Corpus& gold, std::size_t k) {
  if (k == 0) throw ConfigError("multi-label split size must be >= 1");
  return split_f1(predictions, gold, [k](std::size_t n) { return n == k; });
}

std::optional<SplitScore> overall_multi_label_f1(const std::vector<PredictedFact>& predictions,
                                                 const Corpus& gold) {
  return split_f1(predictions, gold, [](std::size_t n) { return n >= 2; });
}

std::vector<ThetaPoint> theta_sweep(const LaceModel& model, const Corpus& labeled, double start,
                                    double stop, double step, const Corpus* train) {
  if (!(step > 0.0) || start < 0.0 || stop < start) {
    throw ConfigError("theta sweep needs 0 <= start <= stop and step > 0");
  }
  const auto scored = score_corpus(model, labeled);
  std::vector<ThetaPoint> out;
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) {
    const double theta = start + static_cast<double>(i) * step;
    out.push_back({theta, evaluate(decode(scored, labeled, model.relations(), theta), labeled, train)});
  }
  return out;
}

}  // namespace lace
