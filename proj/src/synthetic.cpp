#include "lace/synthetic.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "lace/errors.hpp"

namespace lace {

std::vector<std::set<std::size_t>> planted_label_sets(std::size_t relations) {
  std::vector<std::set<std::size_t>> sets;
  for (std::size_t i = 0; i < relations; ++i) sets.push_back({i});
  for (std::size_t i = 0; 2 * i + 1 < relations; ++i) sets.push_back({2 * i, 2 * i + 1});
  if (relations >= 3) sets.push_back({0, 1, 2});
  return sets;
}

Corpus generate_synthetic(const SyntheticConfig& config) {
  const std::size_t r = config.relations;
  const std::size_t entities = config.distractors + 2;
  if (r == 0) throw ConfigError("synthetic corpus needs at least one relation");
  if (config.vocab_size < r + 2 * entities + 2) {
    throw ConfigError("vocab_size " + std::to_string(config.vocab_size) + " too small for " +
                      std::to_string(r) + " relations and " + std::to_string(entities) +
                      " entities per document");
  }
  const std::size_t name_begin = r;
  const std::size_t name_count = std::max(entities, (config.vocab_size - r) / 3);
  const std::size_t filler_begin = name_begin + name_count;
  const std::size_t filler_count = config.vocab_size - filler_begin;

  const auto sets = planted_label_sets(r);
  std::vector<std::size_t> singles, multis;
  for (std::size_t i = 0; i < sets.size(); ++i) (sets[i].size() == 1 ? singles : multis).push_back(i);

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> filler(0, filler_count - 1);
  std::bernoulli_distribution multi(multis.empty() ? 0.0 : config.multi_label_rate);
  std::bernoulli_distribution drop(config.trigger_dropout);
  std::bernoulli_distribution again(config.second_mention_rate);
  const char* types[] = {"PER", "ORG", "LOC"};
  std::uniform_int_distribution<std::size_t> type_pick(0, 2);
  auto word = [](std::size_t i) { return "w" + std::to_string(i); };

  Corpus corpus;
  for (std::size_t d = 0; d < config.documents; ++d) {
    Document doc;
    doc.title = "synthetic-" + std::to_string(config.seed) + "-" + std::to_string(d);

    std::vector<std::size_t> names(name_count);
    for (std::size_t i = 0; i < name_count; ++i) names[i] = name_begin + i;
    std::shuffle(names.begin(), names.end(), rng);
    names.resize(entities);

    const auto& pool = multi(rng) ? multis : singles;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const std::set<std::size_t>& labels = sets[pool[pick(rng)]];

    std::vector<std::size_t> triggers(labels.begin(), labels.end());
    std::shuffle(triggers.begin(), triggers.end(), rng);
    if (triggers.size() > 1) {
      std::vector<std::size_t> kept;
      for (std::size_t t : triggers)
        if (!drop(rng)) kept.push_back(t);
      if (kept.empty()) kept.push_back(triggers.front());
      triggers = std::move(kept);
    }

    // Entities 0 (head) and 1 (tail) share the related sentence; the
    // distractors get one plain sentence each, in shuffled order.
    std::vector<std::size_t> order(entities - 1);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i + 1;
    std::shuffle(order.begin(), order.end(), rng);
    doc.entities.resize(entities);

    std::size_t distractor_seen = 0;
    for (std::size_t slot : order) {
      std::vector<std::string> sent;
      for (std::size_t k = 0; k < config.fillers; ++k) sent.push_back(word(filler_begin + filler(rng)));
      if (slot == 1) {
        const std::size_t head_pos = sent.size();
        sent.push_back(word(names[0]));
        for (std::size_t t : triggers) sent.push_back(word(t));
        sent.push_back(word(filler_begin + filler(rng)));
        const std::size_t tail_pos = sent.size();
        sent.push_back(word(names[1]));
        const std::size_t s = doc.sentences.size();
        doc.entities[0].mentions.push_back({word(names[0]), s, head_pos, head_pos + 1, ""});
        doc.entities[1].mentions.push_back({word(names[1]), s, tail_pos, tail_pos + 1, ""});
      } else {
        const std::size_t e = 2 + distractor_seen++;
        const std::size_t pos = sent.size();
        sent.push_back(word(names[e]));
        sent.push_back(word(filler_begin + filler(rng)));
        doc.entities[e].mentions.push_back({word(names[e]), doc.sentences.size(), pos, pos + 1, ""});
      }
      sent.push_back(".");
      doc.sentences.push_back(std::move(sent));
    }
    if (again(rng)) {
      std::vector<std::string> sent;
      for (std::size_t k = 0; k < config.fillers; ++k) sent.push_back(word(filler_begin + filler(rng)));
      doc.entities[0].mentions.push_back({word(names[0]), doc.sentences.size(), sent.size(), sent.size() + 1, ""});
      sent.push_back(word(names[0]));
      sent.push_back(".");
      doc.sentences.push_back(std::move(sent));
    }
    for (auto& e : doc.entities) {
      const std::string type = types[type_pick(rng)];
      for (auto& m : e.mentions) m.type = type;
    }
    for (std::size_t rel : labels) doc.facts.push_back({0, 1, "R" + std::to_string(rel), {}});
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

}  // namespace lace
