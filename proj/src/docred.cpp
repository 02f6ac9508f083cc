#include "lace/docred.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lace/errors.hpp"

namespace lace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::size_t Document::num_tokens() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

std::vector<std::size_t> Document::sentence_offsets() const {
  std::vector<std::size_t> offsets;
  offsets.reserve(sentences.size());
  std::size_t off = 0;
  for (const auto& s : sentences) {
    offsets.push_back(off);
    off += s.size();
  }
  return offsets;
}

std::size_t Corpus::num_entities() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.entities.size();
  return n;
}

std::size_t Corpus::num_facts() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.facts.size();
  return n;
}

namespace {

[[noreturn]] void invalid(const std::string& title, const std::string& what) {
  throw ValidationError("document '" + title + "': " + what);
}

void validate(const Document& doc) {
  for (std::size_t e = 0; e < doc.entities.size(); ++e) {
    const Entity& ent = doc.entities[e];
    if (ent.mentions.empty()) invalid(doc.title, "entity " + std::to_string(e) + " has no mentions");
    for (const Mention& m : ent.mentions) {
      const std::string where = "entity " + std::to_string(e) + " mention '" + m.name + "'";
      if (m.sent_id >= doc.sentences.size()) {
        invalid(doc.title, where + " references sentence " + std::to_string(m.sent_id) +
                               " of " + std::to_string(doc.sentences.size()));
      }
      if (m.end <= m.start) {
        invalid(doc.title, where + " has empty span [" + std::to_string(m.start) + ", " +
                               std::to_string(m.end) + ")");
      }
      if (m.end > doc.sentences[m.sent_id].size()) {
        invalid(doc.title, where + " span end " + std::to_string(m.end) +
                               " exceeds sentence length " +
                               std::to_string(doc.sentences[m.sent_id].size()));
      }
    }
  }
  for (const RelationFact& f : doc.facts) {
    if (f.head >= doc.entities.size() || f.tail >= doc.entities.size()) {
      invalid(doc.title, "fact " + f.relation + " addresses entity (" + std::to_string(f.head) +
                             ", " + std::to_string(f.tail) + ") of " +
                             std::to_string(doc.entities.size()));
    }
    if (f.head == f.tail) {
      invalid(doc.title, "fact " + f.relation + " has head == tail == " + std::to_string(f.head));
    }
    for (std::size_t s : f.evidence) {
      if (s >= doc.sentences.size()) {
        invalid(doc.title, "fact " + f.relation + " cites evidence sentence " + std::to_string(s));
      }
    }
  }
}

Document document_from_json(const json& j) {
  Document doc;
  doc.title = j.at("title").get<std::string>();
  doc.sentences = j.at("sents").get<std::vector<std::vector<std::string>>>();
  for (const json& ent : j.at("vertexSet")) {
    Entity e;
    for (const json& m : ent) {
      Mention mention;
      mention.name = m.at("name").get<std::string>();
      mention.sent_id = m.at("sent_id").get<std::size_t>();
      const auto& pos = m.at("pos");
      if (!pos.is_array() || pos.size() != 2) invalid(doc.title, "mention pos must be [start, end]");
      const auto start = pos[0].get<long long>();
      const auto end = pos[1].get<long long>();
      if (start < 0 || end < 0) invalid(doc.title, "negative mention offset");
      mention.start = static_cast<std::size_t>(start);
      mention.end = static_cast<std::size_t>(end);
      mention.type = m.value("type", std::string{});
      if (!e.mentions.empty() && mention.type != e.mentions.front().type) e.mixed_types = true;
      e.mentions.push_back(std::move(mention));
    }
    doc.entities.push_back(std::move(e));
  }
  if (auto it = j.find("labels"); it != j.end() && !it->is_null()) {
    for (const json& l : *it) {
      RelationFact f;
      f.head = l.at("h").get<std::size_t>();
      f.tail = l.at("t").get<std::size_t>();
      f.relation = l.at("r").get<std::string>();
      if (auto ev = l.find("evidence"); ev != l.end()) {
        f.evidence = ev->get<std::vector<std::size_t>>();
      }
      doc.facts.push_back(std::move(f));
    }
  } else {
    doc.has_labels = false;
  }
  validate(doc);
  return doc;
}

}  // namespace

Corpus parse_corpus_text(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed corpus JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!root.is_array()) throw ParseError("corpus JSON must be an array of documents");
  Corpus corpus;
  corpus.documents.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    try {
      corpus.documents.push_back(document_from_json(root[i]));
    } catch (const json::exception& e) {
      throw ParseError("document " + std::to_string(i) + ": " + e.what());
    }
  }
  return corpus;
}

Corpus parse_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_corpus_text(buf.str());
}

std::string serialize_corpus(const Corpus& corpus, int indent) {
  ordered_json root = ordered_json::array();
  for (const Document& doc : corpus.documents) {
    ordered_json d;
    d["title"] = doc.title;
    d["sents"] = doc.sentences;
    ordered_json vertex_set = ordered_json::array();
    for (const Entity& e : doc.entities) {
      ordered_json ms = ordered_json::array();
      for (const Mention& m : e.mentions) {
        ms.push_back({{"name", m.name},
                      {"sent_id", m.sent_id},
                      {"pos", {m.start, m.end}},
                      {"type", m.type}});
      }
      vertex_set.push_back(std::move(ms));
    }
    d["vertexSet"] = std::move(vertex_set);
    if (doc.has_labels) {
      ordered_json labels = ordered_json::array();
      for (const RelationFact& f : doc.facts) {
        labels.push_back(
            {{"h", f.head}, {"t", f.tail}, {"r", f.relation}, {"evidence", f.evidence}});
      }
      d["labels"] = std::move(labels);
    }
    root.push_back(std::move(d));
  }
  return root.dump(indent);
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus file " + path.string());
  out << serialize_corpus(corpus) << '\n';
}

RelationVocab::RelationVocab(std::vector<std::string> codes,
                             std::map<std::string, std::string> names)
    : codes_(std::move(codes)), names_(std::move(names)) {
  std::sort(codes_.begin(), codes_.end());
  codes_.erase(std::unique(codes_.begin(), codes_.end()), codes_.end());
  for (std::size_t i = 0; i < codes_.size(); ++i) index_.emplace(codes_[i], i);
}

std::optional<std::size_t> RelationVocab::find(const std::string& code) const {
  auto it = index_.find(code);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t RelationVocab::index_of(const std::string& code) const {
  auto idx = find(code);
  if (!idx) throw VocabError("unknown relation code '" + code + "'");
  return *idx;
}

std::string RelationVocab::name(std::size_t index) const {
  const std::string& c = code(index);
  auto it = names_.find(c);
  return it == names_.end() ? c : it->second;
}

RelationVocab build_label_vocab(const Corpus& corpus,
                                std::map<std::string, std::string> rel_info) {
  std::vector<std::string> codes;
  for (const Document& d : corpus.documents)
    for (const RelationFact& f : d.facts) codes.push_back(f.relation);
  return RelationVocab(std::move(codes), std::move(rel_info));
}

std::map<std::string, std::string> load_rel_info(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rel_info file " + path.string());
  try {
    return json::parse(in).get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw ParseError("rel_info " + path.string() + ": " + e.what());
  }
}

PairLabels entity_pair_labels(const Document& doc, const RelationVocab& vocab) {
  PairLabels labels;
  for (const RelationFact& f : doc.facts) {
    labels[{f.head, f.tail}].insert(vocab.index_of(f.relation));
  }
  return labels;
}

LabelStats multi_label_stats(const Corpus& corpus, const RelationVocab& vocab) {
  LabelStats stats;
  std::size_t multi = 0;
  for (const Document& d : corpus.documents) {
    for (const auto& [pair, set] : entity_pair_labels(d, vocab)) {
      ++stats.histogram[set.size()];
      ++stats.labeled_pairs;
      stats.assignments += set.size();
      stats.max_set_size = std::max(stats.max_set_size, set.size());
      if (set.size() >= 2) ++multi;
    }
  }
  stats.no_pairs = stats.labeled_pairs == 0;
  if (!stats.no_pairs) {
    stats.multi_label_fraction =
        static_cast<double>(multi) / static_cast<double>(stats.labeled_pairs);
  }
  return stats;
}

}  // namespace lace
