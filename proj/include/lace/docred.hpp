#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace lace {

struct Mention {
  std::string name;
  std::size_t sent_id = 0;
  std::size_t start = 0;  // token offset within the sentence, inclusive
  std::size_t end = 0;    // exclusive
  std::string type;

  friend bool operator==(const Mention&, const Mention&) = default;
};

struct Entity {
  std::vector<Mention> mentions;
  // Set when the source gives the mentions different types. The mentions
  // are kept verbatim; the first mention's type is the entity's type.
  bool mixed_types = false;

  const std::string& type() const { return mentions.front().type; }
  friend bool operator==(const Entity&, const Entity&) = default;
};

struct RelationFact {
  std::size_t head = 0;
  std::size_t tail = 0;
  std::string relation;
  std::vector<std::size_t> evidence;

  friend bool operator==(const RelationFact&, const RelationFact&) = default;
};

struct Document {
  std::string title;
  std::vector<std::vector<std::string>> sentences;
  std::vector<Entity> entities;
  std::vector<RelationFact> facts;
  // False for blind documents (no "labels" key in the source).
  bool has_labels = true;

  std::size_t num_tokens() const;
  // Offset of each sentence's first token in the flattened token sequence.
  std::vector<std::size_t> sentence_offsets() const;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Corpus {
  std::vector<Document> documents;

  std::size_t num_entities() const;
  std::size_t num_facts() const;
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Parses a DocRED-format JSON array. Throws ParseError on malformed JSON
// and ValidationError (naming the document) on out-of-range spans or facts.
Corpus parse_corpus(const std::filesystem::path& path);
Corpus parse_corpus_text(const std::string& json_text);
std::string serialize_corpus(const Corpus& corpus, int indent = -1);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

// Dense relation indices assigned by lexicographic order of the codes. The
// threshold/NA class sits at index size().
class RelationVocab {
 public:
  RelationVocab() = default;
  explicit RelationVocab(std::vector<std::string> codes,
                         std::map<std::string, std::string> names = {});

  std::size_t size() const { return codes_.size(); }
  std::size_t threshold_index() const { return codes_.size(); }
  std::size_t num_classes() const { return codes_.size() + 1; }

  std::size_t index_of(const std::string& code) const;  // throws VocabError
  std::optional<std::size_t> find(const std::string& code) const;
  const std::string& code(std::size_t index) const { return codes_.at(index); }
  const std::vector<std::string>& codes() const { return codes_; }
  // Human-readable name when rel_info was supplied, otherwise the code.
  std::string name(std::size_t index) const;

  friend bool operator==(const RelationVocab& a, const RelationVocab& b) {
    return a.codes_ == b.codes_;
  }

 private:
  std::vector<std::string> codes_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, std::string> names_;
};

RelationVocab build_label_vocab(const Corpus& corpus,
                                std::map<std::string, std::string> rel_info = {});
// rel_info.json: {"P17": "country", ...}
std::map<std::string, std::string> load_rel_info(const std::filesystem::path& path);

using EntityPair = std::pair<std::size_t, std::size_t>;
using PairLabels = std::map<EntityPair, std::set<std::size_t>>;

// Gold label set per (head, tail) pair; only pairs with a fact appear.
PairLabels entity_pair_labels(const Document& doc, const RelationVocab& vocab);

struct LabelStats {
  std::map<std::size_t, std::size_t> histogram;  // label-set size -> pair count
  std::size_t labeled_pairs = 0;
  std::size_t assignments = 0;  // sum of size * count
  std::size_t max_set_size = 0;
  double multi_label_fraction = 0.0;
  bool no_pairs = true;  // fraction is reported as 0 when set
};

LabelStats multi_label_stats(const Corpus& corpus, const RelationVocab& vocab);

}  // namespace lace
