#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lace/docred.hpp"
#include "lace/init.hpp"
#include "lace/params.hpp"
#include "lace/tape.hpp"

namespace lace {

// Token -> row mapping with reserved leading entries (e.g. "<unk>").
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> reserved, std::vector<std::string> entries,
             std::size_t unknown_index);

  std::size_t size() const { return tokens_.size(); }
  std::size_t lookup(const std::string& token) const;
  std::size_t unknown_index() const { return unknown_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.unknown_ == b.unknown_;
  }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t> index_;
  std::size_t unknown_ = 0;
};

inline constexpr const char* kUnknownWord = "<unk>";
inline constexpr const char* kNoType = "<none>";
inline constexpr const char* kUnknownType = "<unk-type>";

struct EncoderVocab {
  Vocabulary words;  // row 0 = <unk>
  Vocabulary types;  // row 0 = <none> (non-entity token), row 1 = <unk-type>
  bool lowercase = true;

  static EncoderVocab build(const Corpus& corpus, bool lowercase = true);
  std::size_t none_type() const { return 0; }
  friend bool operator==(const EncoderVocab&, const EncoderVocab&) = default;
};

struct EncoderConfig {
  std::size_t word_dim = 100;
  std::size_t type_dim = 20;
  std::size_t hidden_dim = 128;  // per direction
  std::size_t layers = 1;

  std::size_t output_dim() const { return 2 * hidden_dim; }
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// Adds encoder.* parameters to `store`.
void init_encoder_params(ParamStore& store, const EncoderConfig& config,
                         const EncoderVocab& vocab, Rng& rng);

// Seeds rows of the word table from a text embedding file (token followed
// by word_dim floats per line). Returns the number of rows replaced.
std::size_t load_word_embeddings(const std::filesystem::path& path, const EncoderVocab& vocab,
                                 Tensor& word_table);

// Word row and type row per flattened token. Tokens inside a mention take
// that mention's type; all others the <none> row.
std::vector<std::size_t> token_word_ids(const Document& doc, const EncoderVocab& vocab);
std::vector<std::size_t> token_type_ids(const Document& doc, const EncoderVocab& vocab);

// (l x (word_dim + type_dim)) rows of [word ; type] embeddings.
Var embed_tokens(const Document& doc, const EncoderVocab& vocab, const BoundParams& params);

struct LstmWeights {
  Var input;      // d_in x 4h
  Var recurrent;  // h x 4h
  Var bias;       // 1 x 4h
};

// One step. Gate order in the 4h block is input, forget, candidate, output.
std::pair<Var, Var> lstm_cell(const Var& x, const Var& h, const Var& c, const LstmWeights& w);
// (l x d_in) -> (l x h); reverse=true runs right to left but keeps positions.
Var lstm_sequence(const Var& inputs, const LstmWeights& w, bool reverse);
// Stacked bidirectional LSTM: (l x d_in) -> (l x 2h). Throws DomainError on l == 0.
Var bilstm_encode(const Var& inputs, const EncoderConfig& config, const BoundParams& params);

// Coordinate-wise max over states[start, end).
Var mention_pool(const Var& states, std::size_t start, std::size_t end);
// Coordinate-wise log-sum-exp over mention vectors.
Var entity_pool(std::span<const Var> mentions);

// Full encoder: (N x d_B) entity embeddings, one row per entity.
Var encode_entities(const Document& doc, const EncoderVocab& vocab, const EncoderConfig& config,
                    const BoundParams& params);

}  // namespace lace
