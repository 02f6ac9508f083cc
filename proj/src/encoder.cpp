#include "lace/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "lace/errors.hpp"
#include "lace/ops.hpp"

namespace lace {
namespace {

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string lstm_prefix(std::size_t layer, bool reverse) {
  return "encoder.lstm" + std::to_string(layer) + (reverse ? ".bwd" : ".fwd");
}

// `projected` is x * W_input for this step.
std::pair<Var, Var> lstm_step(const Var& projected, const Var& h, const Var& c,
                              const LstmWeights& w) {
  const std::size_t hd = h.cols();
  const Var gates = ops::add_row(ops::add(projected, ops::matmul(h, w.recurrent)), w.bias);
  const Var i = ops::sigmoid(ops::slice_cols(gates, 0, hd));
  const Var f = ops::sigmoid(ops::slice_cols(gates, hd, hd));
  const Var g = ops::tanh(ops::slice_cols(gates, 2 * hd, hd));
  const Var o = ops::sigmoid(ops::slice_cols(gates, 3 * hd, hd));
  const Var c_next = ops::add(ops::mul(f, c), ops::mul(i, g));
  return {ops::mul(o, ops::tanh(c_next)), c_next};
}

LstmWeights bind_lstm(const BoundParams& params, std::size_t layer, bool reverse) {
  const std::string p = lstm_prefix(layer, reverse);
  return {params[p + ".Wx"], params[p + ".Wh"], params[p + ".b"]};
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> reserved, std::vector<std::string> entries,
                       std::size_t unknown_index)
    : tokens_(std::move(reserved)), unknown_(unknown_index) {
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
  for (auto& e : entries) {
    if (std::find(tokens_.begin(), tokens_.end(), e) == tokens_.end()) tokens_.push_back(std::move(e));
  }
  if (unknown_ >= tokens_.size()) throw ContractError("vocabulary unknown index out of range");
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
}

std::size_t Vocabulary::lookup(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unknown_ : it->second;
}

EncoderVocab EncoderVocab::build(const Corpus& corpus, bool lowercase) {
  std::vector<std::string> words, types;
  for (const Document& d : corpus.documents) {
    for (const auto& s : d.sentences)
      for (const auto& tok : s) words.push_back(lowercase ? to_lower(tok) : tok);
    for (const Entity& e : d.entities)
      for (const Mention& m : e.mentions) types.push_back(m.type);
  }
  EncoderVocab v;
  v.words = Vocabulary({kUnknownWord}, std::move(words), 0);
  v.types = Vocabulary({kNoType, kUnknownType}, std::move(types), 1);
  v.lowercase = lowercase;
  return v;
}

void init_encoder_params(ParamStore& store, const EncoderConfig& config,
                         const EncoderVocab& vocab, Rng& rng) {
  if (config.word_dim == 0 || config.type_dim == 0 || config.hidden_dim == 0 ||
      config.layers == 0) {
    throw ConfigError("encoder dimensions and layer count must be positive");
  }
  store.add("encoder.word_emb", truncated_normal({vocab.words.size(), config.word_dim}, 0.02, rng));
  store.add("encoder.type_emb", truncated_normal({vocab.types.size(), config.type_dim}, 0.02, rng));
  const std::size_t h = config.hidden_dim;
  for (std::size_t layer = 0; layer < config.layers; ++layer) {
    const std::size_t d_in = layer == 0 ? config.word_dim + config.type_dim : 2 * h;
    for (bool reverse : {false, true}) {
      const std::string p = lstm_prefix(layer, reverse);
      store.add(p + ".Wx", glorot_uniform({d_in, 4 * h}, d_in, 4 * h, rng));
      store.add(p + ".Wh", glorot_uniform({h, 4 * h}, h, 4 * h, rng));
      store.add(p + ".b", Tensor({1, 4 * h}));
    }
  }
}

std::size_t load_word_embeddings(const std::filesystem::path& path, const EncoderVocab& vocab,
                                 Tensor& word_table) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file " + path.string());
  const std::size_t dim = word_table.cols();
  std::size_t replaced = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string token;
    is >> token;
    std::vector<double> values;
    double v;
    while (is >> v) values.push_back(v);
    if (values.size() != dim) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(dim) + " values, got " + std::to_string(values.size()));
    }
    if (vocab.lowercase) token = to_lower(token);
    const std::size_t row = vocab.words.lookup(token);
    if (row == vocab.words.unknown_index() && token != kUnknownWord) continue;
    std::copy(values.begin(), values.end(), word_table.data().begin() + static_cast<std::ptrdiff_t>(row * dim));
    ++replaced;
  }
  return replaced;
}

std::vector<std::size_t> token_word_ids(const Document& doc, const EncoderVocab& vocab) {
  std::vector<std::size_t> ids;
  ids.reserve(doc.num_tokens());
  for (const auto& s : doc.sentences)
    for (const auto& tok : s) ids.push_back(vocab.words.lookup(vocab.lowercase ? to_lower(tok) : tok));
  return ids;
}

std::vector<std::size_t> token_type_ids(const Document& doc, const EncoderVocab& vocab) {
  std::vector<std::size_t> ids(doc.num_tokens(), vocab.none_type());
  const auto offsets = doc.sentence_offsets();
  for (const Entity& e : doc.entities)
    for (const Mention& m : e.mentions) {
      const std::size_t type = vocab.types.lookup(m.type);
      for (std::size_t k = m.start; k < m.end; ++k) ids[offsets[m.sent_id] + k] = type;
    }
  return ids;
}

Var embed_tokens(const Document& doc, const EncoderVocab& vocab, const BoundParams& params) {
  const auto words = token_word_ids(doc, vocab);
  const auto types = token_type_ids(doc, vocab);
  const Var w = ops::gather_rows(params["encoder.word_emb"], words);
  const Var t = ops::gather_rows(params["encoder.type_emb"], types);
  const Var parts[] = {w, t};
  return ops::concat_cols(parts);
}

std::pair<Var, Var> lstm_cell(const Var& x, const Var& h, const Var& c, const LstmWeights& w) {
  return lstm_step(ops::matmul(x, w.input), h, c, w);
}

Var lstm_sequence(const Var& inputs, const LstmWeights& w, bool reverse) {
  const std::size_t len = inputs.rows();
  if (len == 0) throw DomainError("LSTM over an empty sequence");
  const std::size_t hd = w.recurrent.rows();
  Tape& tape = inputs.tape();
  Var h = tape.constant(Tensor({1, hd}));
  Var c = tape.constant(Tensor({1, hd}));
  // Input projections for every step in one product.
  const Var projected = ops::matmul(inputs, w.input);
  std::vector<Var> states(len);
  for (std::size_t step = 0; step < len; ++step) {
    const std::size_t pos = reverse ? len - 1 - step : step;
    std::tie(h, c) = lstm_step(ops::slice_rows(projected, pos, 1), h, c, w);
    states[pos] = h;
  }
  return ops::stack_rows(states);
}

Var bilstm_encode(const Var& inputs, const EncoderConfig& config, const BoundParams& params) {
  if (inputs.rows() == 0) throw DomainError("BiLSTM over an empty sequence");
  Var x = inputs;
  for (std::size_t layer = 0; layer < config.layers; ++layer) {
    const Var fwd = lstm_sequence(x, bind_lstm(params, layer, false), false);
    const Var bwd = lstm_sequence(x, bind_lstm(params, layer, true), true);
    const Var both[] = {fwd, bwd};
    x = ops::concat_cols(both);
  }
  return x;
}

Var mention_pool(const Var& states, std::size_t start, std::size_t end) {
  if (end <= start) {
    throw DomainError("mention span [" + std::to_string(start) + ", " + std::to_string(end) +
                      ") is empty");
  }
  return ops::max_rows(ops::slice_rows(states, start, end - start));
}

Var entity_pool(std::span<const Var> mentions) {
  if (mentions.empty()) throw DomainError("entity pooling over zero mentions");
  if (mentions.size() == 1) return mentions.front();
  return ops::logsumexp_rows(ops::stack_rows(mentions));
}

Var encode_entities(const Document& doc, const EncoderVocab& vocab, const EncoderConfig& config,
                    const BoundParams& params) {
  if (doc.entities.empty()) throw DomainError("document '" + doc.title + "' has no entities");
  const Var states = bilstm_encode(embed_tokens(doc, vocab, params), config, params);
  const auto offsets = doc.sentence_offsets();
  std::vector<Var> entities;
  entities.reserve(doc.entities.size());
  for (const Entity& e : doc.entities) {
    std::vector<Var> mentions;
    for (const Mention& m : e.mentions) {
      const std::size_t base = offsets[m.sent_id];
      mentions.push_back(mention_pool(states, base + m.start, base + m.end));
    }
    entities.push_back(entity_pool(mentions));
  }
  return ops::stack_rows(entities);
}

}  // namespace lace
