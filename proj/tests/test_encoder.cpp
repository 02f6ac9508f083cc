#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "lace/encoder.hpp"
#include "lace/errors.hpp"
#include "lace/grad_check.hpp"
#include "lace/ops.hpp"
#include "test_util.hpp"

using namespace lace;
using lace::testing::bind_leaves;
using lace::testing::make_document;
using lace::testing::random_tensor;
using lace::testing::store_values;
using lace::testing::weighted_sum;

namespace {

EncoderConfig small_config() {
  EncoderConfig c;
  c.word_dim = 4;
  c.type_dim = 2;
  c.hidden_dim = 3;
  return c;
}

// "Ann met Bob in Rome ." with Ann/Bob PER and Rome LOC (two tokens: "in Rome").
Document fixture() {
  Document d;
  d.title = "fixture";
  d.sentences = {{"Ann", "met", "Bob", "."}, {"Later", "Ann", "visited", "New", "Rome", "."}};
  d.entities.push_back({{{"Ann", 0, 0, 1, "PER"}, {"Ann", 1, 1, 2, "PER"}}, false});
  d.entities.push_back({{{"Bob", 0, 2, 3, "PER"}}, false});
  d.entities.push_back({{{"New Rome", 1, 3, 5, "LOC"}}, false});
  return d;
}

}  // namespace

TEST_CASE("embed_tokens: unknowns, widths and entity types") {
  Corpus train;
  train.documents.push_back(fixture());
  const EncoderVocab vocab = EncoderVocab::build(train);
  Rng rng(1);
  ParamStore store;
  init_encoder_params(store, small_config(), vocab, rng);

  Tape tape;
  const BoundParams bound(tape, store, false);

  Document blind;
  blind.title = "blind";
  blind.sentences = {{"zzz", "qqq", "xxx"}};
  const Tensor unk = embed_tokens(blind, vocab, bound).value();
  CHECK(unk.shape() == Shape{3, 6});
  const Tensor& words = store.get("encoder.word_emb");
  const Tensor& types = store.get("encoder.type_emb");
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t k = 0; k < 4; ++k) CHECK(unk(t, k) == words(vocab.words.unknown_index(), k));
    for (std::size_t k = 0; k < 2; ++k) CHECK(unk(t, 4 + k) == types(vocab.none_type(), k));
  }

  const Document doc = fixture();
  const auto type_ids = token_type_ids(doc, vocab);
  const std::size_t per = vocab.types.lookup("PER"), loc = vocab.types.lookup("LOC");
  CHECK(per != vocab.none_type());
  CHECK(type_ids[0] == per);   // Ann
  CHECK(type_ids[1] == vocab.none_type());
  CHECK(type_ids[2] == per);   // Bob
  CHECK(type_ids[5] == per);   // second Ann mention
  CHECK(type_ids[7] == loc);   // New
  CHECK(type_ids[8] == loc);   // Rome
  const auto word_ids = token_word_ids(doc, vocab);
  CHECK(word_ids[0] == vocab.words.lookup("ann"));
  CHECK(word_ids[0] == word_ids[5]);
}

TEST_CASE("bilstm: shapes, zero weights, single token") {
  const EncoderConfig cfg = small_config();
  ParamStore store;
  EncoderVocab vocab = EncoderVocab::build(Corpus{});
  Rng rng(2);
  init_encoder_params(store, cfg, vocab, rng);

  Tape tape;
  const BoundParams bound(tape, store, false);
  std::mt19937_64 g(3);
  const Var one = tape.constant(random_tensor({1, 6}, g));
  CHECK(bilstm_encode(one, cfg, bound).shape() == Shape{1, 6});
  CHECK(bilstm_encode(tape.constant(random_tensor({5, 6}, g)), cfg, bound).shape() == Shape{5, 6});
  CHECK_THROWS_AS(bilstm_encode(tape.constant(Tensor({0, 6})), cfg, bound), DomainError);

  ParamStore zero;
  for (const auto& p : store.items()) zero.add(p.name, Tensor::zeros_like(p.value));
  Tape t2;
  const BoundParams zb(t2, zero, false);
  const Tensor states = bilstm_encode(t2.constant(random_tensor({4, 6}, g)), cfg, zb).value();
  for (double v : states.data()) CHECK(v == 0.0);
}

TEST_CASE("lstm_cell matches a scalar recomputation") {
  std::mt19937_64 g(4);
  const Tensor x = random_tensor({1, 2}, g), h = random_tensor({1, 2}, g), c = random_tensor({1, 2}, g);
  const Tensor wx = random_tensor({2, 8}, g), wh = random_tensor({2, 8}, g), b = random_tensor({1, 8}, g);
  Tape t;
  const auto [h1, c1] = lstm_cell(t.constant(x), t.constant(h), t.constant(c),
                                  {t.constant(wx), t.constant(wh), t.constant(b)});
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (std::size_t u = 0; u < 2; ++u) {
    double gate[4];
    for (std::size_t q = 0; q < 4; ++q) {
      const std::size_t col = q * 2 + u;
      gate[q] = b[col];
      for (std::size_t k = 0; k < 2; ++k) gate[q] += x[k] * wx(k, col) + h[k] * wh(k, col);
    }
    const double cn = sig(gate[1]) * c[u] + sig(gate[0]) * std::tanh(gate[2]);
    CHECK(c1.value()[u] == doctest::Approx(cn).epsilon(1e-13));
    CHECK(h1.value()[u] == doctest::Approx(sig(gate[3]) * std::tanh(cn)).epsilon(1e-13));
  }
}

TEST_CASE("mention and entity pooling") {
  Tape t;
  const Var states = t.constant(Tensor::matrix({{1, -2}, {0, 5}, {3, 3}}));
  CHECK(mention_pool(states, 0, 2).value() == Tensor::row({1, 5}));
  CHECK(mention_pool(states, 2, 3).value() == Tensor::row({3, 3}));
  CHECK_THROWS_AS(mention_pool(states, 1, 1), DomainError);

  const Var swapped = t.constant(Tensor::matrix({{0, 5}, {1, -2}}));
  CHECK(mention_pool(swapped, 0, 2).value() == mention_pool(states, 0, 2).value());

  const Var m = t.constant(Tensor::row({0.3, -4.0}));
  const Var single[] = {m};
  CHECK(entity_pool(single).value() == m.value());
  const Var twice[] = {m, m};
  const Tensor doubled = entity_pool(twice).value();
  CHECK(doubled[0] == doctest::Approx(0.3 + std::log(2.0)).epsilon(1e-14));
  CHECK(doubled[1] == doctest::Approx(-4.0 + std::log(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(entity_pool(std::span<const Var>{}), DomainError);

  std::mt19937_64 g(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + trial % 5;
    std::vector<Var> ms;
    for (std::size_t i = 0; i < k; ++i) ms.push_back(t.constant(random_tensor({1, 3}, g, -20, 20)));
    const Tensor e = entity_pool(ms).value();
    for (std::size_t c = 0; c < 3; ++c) {
      double mx = -1e300;
      for (const Var& v : ms) mx = std::max(mx, v.value()[c]);
      CHECK(e[c] >= mx);
      CHECK(e[c] <= mx + std::log(static_cast<double>(k)) + 1e-12);
    }
  }
}

TEST_CASE("encoder is deterministic under a fixed seed") {
  Corpus c;
  c.documents.push_back(fixture());
  const EncoderVocab vocab = EncoderVocab::build(c);
  auto run = [&] {
    Rng rng(42);
    ParamStore store;
    init_encoder_params(store, small_config(), vocab, rng);
    Tape t;
    return encode_entities(fixture(), vocab, small_config(), BoundParams(t, store, false)).value();
  };
  const Tensor a = run(), b = run();
  CHECK(a == b);
  CHECK(a.shape() == Shape{3, 6});
}

TEST_CASE("encoder gradients match finite differences") {
  Corpus c;
  c.documents.push_back(fixture());
  const EncoderVocab vocab = EncoderVocab::build(c);
  EncoderConfig cfg = small_config();
  cfg.layers = 2;
  Rng rng(7);
  ParamStore store;
  init_encoder_params(store, cfg, vocab, rng);
  // Larger embeddings so gradients are not vanishingly small.
  std::mt19937_64 g(8);
  store.get("encoder.word_emb") = random_tensor(store.get("encoder.word_emb").shape(), g, -1, 1);
  store.get("encoder.type_emb") = random_tensor(store.get("encoder.type_emb").shape(), g, -1, 1);
  std::vector<Tensor> values = store_values(store);
  const Tensor w = random_tensor({3, 6}, g, -1, 1);
  const Document doc = fixture();
  const GradCheckResult r = grad_check(
      [&](Tape&, std::span<const Var> leaves) {
        return weighted_sum(encode_entities(doc, vocab, cfg, bind_leaves(store, leaves)), w);
      },
      values);
  CHECK(r.max_rel_error < 1e-4);

  // A 3-token sequence straight through the BiLSTM.
  std::vector<Tensor> lstm_only;
  ParamStore lstm_store;
  for (const auto& p : store.items()) lstm_store.add(p.name, p.value);
  lstm_only = store_values(lstm_store);
  lstm_only.push_back(random_tensor({3, 6}, g));
  const Tensor w3 = random_tensor({3, 6}, g);
  const GradCheckResult r3 = grad_check(
      [&](Tape&, std::span<const Var> leaves) {
        const BoundParams bp = bind_leaves(lstm_store, leaves.first(lstm_store.size()));
        return weighted_sum(bilstm_encode(leaves.back(), cfg, bp), w3);
      },
      lstm_only);
  CHECK(r3.max_rel_error < 1e-4);
}

TEST_CASE("word embedding file seeds matching rows") {
  Corpus c;
  c.documents.push_back(fixture());
  const EncoderVocab vocab = EncoderVocab::build(c);
  Tensor table({vocab.words.size(), 4});
  const auto path = std::filesystem::temp_directory_path() / "lace_vectors.txt";
  {
    std::ofstream out(path);
    out << "ann 1 2 3 4\nnot-in-vocab 0 0 0 0\nbob 5 6 7 8\n";
  }
  CHECK(load_word_embeddings(path, vocab, table) == 2);
  const std::size_t ann = vocab.words.lookup("ann");
  CHECK(table(ann, 3) == 4.0);
  {
    std::ofstream out(path);
    out << "ann 1 2 3\n";
  }
  CHECK_THROWS(load_word_embeddings(path, vocab, table));
  std::filesystem::remove(path);
}
