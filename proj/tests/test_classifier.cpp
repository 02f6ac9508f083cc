#include <cmath>
#include <random>

#include "doctest.h"
#include "lace/classifier.hpp"
#include "lace/errors.hpp"
#include "lace/grad_check.hpp"
#include "lace/ops.hpp"
#include "test_util.hpp"

using namespace lace;
using lace::testing::random_tensor;

namespace {

double scalar(const Var& v) { return v.value().item(); }

PairScores scores_from_probs(const std::vector<double>& probs) {
  PairScores s;
  for (double p : probs) s.logits.push_back(std::log(p / (1.0 - p)));
  return s;
}

}  // namespace

TEST_CASE("project") {
  Tape t;
  const Var gain = t.constant(Tensor::row({1.0, 1.0})), bias = t.constant(Tensor::row({0.25, -0.5}));
  const Var e = t.constant(Tensor::row({1.0, 2.0, 2.0}));
  CHECK(project(e, t.constant(Tensor({2, 3})), gain, bias, 1e-5).value() == Tensor::row({0.25, -0.5}));

  // Row 0 parallel to E, row 1 orthogonal: pre-norm [|E|^2, 0] = [9, 0].
  const Var rel = t.constant(Tensor::matrix({{1, 2, 2}, {2, -1, 0}}));
  const Tensor pre = ops::matmul(e, ops::transpose(rel)).value();
  CHECK(pre == Tensor::row({9.0, 0.0}));
  const Tensor out = project(e, rel, gain, t.constant(Tensor({1, 2})), 1e-12).value();
  CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(out[1] == doctest::Approx(-1.0).epsilon(1e-9));

  std::mt19937_64 g(1);
  const Var many = t.constant(random_tensor({4, 3}, g));
  const Var rel5 = t.constant(random_tensor({5, 3}, g));
  const Var g5 = t.constant(Tensor({1, 5}, 1.0)), b5 = t.constant(Tensor({1, 5}));
  CHECK(project(many, rel5, g5, b5, 1e-5).shape() == Shape{4, 5});
  CHECK_THROWS_AS(project(many, t.constant(Tensor({5, 4})), g5, b5, 1e-5), ShapeError);
}

TEST_CASE("bilinear scores") {
  ParamStore store;
  Rng rng(2);
  init_classifier_params(store, ClassifierConfig{}, 3, 4, rng);
  CHECK(store.get("classifier.W").shape() == Shape{4, 1, 7, 7});

  Tape t;
  std::mt19937_64 g(3);
  const Var zero_w = t.constant(Tensor({4, 1, 7, 7}));
  const Var zero_b = t.constant(Tensor({1, 4}));
  const Var s = t.constant(random_tensor({2, 7}, g)), o = t.constant(random_tensor({2, 7}, g));
  const Tensor logits = bilinear_score(s, o, zero_w, zero_b).value();
  for (double l : logits.data()) CHECK(sigmoid(l) == 0.5);

  // Dense quadratic form oracle, two classes.
  const Tensor w = random_tensor({2, 1, 3, 3}, g), b = random_tensor({1, 2}, g);
  const Tensor x = random_tensor({1, 3}, g), y = random_tensor({1, 3}, g);
  const Tensor got = bilinear_score(t.constant(x), t.constant(y), t.constant(w), t.constant(b)).value();
  for (std::size_t c = 0; c < 2; ++c) {
    double acc = b[c];
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) acc += x[i] * w[(c * 3 + i) * 3 + j] * y[j];
    CHECK(std::abs(got(0, c) - acc) < 1e-12);
  }

  ParamStore grouped;
  ClassifierConfig cfg;
  cfg.bilinear_groups = 7;
  init_classifier_params(grouped, cfg, 3, 4, rng);
  CHECK(grouped.get("classifier.W").shape() == Shape{4, 7, 1, 1});
  cfg.bilinear_groups = 2;
  ParamStore bad;
  CHECK_THROWS_AS(init_classifier_params(bad, cfg, 3, 4, rng), ConfigError);
}

TEST_CASE("MAT positive term") {
  Tape t;
  // P(TH) = 0.5, one gold class with P = 0.5.
  const Var zeros = t.constant(Tensor::row({0.0, 3.0, 0.0}));
  CHECK(scalar(mat_loss_positive(zeros, {0})) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(scalar(mat_loss_positive(zeros, {0})) == doctest::Approx(1.386).epsilon(1e-3));
  // Empty gold: only -log(1 - P(TH)).
  const Var l = t.constant(Tensor::row({1.0, -2.0, 0.7}));
  CHECK(scalar(mat_loss_positive(l, {})) == doctest::Approx(-std::log(1.0 - sigmoid(0.7))).epsilon(1e-14));
  const Var perfect = t.constant(Tensor::row({40.0, 40.0, -40.0}));
  CHECK(scalar(mat_loss_positive(perfect, {0, 1})) < 1e-15);
  CHECK_THROWS_AS(mat_loss_positive(l, {2}), ShapeError);
}

TEST_CASE("MAT negative term") {
  Tape t;
  const Var all_gold = t.constant(Tensor::row({1.0, -3.0, 0.2}));
  CHECK(scalar(mat_loss_negative(all_gold, {0, 1})) == 0.0);
  const Var two = t.constant(Tensor::row({0.0, 9.0, 0.0}));
  CHECK(scalar(mat_loss_negative(two, {1})) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  const Var dominant = t.constant(Tensor::row({-20.0, -25.0, 30.0}));
  CHECK(scalar(mat_loss_negative(dominant, {})) < 1e-20);
}

TEST_CASE("total loss") {
  Tape t;
  const Var lp = t.constant(Tensor::scalar(1.0)), ln = t.constant(Tensor::scalar(3.0));
  CHECK(scalar(total_loss(lp, ln, 0.4)) == doctest::Approx(2.2).epsilon(1e-15));
  CHECK(scalar(total_loss(lp, ln, 1.0)) == 1.0);
  CHECK(scalar(total_loss(lp, ln, 0.0)) == 3.0);
  CHECK_THROWS_AS(total_loss(lp, ln, -0.1), ConfigError);
  CHECK_THROWS_AS(total_loss(lp, ln, 1.5), ConfigError);
}

TEST_CASE("losses are non-negative and finite for bounded logits") {
  std::mt19937_64 g(4);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 500; ++trial) {
    Tape t;
    const Var l = t.constant(random_tensor({1, 6}, g, -30, 30));
    std::set<std::size_t> gold;
    for (std::size_t c = 0; c < 5; ++c)
      if (coin(g)) gold.insert(c);
    const double lp = scalar(mat_loss_positive(l, gold));
    const double ln = scalar(mat_loss_negative(l, gold));
    const double at = scalar(at_loss_positive(l, gold));
    CHECK(std::isfinite(lp));
    CHECK(lp >= 0.0);
    CHECK(ln >= 0.0);
    CHECK(at >= 0.0);
    CHECK(std::isfinite(scalar(pair_loss(l, gold, LossKind::Mat, 0.4))));
  }
}

TEST_CASE("adaptive-threshold positive term") {
  Tape t;
  const Var l = t.constant(Tensor::row({0.0, 0.0, 5.0, 0.0}));
  // Joint softmax over {0, 1, TH}: each gold class has probability 1/3.
  CHECK(scalar(at_loss_positive(l, {0, 1})) == doctest::Approx(2.0 * std::log(3.0)).epsilon(1e-14));
  CHECK(scalar(at_loss_positive(l, {})) == 0.0);
  CHECK(scalar(pair_loss(l, {0}, LossKind::AdaptiveThreshold, 0.4)) ==
        doctest::Approx(std::log(2.0) + scalar(mat_loss_negative(l, {0}))).epsilon(1e-14));
}

TEST_CASE("loss gradients match finite differences") {
  std::mt19937_64 g(5);
  const std::set<std::size_t> golds[] = {{}, {1}, {0, 3}, {0, 1, 2, 3}};
  for (const auto& gold : golds) {
    std::vector<Tensor> p{random_tensor({1, 5}, g, -4, 4)};
    for (LossKind kind : {LossKind::Mat, LossKind::AdaptiveThreshold}) {
      const auto r = grad_check([&](Tape&, std::span<const Var> v) { return pair_loss(v[0], gold, kind, 0.4); }, p);
      CHECK(r.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("predict") {
  const PairScores s = scores_from_probs({0.9, 0.2, 0.4});
  CHECK(predict(s, 0.85) == std::set<std::size_t>{0});
  CHECK(predict(scores_from_probs({0.5, 0.3, 0.5}), 0.0) == std::set<std::size_t>{0});
  CHECK(predict(scores_from_probs({0.3, 0.2, 0.6}), 0.1).empty());
  CHECK_THROWS_AS(predict(s, -0.5), ConfigError);

  std::mt19937_64 g(6);
  std::uniform_real_distribution<double> logit(-6, 6), th(0, 3);
  for (int trial = 0; trial < 300; ++trial) {
    PairScores p;
    for (int c = 0; c < 8; ++c) p.logits.push_back(logit(g));
    double a = th(g), b = th(g);
    if (a > b) std::swap(a, b);
    const auto loose = predict(p, a), tight = predict(p, b);
    for (std::size_t c : tight) CHECK(loose.count(c) == 1);
  }
}

TEST_CASE("parameters exist that predict two relations for one pair") {
  // Zero bilinear forms leave logits equal to the biases.
  ParamStore store;
  Rng rng(7);
  init_classifier_params(store, ClassifierConfig{}, 3, 2, rng);
  store.get("classifier.W").fill(0.0);
  store.get("classifier.b") = Tensor::row({4.0, 3.0, -4.0, -1.0});
  Tape t;
  std::mt19937_64 g(8);
  const Tensor logits = bilinear_score(t.constant(random_tensor({1, 5}, g)), t.constant(random_tensor({1, 5}, g)),
                                       t.constant(store.get("classifier.W")), t.constant(store.get("classifier.b")))
                            .value();
  PairScores s;
  s.logits.assign(logits.data().begin(), logits.data().end());
  CHECK(predict(s, 0.85) == std::set<std::size_t>{0, 1});
  // Those logits also give the lowest MAT loss among sign flips of the gold pair.
  const Var l = t.constant(logits);
  CHECK(scalar(pair_loss(l, {0, 1}, LossKind::Mat, 0.4)) < scalar(pair_loss(l, {2}, LossKind::Mat, 0.4)));
}

TEST_CASE("adaptive-threshold decoding") {
  PairScores s;
  s.logits = {1.0, -0.5, 0.2, 0.2};
  CHECK(predict_above_threshold(s) == std::set<std::size_t>{0});
  s.logits = {-2.0, -3.0, -1.0};
  CHECK(predict_above_threshold(s).empty());

  // MAT decoding demands the (1 + theta) margin, AT decoding does not.
  const PairScores m = scores_from_probs({0.55, 0.5});
  CHECK(decode_pair(m, 0.85, LossKind::Mat).empty());
  CHECK(decode_pair(m, 0.85, LossKind::AdaptiveThreshold) == std::set<std::size_t>{0});
  CHECK(decode_pair(m, 0.0, LossKind::Mat) == std::set<std::size_t>{0});

  std::mt19937_64 g(9);
  std::uniform_real_distribution<double> logit(-5, 5);
  for (int trial = 0; trial < 200; ++trial) {
    PairScores p;
    for (int c = 0; c < 6; ++c) p.logits.push_back(logit(g));
    CHECK(decode_pair(p, 0.4, LossKind::Mat) == predict(p, 0.4));
    CHECK(decode_pair(p, 0.4, LossKind::AdaptiveThreshold) == predict_above_threshold(p));
    // theta = 0 under MAT is the same comparison in probability space.
    CHECK(predict(p, 0.0) == predict_above_threshold(p));
  }
}
