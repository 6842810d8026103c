#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fd_check.hpp"
#include "hrank/ranking.hpp"
#include "hrank/rng.hpp"
#include "hrank/tensor.hpp"

using namespace hrank;
using hrank::testing::max_rel_err_vs_fd;
using hrank::testing::random_tensor;

namespace {

std::vector<int> ranking_of(const std::vector<double>& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

TEST_CASE("point_loss hand values") {
  Tensor uniform = Tensor::constant(3, 2, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  CHECK(point_loss(uniform, {0, 1, 1}).value() == doctest::Approx(std::log(2)).epsilon(1e-9));

  Tensor perfect = Tensor::constant(2, 2, {1, 0, 0, 1});
  CHECK(point_loss(perfect, {0, 1}).value() <= 1e-12);

  Tensor quarter = Tensor::constant(1, 2, {0.75, 0.25});
  CHECK(point_loss(quarter, {1}).value() == doctest::Approx(1.38629).epsilon(1e-5));
}

TEST_CASE("point_loss clamps zero probabilities") {
  Tensor bad = Tensor::constant(1, 2, {1.0, 0.0});
  const double loss = point_loss(bad, {1}).value();
  CHECK(std::isfinite(loss));
  CHECK(loss == doctest::Approx(-std::log(1e-12)).epsilon(1e-9));
}

TEST_CASE("generate_pairs all-pairs is the cross product") {
  CandidateScores cs;
  cs.labels = {1, 1, 0, 0, 0};
  cs.scores = {0.5, 0.6, 0.1, 0.9, 0.4};
  PairGenConfig cfg;
  auto pairs = generate_pairs(cs, cfg);
  CHECK(pairs.size() == 6);  // k=2, t=3
}

TEST_CASE("generate_pairs max-negative picks the hardest negative per positive") {
  CandidateScores cs;
  cs.labels = {1, 1, 0, 0, 0};
  cs.scores = {0.5, 0.6, 0.1, 0.9, 0.4};  // negative scores 0.1, 0.9, 0.4
  PairGenConfig cfg;
  cfg.method = PairMethod::max_negative;
  auto pairs = generate_pairs(cs, cfg);
  REQUIRE(pairs.size() == 2);  // k pairs
  CHECK(pairs[0] == std::pair<int, int>(0, 3));
  CHECK(pairs[1] == std::pair<int, int>(1, 3));
}

TEST_CASE("generate_pairs with no negatives is empty and pair_loss is zero") {
  CandidateScores cs;
  cs.labels = {1};
  cs.scores = {0.4};
  auto pairs = generate_pairs(cs, {});
  CHECK(pairs.empty());
  CHECK(pair_loss(Tensor::constant(1, 1, {0.4}), pairs, {}).value() == 0.0);
}

TEST_CASE("generate_pairs counts across random k and t") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = rng.uniform_int(1, 5);
    const int t = rng.uniform_int(0, 6);
    CandidateScores cs;
    for (int i = 0; i < k; ++i) cs.labels.push_back(1);
    for (int i = 0; i < t; ++i) cs.labels.push_back(0);
    rng.shuffle(cs.labels);
    for (std::size_t i = 0; i < cs.labels.size(); ++i) cs.scores.push_back(rng.normal());

    PairGenConfig all, maxneg;
    maxneg.method = PairMethod::max_negative;
    CHECK(generate_pairs(cs, all).size() == static_cast<std::size_t>(k * t));
    CHECK(generate_pairs(cs, maxneg).size() == static_cast<std::size_t>(t > 0 ? k : 0));
  }
}

TEST_CASE("pair_loss hand values") {
  PairGenConfig cfg;  // margin 1, no sigmoid
  Tensor s1 = Tensor::constant(2, 1, {0.9, 0.3});
  CHECK(pair_loss(s1, {{0, 1}}, cfg).value() == doctest::Approx(0.4).epsilon(1e-12));

  Tensor s2 = Tensor::constant(2, 1, {2.0, 0.5});
  CHECK(pair_loss(s2, {{0, 1}}, cfg).value() == 0.0);

  Tensor s3 = Tensor::constant(4, 1, {0.9, 0.3, 2.0, 0.5});
  CHECK(pair_loss(s3, {{0, 1}, {2, 3}}, cfg).value() == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("pair_loss is zero iff every pair satisfies the margin") {
  Rng rng(32);
  PairGenConfig cfg;
  cfg.margin = 0.5;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(2, 6);
    Tensor s = random_tensor(rng, n, 1, false);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i + 1 < n; i += 2) pairs.emplace_back(i, i + 1);
    bool all_satisfied = true;
    for (auto [p, q] : pairs)
      if (s.at(p, 0) - s.at(q, 0) < cfg.margin) all_satisfied = false;
    const double loss = pair_loss(s, pairs, cfg).value();
    CHECK(loss >= 0.0);
    CHECK((loss == 0.0) == all_satisfied);
  }
}

TEST_CASE("sigmoid normalization changes pair_loss but not the induced ranking") {
  Rng rng(33);
  Tensor s = random_tensor(rng, 5, 1, false);
  std::vector<std::pair<int, int>> pairs{{0, 1}, {2, 3}, {0, 4}};
  PairGenConfig plain, norm;
  plain.margin = norm.margin = 0.8;
  norm.sigmoid_normalize = true;
  CHECK(pair_loss(s, pairs, plain).value() != pair_loss(s, pairs, norm).value());

  std::vector<double> raw = s.values();
  std::vector<double> squashed(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) squashed[i] = 1.0 / (1.0 + std::exp(-raw[i]));
  CHECK(ranking_of(raw) == ranking_of(squashed));
}

TEST_CASE("normalize_labels") {
  CHECK(normalize_labels({1, 1, 0, 0, 0}) == std::vector<double>{0.5, 0.5, 0, 0, 0});
  CHECK(normalize_labels({1}) == std::vector<double>{1});
  CHECK_THROWS_AS(normalize_labels({0, 0}), std::invalid_argument);
  auto y = normalize_labels({1, 0, 1, 1, 0});
  CHECK(std::accumulate(y.begin(), y.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("list_loss hand values") {
  // identical prediction and labels, no negatives
  Tensor equal = Tensor::constant(2, 1, {0.7, 0.7});
  CHECK(list_loss(equal, {1, 1}).value() == doctest::Approx(0.0).epsilon(1e-12));

  // uniform scores over 3 candidates, one positive: KL = ln 3, divided by 3
  Tensor uniform = Tensor::constant(3, 1, {0.2, 0.2, 0.2});
  CHECK(list_loss(uniform, {1, 0, 0}).value() ==
        doctest::Approx(std::log(3.0) / 3.0).epsilon(1e-9));
  CHECK(list_loss(uniform, {1, 0, 0}).value() == doctest::Approx(0.36620).epsilon(1e-4));
}

TEST_CASE("list_loss is a non-negative divergence matching the direct formula") {
  Rng rng(34);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = rng.uniform_int(2, 7);
    std::vector<int> labels(n, 0);
    labels[rng.uniform_int(0, n - 1)] = 1;
    for (int i = 0; i < n; ++i)
      if (rng.uniform_real() < 0.3) labels[i] = 1;
    Tensor s = random_tensor(rng, n, 1, false, 2.0);

    const double loss = list_loss(s, labels).value();
    CHECK(loss >= 0.0);

    // direct formula oracle
    std::vector<double> p(n);
    double mx = *std::max_element(s.values().begin(), s.values().end());
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += (p[i] = std::exp(s.at(i, 0) - mx));
    for (auto& v : p) v /= sum;
    auto yhat = normalize_labels(labels);
    double kl = 0.0;
    for (int i = 0; i < n; ++i)
      if (yhat[i] > 0.0) kl += yhat[i] * std::log(yhat[i] / p[i]);
    CHECK(loss == doctest::Approx(kl / n).epsilon(1e-9));
  }
}

TEST_CASE("losses flow correct gradients through a head") {
  Rng rng(35);
  const int in_dim = 6, n = 4;
  HeadParams point_head = HeadParams::init(in_dim, 5, 2, rng);
  HeadParams pair_head = HeadParams::init(in_dim, 5, 1, rng);
  HeadParams list_head = HeadParams::init(in_dim, 5, 1, rng);
  Tensor x = random_tensor(rng, n, in_dim);
  std::vector<int> labels{1, 0, 1, 0};

  std::vector<Tensor> params{x};
  for (auto* h : {&point_head, &pair_head, &list_head}) {
    params.push_back(h->wh);
    params.push_back(h->bh);
    params.push_back(h->wo);
    params.push_back(h->bo);
  }

  PairGenConfig cfg;
  cfg.margin = 0.8;
  cfg.sigmoid_normalize = true;
  auto loss_fn = [&]() {
    Tensor lp = point_loss(row_softmax(point_head.apply(x)), labels);
    Tensor pair_scores = pair_head.apply(x);
    CandidateScores cs{pair_scores.values(), labels};
    Tensor lpr = pair_loss(pair_scores, generate_pairs(cs, cfg), cfg);
    Tensor ll = list_loss(list_head.apply(x), labels);
    return add(add(lp, lpr), ll);
  };
  CHECK(max_rel_err_vs_fd(loss_fn, params) < 1e-6);
}

TEST_CASE("predict_scores per level") {
  Tensor probs = Tensor::constant(2, 2, {0.5, 0.5, 0.9, 0.1});
  Tensor pair_s = Tensor::constant(2, 1, {0.3, 0.7});
  Tensor list_s = Tensor::constant(2, 1, {1.0, 1.0});

  auto point = predict_scores(Level::point, probs, pair_s, list_s);
  CHECK(point[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(point[1] == doctest::Approx(0.1).epsilon(1e-12));

  auto pair = predict_scores(Level::pair, probs, pair_s, list_s);
  CHECK(pair == std::vector<double>{0.3, 0.7});

  auto list = predict_scores(Level::list, probs, pair_s, list_s);
  CHECK(list[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(list[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("monotone transforms keep the pair ranking") {
  Rng rng(36);
  Tensor s = random_tensor(rng, 6, 1, false);
  std::vector<double> raw = s.values();
  std::vector<double> scaled(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) scaled[i] = 3.0 * raw[i] + 7.0;
  CHECK(ranking_of(raw) == ranking_of(scaled));
}

TEST_CASE("all three losses are non-negative on random inputs") {
  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.uniform_int(2, 6);
    std::vector<int> labels(n, 0);
    labels[rng.uniform_int(0, n - 1)] = 1;
    Tensor logits = random_tensor(rng, n, 2, false);
    CHECK(point_loss(row_softmax(logits), labels).value() >= 0.0);
    Tensor s = random_tensor(rng, n, 1, false);
    CandidateScores cs{s.values(), labels};
    CHECK(pair_loss(s, generate_pairs(cs, {}), {}).value() >= 0.0);
    CHECK(list_loss(s, labels).value() >= 0.0);
  }
}
