#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fd_check.hpp"
#include "hrank/backbone.hpp"
#include "hrank/rng.hpp"
#include "hrank/tensor.hpp"

using namespace hrank;
using hrank::testing::max_rel_err_vs_fd;
using hrank::testing::random_tensor;

namespace {

EncoderParams zero_encoder(int emb, int hidden) {
  EncoderParams p;
  p.w1 = Tensor::parameter(emb, hidden, std::vector<double>(emb * hidden, 0.0));
  p.b1 = Tensor::parameter(1, hidden, std::vector<double>(hidden, 0.0));
  p.w2 = Tensor::parameter(emb, hidden, std::vector<double>(emb * hidden, 0.0));
  p.b2 = Tensor::parameter(1, hidden, std::vector<double>(hidden, 0.0));
  return p;
}

}  // namespace

TEST_CASE("gated_projection with zero params is zero") {
  Rng rng(1);
  EncoderParams p = zero_encoder(3, 4);
  Tensor e = random_tensor(rng, 5, 3, false);
  Tensor h = gated_projection(e, p);
  for (double v : h.values()) CHECK(v == 0.0);
}

TEST_CASE("gated_projection scalar case") {
  EncoderParams p = zero_encoder(1, 1);
  p.w2.mutable_values()[0] = 1.0;
  Tensor h = gated_projection(Tensor::constant(1, 1, {1.0}), p);
  CHECK(h.at(0, 0) == doctest::Approx(0.38080).epsilon(1e-4));
}

TEST_CASE("gated_projection saturated gate reduces to tanh branch") {
  Rng rng(2);
  EncoderParams p = EncoderParams::init(3, 4, rng);
  for (auto& v : p.b1.mutable_values()) v = 20.0;
  Tensor e = random_tensor(rng, 5, 3, false);
  Tensor h = gated_projection(e, p);
  Tensor want = tanh_op(add_rowvec(matmul(e, p.w2), p.b2));
  for (int i = 0; i < h.numel(); ++i)
    CHECK(std::fabs(h.values()[i] - want.values()[i]) < 1e-8);
}

TEST_CASE("gated_projection rejects empty sequences") {
  Rng rng(3);
  EncoderParams p = EncoderParams::init(3, 4, rng);
  CHECK_THROWS_AS(gated_projection(Tensor::zeros(0, 3), p), std::invalid_argument);
}

TEST_CASE("attend_align with uniform interaction averages the other side") {
  Rng rng(4);
  Tensor hq = Tensor::zeros(2, 3);  // M = 0, uniform attention
  Tensor ha = random_tensor(rng, 4, 3, false);
  Alignment al = attend_align(hq, ha, {});
  for (int j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (int i = 0; i < 4; ++i) mean += ha.at(i, j);
    mean /= 4.0;
    CHECK(al.hq_hat.at(0, j) == doctest::Approx(mean).epsilon(1e-12));
    CHECK(al.hq_hat.at(1, j) == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("attend_align hand example") {
  Tensor hq = Tensor::constant(1, 2, {1, 0});
  Tensor ha = Tensor::constant(2, 2, {1, 0, 0, 1});
  Alignment al = attend_align(hq, ha, {});
  CHECK(al.m.at(0, 0) == doctest::Approx(1).epsilon(1e-12));
  CHECK(al.m.at(0, 1) == doctest::Approx(0).epsilon(1e-12));
  CHECK(al.hq_hat.at(0, 0) == doctest::Approx(0.73106).epsilon(1e-4));
  CHECK(al.hq_hat.at(0, 1) == doctest::Approx(0.26894).epsilon(1e-4));
}

TEST_CASE("k-max with k >= length matches disabled filtering") {
  Rng rng(5);
  Tensor hq = random_tensor(rng, 3, 4, false);
  Tensor ha = random_tensor(rng, 5, 4, false);
  Alignment plain = attend_align(hq, ha, {});
  AttentionConfig big;
  big.kmax_enabled = true;
  big.k = 7;
  Alignment filtered = attend_align(hq, ha, big);
  for (int i = 0; i < plain.hq_hat.numel(); ++i)
    CHECK(plain.hq_hat.values()[i] == filtered.hq_hat.values()[i]);
  for (int i = 0; i < plain.ha_hat.numel(); ++i)
    CHECK(plain.ha_hat.values()[i] == filtered.ha_hat.values()[i]);
}

TEST_CASE("attend_align rejects empty sides") {
  Rng rng(6);
  Tensor hq = random_tensor(rng, 2, 3, false);
  CHECK_THROWS_AS(attend_align(hq, Tensor::zeros(0, 3), {}), std::invalid_argument);
  CHECK_THROWS_AS(attend_align(Tensor::zeros(0, 3), hq, {}), std::invalid_argument);
}

TEST_CASE("attend_align commutes with permutation of answer rows") {
  Rng rng(7);
  Tensor hq = random_tensor(rng, 3, 4, false);
  Tensor ha = random_tensor(rng, 5, 4, false);
  std::vector<int> perm{3, 0, 4, 1, 2};
  Tensor ha_perm = gather_rows(ha, perm).detached();

  AttentionConfig cfg;
  cfg.kmax_enabled = true;
  cfg.k = 2;
  Alignment a = attend_align(hq, ha, cfg);
  Alignment b = attend_align(hq, ha_perm, cfg);

  // Question-side alignment is invariant; answer-side rows and M columns permute.
  for (int i = 0; i < a.hq_hat.numel(); ++i)
    CHECK(a.hq_hat.values()[i] == doctest::Approx(b.hq_hat.values()[i]).epsilon(1e-12));
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 4; ++c)
      CHECK(b.ha_hat.at(r, c) == doctest::Approx(a.ha_hat.at(perm[r], c)).epsilon(1e-12));
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 5; ++c)
      CHECK(b.m.at(r, c) == doctest::Approx(a.m.at(r, perm[c])).epsilon(1e-12));
}

TEST_CASE("masked padding positions do not contribute to attention") {
  Rng rng(8);
  Tensor hq = random_tensor(rng, 3, 4, false);
  Tensor ha = random_tensor(rng, 5, 4, false);
  Alignment plain = attend_align(hq, ha, {});

  Tensor ha_padded = pad_rows(ha, 7).detached();
  std::vector<unsigned char> a_keep{1, 1, 1, 1, 1, 0, 0};
  Alignment masked = attend_align(hq, ha_padded, {}, nullptr, &a_keep);
  for (int i = 0; i < plain.hq_hat.numel(); ++i)
    CHECK(masked.hq_hat.values()[i] == doctest::Approx(plain.hq_hat.values()[i]).epsilon(1e-12));
}

TEST_CASE("compare is elementwise multiplication") {
  Tensor a = Tensor::constant(1, 2, {2, 3});
  Tensor b = Tensor::constant(1, 2, {4, 5});
  Tensor c = compare(a, b);
  CHECK(c.at(0, 0) == 8);
  CHECK(c.at(0, 1) == 15);

  Tensor zeros = Tensor::zeros(1, 2);
  Tensor z = compare(zeros, b);
  for (double v : z.values()) CHECK(v == 0.0);
  Tensor ones = Tensor::full(1, 2, 1.0);
  Tensor id = compare(ones, b);
  for (int i = 0; i < 2; ++i) CHECK(id.values()[i] == b.values()[i]);

  CHECK_THROWS_AS(compare(Tensor::zeros(1, 2), Tensor::zeros(2, 2)), std::invalid_argument);
}

TEST_CASE("convolution primitive matches hand example") {
  // kernel size 1, single channel, weight 1, bias 0, column [1,3,2]
  Tensor x = Tensor::constant(3, 1, {1, 3, 2});
  Tensor w = Tensor::constant(1, 1, {1});
  Tensor conv = matmul(unfold_rows(x, 1), w);
  CHECK(conv.at(0, 0) == 1);
  CHECK(conv.at(1, 0) == 3);
  CHECK(conv.at(2, 0) == 2);
  CHECK(max_over_time(conv).at(0, 0) == 3);
}

TEST_CASE("aggregate of zero input with zero bias is zero") {
  Rng rng(9);
  AggregatorParams p = AggregatorParams::init(4, 3, {1, 2, 3}, rng);
  Tensor c = Tensor::zeros(5, 4);
  Tensor r = aggregate(c, c, p);
  CHECK(r.cols() == p.output_dim());
  for (double v : r.values()) CHECK(v == 0.0);
}

TEST_CASE("full-size aggregate output length is 1500") {
  Rng rng(10);
  AggregatorParams p = AggregatorParams::init(300, 150, {1, 2, 3, 4, 5}, rng);
  CHECK(p.output_dim() == 1500);
  Tensor c = Tensor::zeros(4, 300);
  CHECK(aggregate(c, c, p).cols() == 1500);
}

TEST_CASE("sequences shorter than a kernel size are padded to it") {
  Rng rng(11);
  AggregatorParams p = AggregatorParams::init(3, 2, {1, 2, 4}, rng);
  Tensor c = random_tensor(rng, 2, 3, false);  // shorter than kernel 4
  Tensor r = aggregate_side(c, p);
  CHECK(r.cols() == p.side_dim());
  for (double v : r.values()) CHECK(std::isfinite(v));
}

TEST_CASE("level-specific aggregators are isolated from each other") {
  Rng rng(12);
  AggregatorParams a1 = AggregatorParams::init(3, 2, {1, 2}, rng);
  AggregatorParams a2 = AggregatorParams::init(3, 2, {1, 2}, rng);
  Tensor c = random_tensor(rng, 4, 3, false);
  Tensor before = aggregate_side(c, a2);
  a1.filters[0].mutable_values()[0] += 10.0;
  Tensor after = aggregate_side(c, a2);
  for (int i = 0; i < before.numel(); ++i) CHECK(before.values()[i] == after.values()[i]);
}

TEST_CASE("backbone end-to-end gradient check") {
  Rng rng(13);
  const int emb = 3, hidden = 4;
  EncoderParams enc = EncoderParams::init(emb, hidden, rng);
  AggregatorParams agg = AggregatorParams::init(hidden, 2, {1, 2}, rng);
  Tensor eq = random_tensor(rng, 4, emb);
  Tensor ea = random_tensor(rng, 5, emb);
  Tensor probe = random_tensor(rng, 1, agg.output_dim(), false);

  std::vector<Tensor> params{enc.w1, enc.b1, enc.w2, enc.b2, eq, ea};
  for (auto& f : agg.filters) params.push_back(f);
  for (auto& b : agg.biases) params.push_back(b);

  auto loss_fn = [&]() {
    Tensor hq = gated_projection(eq, enc);
    Tensor ha = gated_projection(ea, enc);
    Alignment al = attend_align(hq, ha, {});
    Tensor r = aggregate(compare(al.hq_hat, hq), compare(al.ha_hat, ha), agg);
    return sum_all(mul(r, probe));
  };
  CHECK(max_rel_err_vs_fd(loss_fn, params) < 1e-3);
}
