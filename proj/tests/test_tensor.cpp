#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fd_check.hpp"
#include "hrank/rng.hpp"
#include "hrank/tensor.hpp"

using namespace hrank;
using hrank::testing::max_rel_err_vs_fd;
using hrank::testing::random_tensor;
using hrank::testing::random_tensor_off_kink;
using hrank::testing::random_tensor_separated;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("matmul hand examples") {
  Tensor a = Tensor::constant(2, 2, {1, 2, 3, 4});
  Tensor b = Tensor::constant(2, 1, {1, 1});
  Tensor c = matmul(a, b);
  CHECK(c.rows() == 2);
  CHECK(c.cols() == 1);
  CHECK(c.at(0, 0) == doctest::Approx(3).epsilon(1e-15));
  CHECK(c.at(1, 0) == doctest::Approx(7).epsilon(1e-15));
}

TEST_CASE("matmul identity leaves operand unchanged") {
  Rng rng(7);
  Tensor x = random_tensor(rng, 4, 6, false);
  std::vector<double> eye(16, 0.0);
  for (int i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0;
  Tensor ix = matmul(Tensor::constant(4, 4, eye), x);
  for (int i = 0; i < x.numel(); ++i) CHECK(ix.values()[i] == x.values()[i]);
}

TEST_CASE("matmul matches triple-loop reference") {
  Rng rng(11);
  Tensor a = random_tensor(rng, 5, 4, false);
  Tensor b = random_tensor(rng, 4, 3, false);
  Tensor c = matmul(a, b);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 3; ++j) {
      double ref = 0.0;
      for (int k = 0; k < 4; ++k) ref += a.at(i, k) * b.at(k, j);
      CHECK(std::fabs(c.at(i, j) - ref) < 1e-12);
    }
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tensor a = Tensor::zeros(5, 4);
  Tensor b = Tensor::zeros(3, 2);
  try {
    matmul(a, b);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("[5x4]") != std::string::npos);
    CHECK(msg.find("[3x2]") != std::string::npos);
  }
}

TEST_CASE("row_softmax hand examples") {
  Tensor s = row_softmax(Tensor::constant(1, 2, {0, 0}));
  CHECK(s.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

  Tensor t = row_softmax(Tensor::constant(1, 2, {1, 0}));
  CHECK(t.at(0, 0) == doctest::Approx(0.73106).epsilon(1e-4));
  CHECK(t.at(0, 1) == doctest::Approx(0.26894).epsilon(1e-4));
}

TEST_CASE("row_softmax shift invariance and row sums") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = random_tensor(rng, 3, 5, false, 2.0);
    const double c = rng.normal(0.0, 10.0);
    Tensor shifted = Tensor::constant(3, 5, x.values());
    for (auto& v : shifted.mutable_values()) v += c;
    Tensor p = row_softmax(x);
    Tensor q = row_softmax(shifted);
    for (int i = 0; i < p.numel(); ++i)
      CHECK(p.values()[i] == doctest::Approx(q.values()[i]).epsilon(1e-9));
    for (int i = 0; i < 3; ++i) {
      double sum = 0.0;
      for (int j = 0; j < 5; ++j) sum += p.at(i, j);
      CHECK(std::fabs(sum - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("row_softmax treats -inf as masked and rejects fully masked rows") {
  Tensor x = Tensor::constant(1, 3, {1.0, -kInf, 1.0});
  Tensor p = row_softmax(x);
  CHECK(p.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p.at(0, 1) == 0.0);
  CHECK(p.at(0, 2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(row_softmax(Tensor::constant(1, 2, {-kInf, -kInf})),
                  std::invalid_argument);
}

TEST_CASE("backward of dot(x, x) is 2x") {
  Tensor x = Tensor::parameter(1, 2, {1, 2});
  Tensor loss = sum_all(mul(x, x));
  backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(2).epsilon(1e-12));
  CHECK(x.grad()[1] == doctest::Approx(4).epsilon(1e-12));
}

TEST_CASE("sigmoid derivative at zero is 0.25") {
  Tensor z = Tensor::parameter(1, 1, {0.0});
  Tensor s = sigmoid(z);
  backward(s);
  CHECK(z.grad()[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("backward rejects non-scalar roots") {
  Tensor x = Tensor::parameter(2, 2, {1, 2, 3, 4});
  CHECK_THROWS_AS(backward(mul(x, x)), std::invalid_argument);
}

TEST_CASE("repeated backward accumulates leaf grads") {
  Tensor x = Tensor::parameter(1, 2, {1, 2});
  Tensor loss = sum_all(mul(x, x));
  backward(loss);
  backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(4).epsilon(1e-12));
  CHECK(x.grad()[1] == doctest::Approx(8).epsilon(1e-12));
}

TEST_CASE("max_over_time routes gradient to argmax only, ties to lowest index") {
  Tensor x = Tensor::parameter(3, 2, {1, 5, 7, 5, 7, 2});
  Tensor m = max_over_time(x);
  CHECK(m.at(0, 0) == 7);
  CHECK(m.at(0, 1) == 5);
  backward(sum_all(m));
  // col 0: max 7 first reached at row 1; col 1: tie of 5 at rows 0 and 1 -> row 0
  std::vector<double> want{0, 1, 1, 0, 0, 0};
  for (int i = 0; i < 6; ++i) CHECK(x.grad()[i] == want[i]);
}

TEST_CASE("graph evaluation is deterministic") {
  Rng rng(5);
  Tensor a = random_tensor(rng, 4, 4, false);
  Tensor b = random_tensor(rng, 4, 4, false);
  Tensor r1 = row_softmax(matmul(tanh_op(a), sigmoid(b)));
  Tensor r2 = row_softmax(matmul(tanh_op(a), sigmoid(b)));
  for (int i = 0; i < r1.numel(); ++i) CHECK(r1.values()[i] == r2.values()[i]);
}

TEST_CASE("composite graph matches central finite differences") {
  // All op kinds chained into one scalar; the independent oracle is FD.
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor w1 = random_tensor(rng, 4, 3);
    Tensor w2 = random_tensor(rng, 4, 3);
    Tensor bias = random_tensor(rng, 1, 3);
    Tensor e = random_tensor(rng, 5, 4);
    std::vector<Tensor> params{w1, w2, bias, e};
    auto loss_fn = [&]() {
      Tensor h = mul(sigmoid(add_rowvec(matmul(e, w1), bias)), tanh_op(matmul(e, w2)));
      Tensor m = matmul_transb(h, h);
      Tensor att = matmul(row_softmax(m), h);
      Tensor cmp = mul(att, h);
      Tensor parts[] = {cmp, h};
      Tensor cat = concat_cols(parts);
      Tensor pooled = max_over_time(cat);
      return mean_all(mul(pooled, pooled));
    };
    CHECK(max_rel_err_vs_fd(loss_fn, params) < 1e-6);
  }
}

TEST_CASE("every op passes central finite-difference checks") {
  struct OpCheck {
    const char* name;
    std::function<double(Rng&)> run;  // returns max rel err for one trial
  };

  auto fd1 = [](Tensor x, const std::function<Tensor(const Tensor&)>& op) {
    std::vector<Tensor> params{x};
    auto fn = [&]() { return mean_all(op(params[0])); };
    return max_rel_err_vs_fd(fn, params);
  };
  auto fd2 = [](Tensor a, Tensor b, const std::function<Tensor(const Tensor&, const Tensor&)>& op) {
    std::vector<Tensor> params{a, b};
    auto fn = [&]() { return mean_all(op(params[0], params[1])); };
    return max_rel_err_vs_fd(fn, params);
  };

  std::vector<OpCheck> checks{
      {"matmul", [&](Rng& r) {
         return fd2(random_tensor(r, 3, 4), random_tensor(r, 4, 2),
                    [](const Tensor& a, const Tensor& b) { return matmul(a, b); });
       }},
      {"matmul_transb", [&](Rng& r) {
         return fd2(random_tensor(r, 3, 4), random_tensor(r, 5, 4),
                    [](const Tensor& a, const Tensor& b) { return matmul_transb(a, b); });
       }},
      {"transpose", [&](Rng& r) {
         return fd1(random_tensor(r, 3, 4),
                    [](const Tensor& x) { return mul(transpose(x), transpose(x)); });
       }},
      {"add", [&](Rng& r) {
         return fd2(random_tensor(r, 3, 3), random_tensor(r, 3, 3),
                    [](const Tensor& a, const Tensor& b) { return mul(add(a, b), add(a, b)); });
       }},
      {"add_rowvec", [&](Rng& r) {
         return fd2(random_tensor(r, 4, 3), random_tensor(r, 1, 3),
                    [](const Tensor& a, const Tensor& b) { return mul(add_rowvec(a, b), a); });
       }},
      {"sub", [&](Rng& r) {
         return fd2(random_tensor(r, 3, 3), random_tensor(r, 3, 3),
                    [](const Tensor& a, const Tensor& b) { return mul(sub(a, b), a); });
       }},
      {"mul", [&](Rng& r) {
         return fd2(random_tensor(r, 3, 3), random_tensor(r, 3, 3),
                    [](const Tensor& a, const Tensor& b) { return mul(a, b); });
       }},
      {"scale", [&](Rng& r) {
         return fd1(random_tensor(r, 3, 3), [](const Tensor& x) { return scale(x, -2.5); });
       }},
      {"add_scalar", [&](Rng& r) {
         return fd1(random_tensor(r, 3, 3),
                    [](const Tensor& x) { return mul(add_scalar(x, 1.5), x); });
       }},
      {"sigmoid", [&](Rng& r) {
         return fd1(random_tensor(r, 3, 3), [](const Tensor& x) { return sigmoid(x); });
       }},
      {"tanh", [&](Rng& r) {
         return fd1(random_tensor(r, 3, 3), [](const Tensor& x) { return tanh_op(x); });
       }},
      {"relu", [&](Rng& r) {
         return fd1(random_tensor_off_kink(r, 3, 3), [](const Tensor& x) { return relu(x); });
       }},
      {"log_clamped", [&](Rng& r) {
         Tensor x = random_tensor(r, 3, 3);
         for (auto& v : x.mutable_values()) v = std::fabs(v) + 0.1;
         return fd1(x, [](const Tensor& t) { return log_clamped(t); });
       }},
      {"row_softmax", [&](Rng& r) {
         return fd1(random_tensor(r, 3, 4), [](const Tensor& x) { return row_softmax(x); });
       }},
      {"kmax_row_filter", [&](Rng& r) {
         return fd1(random_tensor_separated(r, 3, 5, 1e-2, false),
                    [](const Tensor& x) { return row_softmax(kmax_row_filter(x, 2)); });
       }},
      {"mask_cols_neginf", [&](Rng& r) {
         return fd1(random_tensor(r, 3, 5), [](const Tensor& x) {
           return row_softmax(mask_cols_neginf(x, {1, 1, 0, 1, 0}));
         });
       }},
      {"concat_cols", [&](Rng& r) {
         return fd2(random_tensor(r, 3, 2), random_tensor(r, 3, 4),
                    [](const Tensor& a, const Tensor& b) {
                      Tensor parts[] = {a, b};
                      Tensor c = concat_cols(parts);
                      return mul(c, c);
                    });
       }},
      {"concat_rows", [&](Rng& r) {
         return fd2(random_tensor(r, 2, 3), random_tensor(r, 4, 3),
                    [](const Tensor& a, const Tensor& b) {
                      Tensor parts[] = {a, b};
                      Tensor c = concat_rows(parts);
                      return mul(c, c);
                    });
       }},
      {"gather_rows", [&](Rng& r) {
         return fd1(random_tensor(r, 4, 3), [](const Tensor& x) {
           Tensor g = gather_rows(x, {0, 2, 2, 3});  // repeated row exercises scatter-add
           return mul(g, g);
         });
       }},
      {"unfold_rows", [&](Rng& r) {
         return fd1(random_tensor(r, 5, 3), [](const Tensor& x) {
           Tensor u = unfold_rows(x, 2);
           return mul(u, u);
         });
       }},
      {"pad_rows", [&](Rng& r) {
         return fd1(random_tensor(r, 2, 3), [](const Tensor& x) {
           Tensor p = pad_rows(x, 4);
           return mul(p, p);
         });
       }},
      {"max_over_time", [&](Rng& r) {
         return fd1(random_tensor_separated(r, 4, 3),
                    [](const Tensor& x) { return max_over_time(x); });
       }},
      {"sum_all", [&](Rng& r) {
         return fd1(random_tensor(r, 3, 3),
                    [](const Tensor& x) { return sum_all(mul(x, x)); });
       }},
      {"mean_all", [&](Rng& r) {
         return fd1(random_tensor(r, 3, 3), [](const Tensor& x) { return mean_all(mul(x, x)); });
       }},
  };

  for (const auto& c : checks) {
    CAPTURE(c.name);
    double worst = 0.0;
    Rng rng(901);
    for (int trial = 0; trial < 100; ++trial) worst = std::max(worst, c.run(rng));
    CHECK_MESSAGE(worst < 1e-6, c.name << " worst rel err " << worst);
  }
}

TEST_CASE("kmax keeps the k largest per row and is a no-op when k >= cols") {
  Tensor x = Tensor::constant(1, 4, {0.3, 0.9, 0.1, 0.5});
  Tensor f = kmax_row_filter(x, 2);
  CHECK(f.at(0, 0) == -kInf);
  CHECK(f.at(0, 1) == 0.9);
  CHECK(f.at(0, 2) == -kInf);
  CHECK(f.at(0, 3) == 0.5);
  Tensor g = kmax_row_filter(x, 9);
  for (int j = 0; j < 4; ++j) CHECK(g.at(0, j) == x.at(0, j));
}

TEST_CASE("grad shape mirrors value shape after backward") {
  Tensor x = Tensor::parameter(2, 3, {1, 2, 3, 4, 5, 6});
  backward(mean_all(mul(x, x)));
  CHECK(x.grad().size() == x.values().size());
}
