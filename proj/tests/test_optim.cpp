#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "hrank/optim.hpp"
#include "hrank/tensor.hpp"

using namespace hrank;

TEST_CASE("adam with zero grad leaves parameter unchanged") {
  Tensor p = Tensor::parameter(1, 3, {1.0, -2.0, 3.0});
  p.zero_grad();
  AdamState st;
  adam_step(p, st);
  CHECK(p.values()[0] == 1.0);
  CHECK(p.values()[1] == -2.0);
  CHECK(p.values()[2] == 3.0);
  CHECK(st.step == 1);
}

TEST_CASE("adam first step magnitude is lr*g/(|g|+eps)") {
  Tensor p = Tensor::parameter(1, 1, {0.0});
  p.zero_grad();
  p.mutable_grad()[0] = 0.7;
  AdamState st;
  st.lr = 5e-4;
  adam_step(p, st);
  const double expected = -st.lr * 0.7 / (std::fabs(0.7) + st.epsilon);
  CHECK(p.values()[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("adam requires a gradient") {
  Tensor p = Tensor::parameter(1, 1, {0.0});
  AdamState st;
  CHECK_THROWS_AS(adam_step(p, st), std::invalid_argument);
}

TEST_CASE("adam minimizes (x-3)^2 from x=0 within 500 steps at lr 0.1") {
  Tensor x = Tensor::parameter(1, 1, {0.0});
  Tensor target = Tensor::scalar(3.0);
  AdamState st;
  st.lr = 0.1;
  for (int i = 0; i < 500; ++i) {
    x.zero_grad();
    Tensor d = sub(x, target);
    backward(mul(d, d));
    adam_step(x, st);
    if (std::fabs(x.values()[0] - 3.0) < 1e-3) break;
  }
  CHECK(std::fabs(x.values()[0] - 3.0) < 1e-3);
  CHECK(st.step <= 500);
}

TEST_CASE("optimizer steps all registered params and zeroes grads") {
  Tensor a = Tensor::parameter(1, 1, {1.0});
  Tensor b = Tensor::parameter(1, 1, {1.0});
  AdamOptimizer opt;
  opt.add_param(a, 0.1);
  opt.add_param(b, 0.2);
  backward(add(mul(a, a), mul(b, b)));
  opt.step();
  CHECK(a.values()[0] < 1.0);
  CHECK(b.values()[0] < 1.0);
  opt.zero_grad();
  CHECK(a.grad()[0] == 0.0);
  CHECK(b.grad()[0] == 0.0);
}
