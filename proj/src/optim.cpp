#include "hrank/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace hrank {

void adam_step(Tensor& param, AdamState& state) {
  if (!param.has_grad())
    throw std::invalid_argument("adam_step: parameter has no gradient");
  const std::size_t n = param.values().size();
  if (state.m.empty()) state.m.assign(n, 0.0);
  if (state.v.empty()) state.v.assign(n, 0.0);
  if (state.m.size() != n || state.v.size() != n)
    throw std::invalid_argument("adam_step: moment shape does not match parameter");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  auto& p = param.mutable_values();
  const auto& g = param.grad();
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

void AdamOptimizer::add_param(const Tensor& param, double lr) {
  params_.push_back(param);
  AdamState st;
  st.lr = lr;
  states_.push_back(std::move(st));
}

void AdamOptimizer::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].has_grad()) params_[i].zero_grad();
    adam_step(params_[i], states_[i]);
  }
}

void AdamOptimizer::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace hrank
