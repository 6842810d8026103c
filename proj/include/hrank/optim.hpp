#ifndef HRANK_OPTIM_HPP_
#define HRANK_OPTIM_HPP_

#include <cstdint>
#include <vector>

#include "hrank/tensor.hpp"

namespace hrank {

// Per-parameter Adam state. Moment arrays always match the parameter shape.
struct AdamState {
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  std::int64_t step = 0;
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update. The gradient is left intact; callers
// zero it when the accumulation window (one batch) is over.
void adam_step(Tensor& param, AdamState& state);

// Flat list of parameters, each with its own state so parameter groups
// (model vs. embedding learning rate) fall out naturally.
class AdamOptimizer {
 public:
  void add_param(const Tensor& param, double lr);
  void step();
  void zero_grad();
  std::size_t size() const { return params_.size(); }

 private:
  std::vector<Tensor> params_;
  std::vector<AdamState> states_;
};

}  // namespace hrank

#endif  // HRANK_OPTIM_HPP_
