#ifndef HRANK_BACKBONE_HPP_
#define HRANK_BACKBONE_HPP_

#include <string>
#include <utility>
#include <vector>

#include "hrank/rng.hpp"
#include "hrank/tensor.hpp"

namespace hrank {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Gated projection encoder, shared between question and answer sides:
// H = sigmoid(E*W1 + b1) (x) tanh(E*W2 + b2).
struct EncoderParams {
  Tensor w1, b1, w2, b2;

  static EncoderParams init(int emb_dim, int hidden, Rng& rng);
  int emb_dim() const { return w1.rows(); }
  int hidden() const { return w1.cols(); }
  void collect(const std::string& prefix, NamedTensors& out) const;
};

// One-layer CNN over the comparison sequence: per kernel size, a valid
// 1-D convolution (filters stored flattened as [(size*in_dim) x channels]),
// tanh, then max-over-time. One independent instance per ranking level.
struct AggregatorParams {
  std::vector<int> kernel_sizes;
  std::vector<Tensor> filters;
  std::vector<Tensor> biases;
  int in_dim = 0;
  int channels = 0;

  static AggregatorParams init(int in_dim, int channels, std::vector<int> kernel_sizes,
                               Rng& rng);
  // Per side; both sides concatenated double it.
  int side_dim() const { return channels * static_cast<int>(kernel_sizes.size()); }
  int output_dim() const { return 2 * side_dim(); }
  void collect(const std::string& prefix, NamedTensors& out) const;
};

struct AttentionConfig {
  bool kmax_enabled = false;
  int k = 10;
};

struct Alignment {
  Tensor hq_hat;  // [n x h]
  Tensor ha_hat;  // [m x h]
  Tensor m;       // raw interaction matrix [n x m], before any filtering
};

Tensor gated_projection(const Tensor& e, const EncoderParams& params);

// Co-attention with soft alignment. Optional keep-masks flag which
// positions are real tokens (0 entries are treated as padding and removed
// from the softmax in both directions). k-max filtering, when enabled,
// applies to the rows of both M and M^T.
Alignment attend_align(const Tensor& hq, const Tensor& ha, const AttentionConfig& cfg,
                       const std::vector<unsigned char>* q_keep = nullptr,
                       const std::vector<unsigned char>* a_keep = nullptr);

Tensor compare(const Tensor& aligned, const Tensor& h);

Tensor aggregate_side(const Tensor& c, const AggregatorParams& params);
// r = [r_q ; r_a]
Tensor aggregate(const Tensor& cq, const Tensor& ca, const AggregatorParams& params);

}  // namespace hrank

#endif  // HRANK_BACKBONE_HPP_
