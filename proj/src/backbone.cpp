#include "hrank/backbone.hpp"

#include <cmath>
#include <stdexcept>

namespace hrank {

namespace {

Tensor glorot(int rows, int cols, Rng& rng) {
  const double stddev = std::sqrt(2.0 / (rows + cols));
  std::vector<double> v(static_cast<std::size_t>(rows) * cols);
  for (auto& x : v) x = rng.normal(0.0, stddev);
  return Tensor::parameter(rows, cols, std::move(v));
}

}  // namespace

EncoderParams EncoderParams::init(int emb_dim, int hidden, Rng& rng) {
  EncoderParams p;
  p.w1 = glorot(emb_dim, hidden, rng);
  p.b1 = Tensor::parameter(1, hidden, std::vector<double>(hidden, 0.0));
  p.w2 = glorot(emb_dim, hidden, rng);
  p.b2 = Tensor::parameter(1, hidden, std::vector<double>(hidden, 0.0));
  return p;
}

void EncoderParams::collect(const std::string& prefix, NamedTensors& out) const {
  out.emplace_back(prefix + ".w1", w1);
  out.emplace_back(prefix + ".b1", b1);
  out.emplace_back(prefix + ".w2", w2);
  out.emplace_back(prefix + ".b2", b2);
}

AggregatorParams AggregatorParams::init(int in_dim, int channels,
                                        std::vector<int> kernel_sizes, Rng& rng) {
  AggregatorParams p;
  p.in_dim = in_dim;
  p.channels = channels;
  p.kernel_sizes = std::move(kernel_sizes);
  for (int s : p.kernel_sizes) {
    p.filters.push_back(glorot(s * in_dim, channels, rng));
    p.biases.push_back(Tensor::parameter(1, channels, std::vector<double>(channels, 0.0)));
  }
  return p;
}

void AggregatorParams::collect(const std::string& prefix, NamedTensors& out) const {
  for (std::size_t i = 0; i < kernel_sizes.size(); ++i) {
    const std::string k = std::to_string(kernel_sizes[i]);
    out.emplace_back(prefix + ".conv" + k + ".w", filters[i]);
    out.emplace_back(prefix + ".conv" + k + ".b", biases[i]);
  }
}

Tensor gated_projection(const Tensor& e, const EncoderParams& params) {
  if (e.rows() < 1)
    throw std::invalid_argument("gated_projection: empty sequence " + shape_str(e));
  if (e.cols() != params.emb_dim())
    throw std::invalid_argument("gated_projection: embedding dim " + shape_str(e) +
                                " does not match " + shape_str(params.w1));
  Tensor gate = sigmoid(add_rowvec(matmul(e, params.w1), params.b1));
  Tensor cand = tanh_op(add_rowvec(matmul(e, params.w2), params.b2));
  return mul(gate, cand);
}

Alignment attend_align(const Tensor& hq, const Tensor& ha, const AttentionConfig& cfg,
                       const std::vector<unsigned char>* q_keep,
                       const std::vector<unsigned char>* a_keep) {
  if (hq.rows() < 1 || ha.rows() < 1)
    throw std::invalid_argument("attend_align: empty side: " + shape_str(hq) + " vs " +
                                shape_str(ha));
  if (hq.cols() != ha.cols())
    throw std::invalid_argument("attend_align: hidden dims disagree: " + shape_str(hq) +
                                " vs " + shape_str(ha));

  Tensor m = matmul_transb(hq, ha);

  Tensor m_q = m;  // attention over answer positions, one row per question token
  if (a_keep) m_q = mask_cols_neginf(m_q, *a_keep);
  if (cfg.kmax_enabled) m_q = kmax_row_filter(m_q, cfg.k);
  Tensor hq_hat = matmul(row_softmax(m_q), ha);

  Tensor m_a = transpose(m);
  if (q_keep) m_a = mask_cols_neginf(m_a, *q_keep);
  if (cfg.kmax_enabled) m_a = kmax_row_filter(m_a, cfg.k);
  Tensor ha_hat = matmul(row_softmax(m_a), hq);

  return {hq_hat, ha_hat, m};
}

Tensor compare(const Tensor& aligned, const Tensor& h) {
  if (aligned.rows() != h.rows() || aligned.cols() != h.cols())
    throw std::invalid_argument("compare: shape mismatch: " + shape_str(aligned) + " vs " +
                                shape_str(h));
  return mul(aligned, h);
}

Tensor aggregate_side(const Tensor& c, const AggregatorParams& params) {
  if (c.rows() < 1)
    throw std::invalid_argument("aggregate_side: empty sequence " + shape_str(c));
  if (c.cols() != params.in_dim)
    throw std::invalid_argument("aggregate_side: input dim " + shape_str(c) +
                                " does not match aggregator in_dim " +
                                std::to_string(params.in_dim));
  std::vector<Tensor> pooled;
  pooled.reserve(params.kernel_sizes.size());
  for (std::size_t i = 0; i < params.kernel_sizes.size(); ++i) {
    const int s = params.kernel_sizes[i];
    Tensor x = c.rows() < s ? pad_rows(c, s) : c;
    Tensor conv = add_rowvec(matmul(unfold_rows(x, s), params.filters[i]), params.biases[i]);
    pooled.push_back(max_over_time(tanh_op(conv)));
  }
  return concat_cols(pooled);
}

Tensor aggregate(const Tensor& cq, const Tensor& ca, const AggregatorParams& params) {
  Tensor parts[] = {aggregate_side(cq, params), aggregate_side(ca, params)};
  return concat_cols(parts);
}

}  // namespace hrank
