#include "hrank/ranking.hpp"

#include <cmath>
#include <stdexcept>

namespace hrank {

const char* level_name(Level level) {
  switch (level) {
    case Level::point: return "point";
    case Level::pair: return "pair";
    case Level::list: return "list";
  }
  return "?";
}

Level parse_level(const std::string& name) {
  for (Level l : {Level::point, Level::pair, Level::list})
    if (name == level_name(l)) return l;
  throw std::invalid_argument("unknown ranking level: " + name);
}

namespace {

Tensor glorot(int rows, int cols, Rng& rng) {
  const double stddev = std::sqrt(2.0 / (rows + cols));
  std::vector<double> v(static_cast<std::size_t>(rows) * cols);
  for (auto& x : v) x = rng.normal(0.0, stddev);
  return Tensor::parameter(rows, cols, std::move(v));
}

void check_binary(const std::vector<int>& labels) {
  for (int y : labels)
    if (y != 0 && y != 1)
      throw std::invalid_argument("labels must be binary, got " + std::to_string(y));
}

}  // namespace

HeadParams HeadParams::init(int in_dim, int hidden, int out_dim, Rng& rng) {
  HeadParams p;
  p.wh = glorot(in_dim, hidden, rng);
  p.bh = Tensor::parameter(1, hidden, std::vector<double>(hidden, 0.0));
  p.wo = glorot(hidden, out_dim, rng);
  p.bo = Tensor::parameter(1, out_dim, std::vector<double>(out_dim, 0.0));
  return p;
}

Tensor HeadParams::apply(const Tensor& x) const {
  Tensor h = relu(add_rowvec(matmul(x, wh), bh));
  return add_rowvec(matmul(h, wo), bo);
}

void HeadParams::collect(const std::string& prefix, NamedTensors& out) const {
  out.emplace_back(prefix + ".wh", wh);
  out.emplace_back(prefix + ".bh", bh);
  out.emplace_back(prefix + ".wo", wo);
  out.emplace_back(prefix + ".bo", bo);
}

int CandidateScores::positives() const {
  int k = 0;
  for (int y : labels) k += (y == 1);
  return k;
}

int CandidateScores::negatives() const { return static_cast<int>(labels.size()) - positives(); }

Tensor point_loss(const Tensor& probs, const std::vector<int>& labels) {
  const int n = probs.rows();
  if (probs.cols() != 2)
    throw std::invalid_argument("point_loss: expected [n x 2] probabilities, got " +
                                shape_str(probs));
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("point_loss: " + std::to_string(labels.size()) +
                                " labels for " + shape_str(probs));
  check_binary(labels);
  std::vector<double> onehot(static_cast<std::size_t>(n) * 2, 0.0);
  for (int i = 0; i < n; ++i) onehot[static_cast<std::size_t>(i) * 2 + labels[i]] = 1.0;
  Tensor y = Tensor::constant(n, 2, std::move(onehot));
  return scale(sum_all(mul(scale(log_clamped(probs, 1e-12), -1.0), y)), 1.0 / n);
}

std::vector<std::pair<int, int>> generate_pairs(const CandidateScores& cs,
                                                const PairGenConfig& cfg) {
  if (cs.scores.size() != cs.labels.size())
    throw std::invalid_argument("generate_pairs: scores/labels size mismatch");
  check_binary(cs.labels);
  std::vector<int> pos, neg;
  for (std::size_t i = 0; i < cs.labels.size(); ++i)
    (cs.labels[i] == 1 ? pos : neg).push_back(static_cast<int>(i));

  std::vector<std::pair<int, int>> pairs;
  if (pos.empty() || neg.empty()) return pairs;

  if (cfg.method == PairMethod::all_pairs) {
    pairs.reserve(pos.size() * neg.size());
    for (int p : pos)
      for (int n : neg) pairs.emplace_back(p, n);
  } else {
    int hardest = neg[0];
    for (int n : neg)
      if (cs.scores[n] > cs.scores[hardest]) hardest = n;  // ties keep the lowest index
    pairs.reserve(pos.size());
    for (int p : pos) pairs.emplace_back(p, hardest);
  }
  return pairs;
}

Tensor pair_loss(const Tensor& scores, const std::vector<std::pair<int, int>>& pairs,
                 const PairGenConfig& cfg) {
  if (pairs.empty()) return Tensor::scalar(0.0);
  if (scores.cols() != 1)
    throw std::invalid_argument("pair_loss: expected [n x 1] scores, got " + shape_str(scores));
  Tensor s = cfg.sigmoid_normalize ? sigmoid(scores) : scores;
  std::vector<int> pos_idx, neg_idx;
  pos_idx.reserve(pairs.size());
  neg_idx.reserve(pairs.size());
  for (const auto& [p, n] : pairs) {
    pos_idx.push_back(p);
    neg_idx.push_back(n);
  }
  Tensor diff = sub(gather_rows(s, neg_idx), gather_rows(s, pos_idx));  // p- - p+
  return mean_all(relu(add_scalar(diff, cfg.margin)));
}

std::vector<double> normalize_labels(const std::vector<int>& labels) {
  check_binary(labels);
  int k = 0;
  for (int y : labels) k += y;
  if (k == 0) throw std::invalid_argument("normalize_labels: no positive label");
  std::vector<double> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] / static_cast<double>(k);
  return out;
}

Tensor list_loss(const Tensor& scores, const std::vector<int>& labels) {
  const int n = scores.rows();
  if (scores.cols() != 1)
    throw std::invalid_argument("list_loss: expected [n x 1] scores, got " + shape_str(scores));
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("list_loss: " + std::to_string(labels.size()) + " labels for " +
                                shape_str(scores));
  std::vector<double> yhat = normalize_labels(labels);
  double entropy = 0.0;  // sum of yhat * log(yhat) over the support
  for (double y : yhat)
    if (y > 0.0) entropy += y * std::log(y);
  Tensor p = row_softmax(transpose(scores));                                  // [1 x n]
  Tensor cross = sum_all(mul(Tensor::constant(1, n, std::move(yhat)), log_clamped(p, 1e-12)));
  return scale(add_scalar(scale(cross, -1.0), entropy), 1.0 / n);
}

std::vector<double> predict_scores(Level main_level, const Tensor& point_probs,
                                   const Tensor& pair_scores, const Tensor& list_scores) {
  switch (main_level) {
    case Level::point: {
      std::vector<double> out(point_probs.rows());
      for (int i = 0; i < point_probs.rows(); ++i) out[i] = point_probs.at(i, 1);
      return out;
    }
    case Level::pair:
      return pair_scores.values();
    case Level::list: {
      Tensor p = row_softmax(transpose(list_scores));
      return p.values();
    }
  }
  throw std::logic_error("predict_scores: bad level");
}

}  // namespace hrank
