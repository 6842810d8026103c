#ifndef HRANK_RANKING_HPP_
#define HRANK_RANKING_HPP_

#include <string>
#include <utility>
#include <vector>

#include "hrank/backbone.hpp"
#include "hrank/rng.hpp"
#include "hrank/tensor.hpp"

namespace hrank {

enum class Level { point, pair, list };

const char* level_name(Level level);
Level parse_level(const std::string& name);

enum class PairMethod { all_pairs, max_negative };

struct PairGenConfig {
  PairMethod method = PairMethod::all_pairs;
  double margin = 1.0;
  bool sigmoid_normalize = false;
};

// Two-layer perceptron head: relu(x*Wh + bh)*Wo + bo.
struct HeadParams {
  Tensor wh, bh, wo, bo;

  static HeadParams init(int in_dim, int hidden, int out_dim, Rng& rng);
  int in_dim() const { return wh.rows(); }
  int out_dim() const { return wo.cols(); }
  Tensor apply(const Tensor& x) const;  // [n x in] -> [n x out]
  void collect(const std::string& prefix, NamedTensors& out) const;
};

// One question's candidate scores, outside the graph. The unit the pair
// generator works on.
struct CandidateScores {
  std::vector<double> scores;
  std::vector<int> labels;  // binary

  int positives() const;
  int negatives() const;
};

// Mean cross-entropy over the question's k+t candidates. probs is a
// [n x 2] matrix of per-row softmax outputs; column 1 is the positive
// class. Probabilities are clamped at 1e-12 before the log.
Tensor point_loss(const Tensor& probs, const std::vector<int>& labels);

// (positive candidate index, negative candidate index) pairs. all_pairs
// yields the k*t cross product; max_negative pairs every positive with
// the currently highest-scoring negative (selection reads plain values
// and does not participate in gradients). t = 0 yields no pairs.
std::vector<std::pair<int, int>> generate_pairs(const CandidateScores& cs,
                                                const PairGenConfig& cfg);

// Mean margin loss max(0, margin - (p+ - p-)) over the given pairs.
// scores is the [n x 1] stack of pair-head outputs; sigmoid normalization
// is applied here when configured. No pairs -> 0.
Tensor pair_loss(const Tensor& scores, const std::vector<std::pair<int, int>>& pairs,
                 const PairGenConfig& cfg);

// Binary labels scaled to a distribution (each entry divided by the
// number of positives). At least one positive required.
std::vector<double> normalize_labels(const std::vector<int>& labels);

// KL(normalized labels || softmax(scores)) / (k+t) for one question's
// [n x 1] list-head scores.
Tensor list_loss(const Tensor& scores, const std::vector<int>& labels);

// Ranking scores for the main level: point -> positive-class probability,
// pair -> raw head output, list -> softmax over the candidate list.
std::vector<double> predict_scores(Level main_level, const Tensor& point_probs,
                                   const Tensor& pair_scores, const Tensor& list_scores);

}  // namespace hrank

#endif  // HRANK_RANKING_HPP_
