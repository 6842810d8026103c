#ifndef HRANK_EVAL_HPP_
#define HRANK_EVAL_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hrank/data.hpp"

namespace hrank {

// Ranked candidate indices: descending score, stable, ties broken by the
// original candidate index. The single sort rule every metric uses.
std::vector<int> rank_candidates(const std::vector<double>& scores);

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);
double reciprocal_rank(const std::vector<double>& scores, const std::vector<int>& labels);

struct QuestionResult {
  std::string qid;
  std::vector<int> ranked;  // candidate indices in rank order
  std::vector<double> scores;
  std::vector<int> labels;
  double average_precision = 0.0;
  double reciprocal_rank = 0.0;
};

struct RankReport {
  std::vector<QuestionResult> questions;
  double map = 0.0;
  double mrr = 0.0;
  int question_count = 0;
  // metadata
  std::string scheme;
  std::uint64_t seed = 0;
  int epoch = 0;
};

using GroupScorer = std::function<std::vector<double>(const QuestionGroup&)>;

// Per-question metrics via the scorer; corpus MAP/MRR are unweighted means.
RankReport evaluate_corpus(const std::vector<QuestionGroup>& groups, const GroupScorer& scorer);

std::string report_to_json(const RankReport& report);
void write_report(const RankReport& report, const std::string& path);

}  // namespace hrank

#endif  // HRANK_EVAL_HPP_
