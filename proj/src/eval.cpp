#include "hrank/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace hrank {

std::vector<int> rank_candidates(const std::vector<double>& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

namespace {

void check_metric_input(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("metric: scores/labels size mismatch");
  if (std::count(labels.begin(), labels.end(), 1) == 0)
    throw std::invalid_argument("metric: question has no positive candidate");
}

}  // namespace

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_metric_input(scores, labels);
  const auto order = rank_candidates(scores);
  int positives_seen = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]] == 1) {
      ++positives_seen;
      sum += static_cast<double>(positives_seen) / static_cast<double>(r + 1);
    }
  }
  return sum / positives_seen;
}

double reciprocal_rank(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_metric_input(scores, labels);
  const auto order = rank_candidates(scores);
  for (std::size_t r = 0; r < order.size(); ++r)
    if (labels[order[r]] == 1) return 1.0 / static_cast<double>(r + 1);
  return 0.0;  // unreachable: a positive exists
}

RankReport evaluate_corpus(const std::vector<QuestionGroup>& groups, const GroupScorer& scorer) {
  if (groups.empty()) throw std::invalid_argument("evaluate_corpus: empty corpus");
  RankReport report;
  for (const auto& g : groups) {
    QuestionResult qr;
    qr.qid = g.qid;
    qr.scores = scorer(g);
    qr.labels = g.labels();
    qr.ranked = rank_candidates(qr.scores);
    qr.average_precision = average_precision(qr.scores, qr.labels);
    qr.reciprocal_rank = reciprocal_rank(qr.scores, qr.labels);
    report.map += qr.average_precision;
    report.mrr += qr.reciprocal_rank;
    report.questions.push_back(std::move(qr));
  }
  report.question_count = static_cast<int>(groups.size());
  report.map /= report.question_count;
  report.mrr /= report.question_count;
  return report;
}

std::string report_to_json(const RankReport& report) {
  nlohmann::ordered_json j;
  j["scheme"] = report.scheme;
  j["seed"] = report.seed;
  j["epoch"] = report.epoch;
  j["question_count"] = report.question_count;
  j["map"] = report.map;
  j["mrr"] = report.mrr;
  j["questions"] = nlohmann::ordered_json::array();
  for (const auto& q : report.questions) {
    nlohmann::ordered_json qj;
    qj["qid"] = q.qid;
    qj["ranked"] = q.ranked;
    qj["scores"] = q.scores;
    qj["labels"] = q.labels;
    qj["average_precision"] = q.average_precision;
    qj["reciprocal_rank"] = q.reciprocal_rank;
    j["questions"].push_back(std::move(qj));
  }
  return j.dump(2);
}

void write_report(const RankReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_report: cannot open " + path);
  out << report_to_json(report) << '\n';
}

}  // namespace hrank
