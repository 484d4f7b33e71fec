// Computes baseline weights from two expert matrices, scores a small survey
// batch and prints the resulting WUIQ value.

#include <iostream>
#include <vector>

#include "wuiq/wuiq.hpp"

int main() {
  using namespace wuiq;

  const double designer[] = {1.0 / 3, 1.0 / 4, 1.0 / 2};
  const double admin[] = {5.0, 4.0, 1.0};
  const std::vector<ahp::ExpertJudgment> experts{
      {"e1", "ux_designer", ahp::ComparisonMatrix::from_upper(3, designer), ""},
      {"e2", "web_admin", ahp::ComparisonMatrix::from_upper(3, admin), ""}};
  const auto weights = ahp::aggregate_experts(experts);
  for (const auto& e : weights.experts)
    std::cout << e.expert_id << ": CR=" << e.report.cr << (e.report.accepted ? " accepted\n" : " rejected\n");

  std::vector<usability::UsabilityScore> scores;
  const std::vector<std::pair<int, std::string>> answers{{5, "great and easy"}, {4, "fast, clear layout"}, {3, "slow"}};
  for (const auto& [level, review] : answers) {
    usability::SurveyResponse r;
    r.respondent_id = "r" + std::to_string(scores.size() + 1);
    for (std::size_t i = 0; i < r.uq.size(); ++i) r.uq[i] = (i < 10 && i % 2 == 1) ? 6 - level : level;
    r.review_text = review;
    scores.push_back({r.respondent_id, usability::sus_extended_score(r, usability::sentiment_score(review)).u_check});
  }

  const metrics::MetricScores m{0.25, 0.97, usability::usability_aggregate(scores)};
  const double v = quality::compute_wuiq(m, weights.weights);
  std::cout << "omega = (" << weights.weights[0] << ", " << weights.weights[1] << ", " << weights.weights[2] << ")\n"
            << "U = " << m.usability << "\n"
            << "WUIQ = " << v << " (" << quality::percent_label(v) << "), " << quality::grade(v) << "\n";
}
