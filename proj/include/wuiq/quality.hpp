#pragma once

// WUIQ aggregation: the weighted sum P*w_P + A*w_A + U*w_U for one
// evaluation, the time-indexed iteration history that reuses the baseline
// weights, and qualitative grading.

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "wuiq/ahp.hpp"
#include "wuiq/error.hpp"
#include "wuiq/metrics.hpp"

namespace wuiq::quality {

using ahp::WeightVector;
using metrics::MetricScores;

struct Contributions {
  double performance = 0.0;
  double accessibility = 0.0;
  double usability = 0.0;

  double total() const { return performance + accessibility + usability; }
};

inline Contributions contributions(const MetricScores& s, const WeightVector& w) {
  metrics::validate(s);
  if (w.size() != 3) throw Error(ErrorCode::validation, "WUIQ needs exactly three weights (P, A, U)");
  return {s.performance * w[0], s.accessibility * w[1], s.usability * w[2]};
}

inline double compute_wuiq(const MetricScores& s, const WeightVector& w) { return contributions(s, w).total(); }

struct EvaluationIteration {
  int t = 0;
  MetricScores scores;
  WeightVector weights;
  double wuiq = 0.0;
  std::string evaluated_at;
  std::optional<double> load_time_seconds;  // diagnostic only

  friend bool operator==(const EvaluationIteration&, const EvaluationIteration&) = default;
};

struct ProjectHistory {
  std::string project_id;
  std::optional<WeightVector> baseline_weights;
  std::vector<EvaluationIteration> iterations;

  friend bool operator==(const ProjectHistory&, const ProjectHistory&) = default;
};

inline ProjectHistory append_iteration(ProjectHistory h, const MetricScores& scores, std::string evaluated_at,
                                       std::optional<double> load_time_seconds = std::nullopt) {
  if (!h.baseline_weights)
    throw Error(ErrorCode::missing_baseline, "no baseline weights: compute criterion weights first (`weights`)");
  EvaluationIteration it;
  it.t = h.iterations.empty() ? 1 : h.iterations.back().t + 1;
  it.scores = scores;
  it.weights = *h.baseline_weights;
  it.wuiq = compute_wuiq(scores, it.weights);
  it.evaluated_at = std::move(evaluated_at);
  it.load_time_seconds = load_time_seconds;
  h.iterations.push_back(std::move(it));
  return h;
}

struct GradeBands {
  double fair = 0.60;
  double good = 0.75;
  double excellent = 0.90;
};

inline std::string grade(double value, const GradeBands& bands = {}) {
  if (!(value >= 0.0 && value <= 1.0)) throw Error(ErrorCode::validation, "WUIQ value must lie in [0,1]");
  if (value >= bands.excellent) return "excellent";
  if (value >= bands.good) return "good";
  if (value >= bands.fair) return "fair";
  return "requires improvement";
}

// Whole-percent label, e.g. 0.580708 -> "58%".
inline std::string percent_label(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.0f%%", value * 100.0);
  return buf;
}

}  // namespace wuiq::quality
