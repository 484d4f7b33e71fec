#pragma once

// Analytic hierarchy process: reciprocal pairwise-comparison matrices,
// column-normalization weights, the Saaty consistency check, and
// geometric-mean aggregation across experts.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "wuiq/error.hpp"

namespace wuiq::ahp {

inline const std::vector<std::string>& default_criteria() {
  static const std::vector<std::string> labels{"performance", "accessibility", "usability"};
  return labels;
}

// Values an expert may enter for a single pair: 1..5 and their inverses.
inline constexpr std::array<double, 9> judgment_scale{1.0 / 5, 1.0 / 4, 1.0 / 3, 1.0 / 2, 1.0,
                                                      2.0,     3.0,     4.0,     5.0};

inline bool on_judgment_scale(double v) {
  return std::any_of(judgment_scale.begin(), judgment_scale.end(),
                     [v](double s) { return std::abs(v - s) <= 1e-12 * s; });
}

inline constexpr double reciprocity_tolerance = 1e-12;
inline constexpr double default_cr_threshold = 0.10;

// Dense row-major square matrix of reals.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * n + j]; }
};

class ComparisonMatrix {
 public:
  ComparisonMatrix(std::size_t n, std::vector<double> entries, std::vector<std::string> labels = {})
      : n_(n), entries_(std::move(entries)), labels_(std::move(labels)) {
    if (n_ == 0) throw Error(ErrorCode::validation, "comparison matrix needs at least one criterion");
    if (entries_.size() != n_ * n_)
      throw Error(ErrorCode::validation, "comparison matrix is not square");
    if (labels_.empty()) {
      if (n_ == default_criteria().size()) {
        labels_ = default_criteria();
      } else {
        for (std::size_t i = 0; i < n_; ++i) labels_.push_back("c" + std::to_string(i + 1));
      }
    }
    if (labels_.size() != n_) throw Error(ErrorCode::validation, "criterion label count differs from n");
    validate();
  }

  static ComparisonMatrix ones(std::size_t n, std::vector<std::string> labels = {}) {
    return ComparisonMatrix(n, std::vector<double>(n * n, 1.0), std::move(labels));
  }

  // m_ij = w_i / w_j; perfectly consistent by construction.
  static ComparisonMatrix from_priorities(std::span<const double> w, std::vector<std::string> labels = {}) {
    const std::size_t n = w.size();
    std::vector<double> e(n * n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) e[i * n + j] = w[i] / w[j];
    return ComparisonMatrix(n, std::move(e), std::move(labels));
  }

  // Builds the full matrix from its strict upper triangle (row-major order:
  // (0,1), (0,2), ..., (1,2), ...). Lower triangle gets exact inverses.
  static ComparisonMatrix from_upper(std::size_t n, std::span<const double> upper,
                                     std::vector<std::string> labels = {}) {
    if (upper.size() != n * (n - 1) / 2)
      throw Error(ErrorCode::validation, "upper triangle has the wrong number of judgments");
    std::vector<double> e(n * n, 1.0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j, ++k) {
        e[i * n + j] = upper[k];
        e[j * n + i] = 1.0 / upper[k];
      }
    return ComparisonMatrix(n, std::move(e), std::move(labels));
  }

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  std::span<const double> entries() const noexcept { return entries_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  bool on_judgment_scale() const {
    return std::all_of(entries_.begin(), entries_.end(), [](double v) { return ahp::on_judgment_scale(v); });
  }

  // Result entry (i,j) is this entry (perm[i], perm[j]).
  ComparisonMatrix permuted(std::span<const std::size_t> perm) const {
    std::vector<double> e(n_ * n_);
    std::vector<std::string> l(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      l[i] = labels_[perm[i]];
      for (std::size_t j = 0; j < n_; ++j) e[i * n_ + j] = (*this)(perm[i], perm[j]);
    }
    return ComparisonMatrix(n_, std::move(e), std::move(l));
  }

  friend bool operator==(const ComparisonMatrix&, const ComparisonMatrix&) = default;

 private:
  void validate() const {
    for (std::size_t i = 0; i < n_; ++i) {
      if ((*this)(i, i) != 1.0)
        throw Error(ErrorCode::validation, "diagonal entry is not 1", "m_" + std::to_string(i + 1) + std::to_string(i + 1));
      for (std::size_t j = 0; j < n_; ++j) {
        const double v = (*this)(i, j);
        if (!std::isfinite(v) || v <= 0.0)
          throw Error(ErrorCode::validation, "comparison entries must be positive and finite");
        if (std::abs(v * (*this)(j, i) - 1.0) > reciprocity_tolerance)
          throw Error(ErrorCode::validation, "comparison matrix is not reciprocal");
      }
    }
  }

  std::size_t n_;
  std::vector<double> entries_;
  std::vector<std::string> labels_;
};

class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(std::vector<double> w) : w_(std::move(w)) {
    if (w_.empty()) throw Error(ErrorCode::validation, "weight vector is empty");
    double sum = 0.0;
    for (double v : w_) {
      if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::validation, "weights must be non-negative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::validation, "weights must sum to 1");
  }

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> values() const noexcept { return w_; }
  bool empty() const noexcept { return w_.empty(); }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  std::vector<double> w_;
};

struct ConsistencyReport {
  double lambda_max = 0.0;
  double ci = 0.0;
  double ri = 0.0;
  double cr = 0.0;
  double threshold = default_cr_threshold;
  bool accepted = true;
};

struct ExpertJudgment {
  std::string expert_id;
  std::string role;
  ComparisonMatrix matrix;
  std::string submitted_at;

  friend bool operator==(const ExpertJudgment&, const ExpertJudgment&) = default;
};

// Divides each entry by its column sum.
inline SquareMatrix normalize_matrix(const ComparisonMatrix& m) {
  const std::size_t n = m.size();
  SquareMatrix out{n, std::vector<double>(n * n)};
  for (std::size_t j = 0; j < n; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) col += m(i, j);
    for (std::size_t i = 0; i < n; ++i) out(i, j) = m(i, j) / col;
  }
  return out;
}

// Row means of the column-normalized matrix.
inline WeightVector derive_weights(const ComparisonMatrix& m) {
  const auto norm = normalize_matrix(m);
  const std::size_t n = m.size();
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += norm(i, j);
    w[i] = row / static_cast<double>(n);
  }
  return WeightVector(std::move(w));
}

// Saaty estimate (1/n) * sum_i (M w)_i / w_i.
inline double lambda_max(const ComparisonMatrix& m, const WeightVector& w) {
  const std::size_t n = m.size();
  if (w.size() != n) throw Error(ErrorCode::validation, "weight vector length differs from matrix size");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(w[i] > 0.0)) throw Error(ErrorCode::degenerate_weights, "lambda_max needs strictly positive weights");
    double mw = 0.0;
    for (std::size_t j = 0; j < n; ++j) mw += m(i, j) * w[j];
    acc += mw / w[i];
  }
  return acc / static_cast<double>(n);
}

// Average random consistency index for n = 1..10.
inline constexpr std::array<double, 10> random_index_table{0.00, 0.00, 0.58, 0.90, 1.12,
                                                           1.24, 1.32, 1.41, 1.45, 1.49};

inline double random_index(std::size_t n) {
  if (n < 1 || n > random_index_table.size())
    throw Error(ErrorCode::unsupported_dimension,
                "no random consistency index for n = " + std::to_string(n) + " (supported 1..10)");
  return random_index_table[n - 1];
}

inline ConsistencyReport consistency(const ComparisonMatrix& m, double threshold = default_cr_threshold) {
  const std::size_t n = m.size();
  ConsistencyReport r;
  r.threshold = threshold;
  r.ri = random_index(n);
  r.lambda_max = lambda_max(m, derive_weights(m));
  const double dn = static_cast<double>(n);
  r.ci = n >= 2 ? (r.lambda_max - dn) / (dn - 1.0) : 0.0;
  r.cr = r.ri > 0.0 ? r.ci / r.ri : 0.0;
  r.accepted = r.cr <= threshold;
  return r;
}

// Element-wise geometric mean of weight vectors, renormalized to sum 1.
// Inputs are accumulated in a canonical (sorted) order so the result does not
// depend on the order they were supplied in.
inline WeightVector geometric_mean(std::span<const WeightVector> vectors) {
  if (vectors.empty()) throw Error(ErrorCode::validation, "geometric mean of no weight vectors");
  const std::size_t n = vectors.front().size();
  std::vector<const WeightVector*> order;
  for (const auto& v : vectors) {
    if (v.size() != n) throw Error(ErrorCode::validation, "weight vectors differ in length");
    order.push_back(&v);
  }
  std::sort(order.begin(), order.end(), [](const WeightVector* a, const WeightVector* b) {
    return std::lexicographical_compare(a->values().begin(), a->values().end(), b->values().begin(),
                                        b->values().end());
  });
  std::vector<double> g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double log_sum = 0.0;
    bool zero = false;
    for (const auto* v : order) {
      if ((*v)[i] <= 0.0) zero = true;
      else log_sum += std::log((*v)[i]);
    }
    g[i] = zero ? 0.0 : std::exp(log_sum / static_cast<double>(order.size()));
  }
  const double total = std::accumulate(g.begin(), g.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorCode::degenerate_weights, "geometric mean collapsed to zero");
  for (double& v : g) v /= total;
  return WeightVector(std::move(g));
}

struct ExpertAssessment {
  std::string expert_id;
  std::string role;
  WeightVector weights;
  ConsistencyReport report;
};

struct AggregateResult {
  WeightVector weights;
  std::vector<ExpertAssessment> experts;  // input order, accepted and rejected
  std::size_t accepted_count = 0;
};

inline ExpertAssessment assess(const ExpertJudgment& j, double threshold = default_cr_threshold) {
  return {j.expert_id, j.role, derive_weights(j.matrix), consistency(j.matrix, threshold)};
}

// Weights of experts whose CR passes the threshold, combined by geometric mean.
inline AggregateResult aggregate_experts(std::span<const ExpertJudgment> judgments,
                                         double threshold = default_cr_threshold) {
  if (judgments.empty()) throw Error(ErrorCode::validation, "no expert judgments supplied");
  AggregateResult out;
  std::vector<WeightVector> accepted;
  for (const auto& j : judgments) {
    if (j.expert_id.empty()) throw Error(ErrorCode::validation, "expert_id must be non-empty", "expert_id");
    if (j.matrix.size() != judgments.front().matrix.size())
      throw Error(ErrorCode::validation, "experts compared different numbers of criteria");
    auto a = assess(j, threshold);
    if (a.report.accepted) accepted.push_back(a.weights);
    out.experts.push_back(std::move(a));
  }
  out.accepted_count = accepted.size();
  if (accepted.empty())
    throw Error(ErrorCode::no_accepted_judgments,
                "every expert judgment exceeded the consistency-ratio threshold");
  out.weights = geometric_mean(accepted);
  return out;
}

}  // namespace wuiq::ahp
