#pragma once

// Exact Shapley attributions for cluster membership.
//
// Players are feature groups. The value of a coalition S for instance x is
//   v(S) = mean over background rows b of f(x on groups in S, b elsewhere)
// and each group receives
//   phi_i = sum over S not containing i of |S|! (M-|S|-1)! / M! * (v(S+i) - v(S)).
// All 2^M coalitions are enumerated, so sum(phi) + v(empty) == f(x) up to
// rounding.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "wuiq/error.hpp"
#include "wuiq/segmentation.hpp"

namespace wuiq::explainability {

inline constexpr std::size_t max_groups = 15;

class FeatureGrouping {
 public:
  FeatureGrouping() = default;

  // feature_group[c] is the group index of feature column c.
  FeatureGrouping(std::vector<std::string> group_names, std::vector<std::size_t> feature_group)
      : names_(std::move(group_names)), feature_group_(std::move(feature_group)) {
    if (names_.empty()) throw Error(ErrorCode::validation, "feature grouping needs at least one group");
    if (names_.size() > max_groups)
      throw Error(ErrorCode::enumeration_cap,
                  "exact Shapley enumeration is capped at " + std::to_string(max_groups) + " groups (got " +
                      std::to_string(names_.size()) + "); use a coarser feature grouping");
    std::vector<std::size_t> members(names_.size(), 0);
    for (auto g : feature_group_) {
      if (g >= names_.size()) throw Error(ErrorCode::validation, "feature assigned to an unknown group");
      ++members[g];
    }
    for (std::size_t g = 0; g < names_.size(); ++g)
      if (members[g] == 0) throw Error(ErrorCode::validation, "group '" + names_[g] + "' has no features");
  }

  // One group per feature.
  static FeatureGrouping singletons(std::vector<std::string> names) {
    std::vector<std::size_t> fg(names.size());
    std::iota(fg.begin(), fg.end(), 0);
    return FeatureGrouping(std::move(names), std::move(fg));
  }

  std::size_t size() const noexcept { return names_.size(); }
  std::size_t feature_count() const noexcept { return feature_group_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t group_of(std::size_t feature) const { return feature_group_[feature]; }

 private:
  std::vector<std::string> names_;
  std::vector<std::size_t> feature_group_;
};

class BackgroundSet {
 public:
  BackgroundSet(std::size_t cols, std::vector<double> data) : cols_(cols), data_(std::move(data)) {
    if (cols_ == 0 || data_.empty()) throw Error(ErrorCode::validation, "background set is empty");
    if (data_.size() % cols_ != 0) throw Error(ErrorCode::validation, "background rows have inconsistent width");
  }
  explicit BackgroundSet(const segmentation::FeatureMatrix& m) : BackgroundSet(m.cols, m.data) {}

  std::size_t rows() const noexcept { return data_.size() / cols_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

 private:
  std::size_t cols_;
  std::vector<double> data_;
};

struct ShapExplanation {
  std::string instance_id;
  std::size_t target_cluster = 0;
  double base_value = 0.0;
  std::vector<double> phi;
  std::vector<double> group_values;  // mean of the instance's raw values per group
  double prediction = 0.0;
  double efficiency_residual = 0.0;
};

// s! (M-s-1)! / M!, exact in double for M <= 15.
inline double coalition_weight(std::size_t players, std::size_t coalition_size) {
  double num = 1.0;
  for (std::size_t i = 2; i <= coalition_size; ++i) num *= static_cast<double>(i);
  for (std::size_t i = 2; i + coalition_size + 1 <= players; ++i) num *= static_cast<double>(i);
  double den = 1.0;
  for (std::size_t i = 2; i <= players; ++i) den *= static_cast<double>(i);
  return num / den;
}

template <class F>
ShapExplanation shapley_exact(const F& f, std::span<const double> x, const BackgroundSet& bg,
                              const FeatureGrouping& groups) {
  const std::size_t m = groups.size();
  const std::size_t d = x.size();
  if (m > max_groups) throw Error(ErrorCode::enumeration_cap, "too many groups for exact enumeration");
  if (bg.cols() != d || groups.feature_count() != d)
    throw Error(ErrorCode::validation, "instance, background and grouping disagree on the feature schema");

  const std::uint32_t coalitions = 1u << m;
  std::vector<double> value(coalitions, 0.0);
  std::vector<double> composite(d);
  for (std::uint32_t mask = 0; mask < coalitions; ++mask) {
    double sum = 0.0;
    for (std::size_t b = 0; b < bg.rows(); ++b) {
      const auto row = bg.row(b);
      for (std::size_t c = 0; c < d; ++c) composite[c] = (mask >> groups.group_of(c)) & 1u ? x[c] : row[c];
      sum += f(std::span<const double>(composite));
    }
    value[mask] = sum / static_cast<double>(bg.rows());
  }

  std::vector<double> weight(m);
  for (std::size_t s = 0; s < m; ++s) weight[s] = coalition_weight(m, s);

  ShapExplanation e;
  e.phi.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint32_t bit = 1u << i;
    double acc = 0.0;
    for (std::uint32_t mask = 0; mask < coalitions; ++mask) {
      if (mask & bit) continue;
      const double delta = value[mask | bit] - value[mask];
      if (delta != 0.0) acc += weight[static_cast<std::size_t>(__builtin_popcount(mask))] * delta;
    }
    e.phi[i] = acc;
  }
  e.base_value = value[0];
  e.prediction = f(x);
  e.efficiency_residual = std::abs(std::accumulate(e.phi.begin(), e.phi.end(), 0.0) + e.base_value - e.prediction);

  e.group_values.assign(m, 0.0);
  std::vector<std::size_t> count(m, 0);
  for (std::size_t c = 0; c < d; ++c) {
    e.group_values[groups.group_of(c)] += x[c];
    ++count[groups.group_of(c)];
  }
  for (std::size_t g = 0; g < m; ++g) e.group_values[g] /= static_cast<double>(count[g]);
  return e;
}

enum class MembershipMode { indicator, soft };

inline std::string to_string(MembershipMode m) { return m == MembershipMode::indicator ? "indicator" : "soft"; }

inline MembershipMode parse_mode(const std::string& s) {
  if (s == "indicator") return MembershipMode::indicator;
  if (s == "soft") return MembershipMode::soft;
  throw Error(ErrorCode::validation, "membership mode must be 'indicator' or 'soft'", "mode");
}

// Maps an explained (raw) feature vector to the model's input features
// before standardization.
using FeatureMap = std::function<void(std::span<const double> raw, std::vector<double>& model_input)>;

inline FeatureMap identity_map() {
  return [](std::span<const double> raw, std::vector<double>& out) { out.assign(raw.begin(), raw.end()); };
}

// Cluster-membership "black box": 1/0 for nearest-centroid == target, or the
// target's softmax weight over negative squared centroid distances.
class MembershipFunction {
 public:
  MembershipFunction(segmentation::KMeansModel model, segmentation::Standardization scaling, FeatureMap map,
                     std::size_t target, MembershipMode mode)
      : model_(std::move(model)), scaling_(std::move(scaling)), map_(std::move(map)), target_(target), mode_(mode) {
    if (target_ >= model_.k) throw Error(ErrorCode::validation, "target cluster does not exist", "cluster");
  }

  double operator()(std::span<const double> raw) const {
    std::vector<double> input;
    map_(raw, input);
    std::vector<double> z(input.size());
    scaling_.apply(input, z);
    if (mode_ == MembershipMode::indicator) return model_.nearest(z) == target_ ? 1.0 : 0.0;
    std::vector<double> logits(model_.k);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < model_.k; ++c) {
      logits[c] = -segmentation::squared_distance(z, model_.centroid(c));
      peak = std::max(peak, logits[c]);
    }
    double total = 0.0;
    for (double& l : logits) total += (l = std::exp(l - peak));
    return logits[target_] / total;
  }

  std::size_t target() const noexcept { return target_; }
  MembershipMode mode() const noexcept { return mode_; }

 private:
  segmentation::KMeansModel model_;
  segmentation::Standardization scaling_;
  FeatureMap map_;
  std::size_t target_;
  MembershipMode mode_;
};

struct ClusterExplanation {
  std::size_t target_cluster = 0;
  MembershipMode mode = MembershipMode::indicator;
  double base_value = 0.0;
  std::vector<ShapExplanation> explanations;
};

// Explains membership of `target` for every row of `data`; the background is
// `data` itself.
inline ClusterExplanation explain_cluster(const segmentation::KMeansModel& model,
                                          const segmentation::Standardization& scaling, FeatureMap map,
                                          const segmentation::FeatureMatrix& data,
                                          std::span<const std::string> instance_ids, const FeatureGrouping& groups,
                                          std::size_t target, MembershipMode mode = MembershipMode::indicator) {
  if (instance_ids.size() != data.rows) throw Error(ErrorCode::validation, "one instance id per data row required");
  const MembershipFunction f(model, scaling, std::move(map), target, mode);
  const BackgroundSet bg(data);
  ClusterExplanation out{target, mode, 0.0, {}};
  for (std::size_t i = 0; i < data.rows; ++i) {
    auto e = shapley_exact(f, data.row(i), bg, groups);
    e.instance_id = instance_ids[i];
    e.target_cluster = target;
    out.base_value = e.base_value;
    out.explanations.push_back(std::move(e));
  }
  return out;
}

struct GroupImportance {
  std::string group;
  double mean_abs_phi = 0.0;
};

// Mean |phi| per group, largest first; ties keep the grouping order.
inline std::vector<GroupImportance> global_importance(std::span<const ShapExplanation> explanations,
                                                      const std::vector<std::string>& group_names) {
  if (explanations.empty()) throw Error(ErrorCode::validation, "global importance needs at least one explanation");
  std::vector<GroupImportance> out;
  for (std::size_t g = 0; g < group_names.size(); ++g) {
    double s = 0.0;
    for (const auto& e : explanations) {
      if (e.phi.size() != group_names.size())
        throw Error(ErrorCode::validation, "explanation group count differs from the grouping");
      s += std::abs(e.phi[g]);
    }
    out.push_back({group_names[g], s / static_cast<double>(explanations.size())});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const GroupImportance& a, const GroupImportance& b) { return a.mean_abs_phi > b.mean_abs_phi; });
  return out;
}

struct AttributionRow {
  std::string instance_id;
  std::size_t cluster = 0;
  std::string group;
  double phi = 0.0;
  double value = 0.0;
  double base_value = 0.0;
  std::string effect;
};

inline std::string effect_label(double phi) {
  if (phi > 0.0) return "increases membership";
  if (phi < 0.0) return "decreases membership";
  return "no effect";
}

// One row per (instance, group), in explanation order then group order.
inline std::vector<AttributionRow> attribution_rows(std::span<const ShapExplanation> explanations,
                                                    const std::vector<std::string>& group_names) {
  std::vector<AttributionRow> rows;
  for (const auto& e : explanations)
    for (std::size_t g = 0; g < group_names.size(); ++g)
      rows.push_back({e.instance_id, e.target_cluster, group_names[g], e.phi[g], e.group_values[g], e.base_value,
                      effect_label(e.phi[g])});
  return rows;
}

}  // namespace wuiq::explainability
