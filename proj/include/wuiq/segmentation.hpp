#pragma once

// User segmentation: z-score standardization, Lloyd's k-means with k-means++
// seeding, SSE scree curves and elbow selection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wuiq/error.hpp"

namespace wuiq::segmentation {

// Row-major n x d matrix with named columns.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  std::vector<std::string> names;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t n, std::size_t d, std::vector<double> values, std::vector<std::string> column_names = {})
      : rows(n), cols(d), data(std::move(values)), names(std::move(column_names)) {
    if (n == 0 || d == 0) throw Error(ErrorCode::validation, "feature matrix needs at least one row and column");
    if (data.size() != n * d) throw Error(ErrorCode::validation, "feature matrix is not rectangular");
    for (double v : data)
      if (!std::isfinite(v)) throw Error(ErrorCode::validation, "feature matrix has missing or non-finite values");
    if (names.empty())
      for (std::size_t j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));
    if (names.size() != d) throw Error(ErrorCode::validation, "feature name count differs from column count");
  }

  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows_in,
                                 std::vector<std::string> column_names = {}) {
    if (rows_in.empty()) throw Error(ErrorCode::validation, "feature matrix needs at least one row");
    const std::size_t d = rows_in.front().size();
    std::vector<double> flat;
    for (const auto& r : rows_in) {
      if (r.size() != d) throw Error(ErrorCode::validation, "feature matrix is not rectangular");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return FeatureMatrix(rows_in.size(), d, std::move(flat), std::move(column_names));
  }

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;  // population; recorded as 1 for constant columns

  void apply(std::span<const double> in, std::span<double> out) const {
    for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - mean[j]) / stddev[j];
  }

  // Identity transform for raw-space clustering.
  static Standardization identity(std::size_t d) { return {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)}; }
};

struct Standardized {
  FeatureMatrix matrix;
  Standardization params;
};

inline Standardized standardize(const FeatureMatrix& x) {
  const std::size_t n = x.rows, d = x.cols;
  Standardization p{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  for (std::size_t j = 0; j < d; ++j) {
    bool constant = true;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += x(i, j);
      constant = constant && x(i, j) == x(0, j);
    }
    p.mean[j] = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (x(i, j) - p.mean[j]) * (x(i, j) - p.mean[j]);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    p.stddev[j] = constant || !(sd > 0.0) ? 1.0 : sd;
    if (constant) p.mean[j] = x(0, j);
  }
  std::vector<double> z(x.data.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> out(z.data() + i * d, d);
    p.apply(x.row(i), out);
  }
  return {FeatureMatrix(n, d, std::move(z), x.names), std::move(p)};
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

enum class Init { plus_plus, random_points };

struct KMeansOptions {
  std::size_t max_iter = 300;
  double tol = 1e-10;          // stop when no centroid moves farther than this
  Init init = Init::plus_plus;
  bool check_monotone = false;  // throw if SSE ever increases between iterations
};

struct KMeansModel {
  std::size_t k = 0;
  std::size_t dims = 0;
  std::vector<double> centroids;     // k x dims
  std::vector<std::size_t> labels;   // one cluster index per point
  double sse = 0.0;
  std::size_t iterations_run = 0;
  std::uint64_t seed = 0;
  std::vector<double> sse_trace;     // SSE after each iteration

  std::span<const double> centroid(std::size_t c) const { return {centroids.data() + c * dims, dims}; }

  // Binary membership indicator z_ik.
  bool assigned(std::size_t i, std::size_t c) const { return labels[i] == c; }

  // Nearest centroid by squared Euclidean distance; ties go to the lower index.
  std::size_t nearest(std::span<const double> point) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double d = squared_distance(point, centroid(c));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    return best;
  }

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto l : labels) ++sizes[l];
    return sizes;
  }
};

// Within-cluster sum of squared distances for the given centroids/labels.
inline double sum_squared_error(const FeatureMatrix& x, std::span<const double> centroids,
                                std::span<const std::size_t> labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i)
    s += squared_distance(x.row(i), centroids.subspan(labels[i] * x.cols, x.cols));
  return s;
}

inline double sum_squared_error(const FeatureMatrix& x, const KMeansModel& m) {
  return sum_squared_error(x, m.centroids, m.labels);
}

namespace detail {

inline std::vector<double> seed_centroids(const FeatureMatrix& x, std::size_t k, std::mt19937_64& rng, Init init) {
  const std::size_t n = x.rows, d = x.cols;
  std::vector<double> c;
  c.reserve(k * d);
  auto push = [&](std::size_t i) { c.insert(c.end(), x.row(i).begin(), x.row(i).end()); };

  if (init == Init::random_points) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
      push(idx[i]);
    }
    return c;
  }

  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  push(first(rng));
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t chosen = 1; chosen < k; ++chosen) {
    const std::span<const double> last(c.data() + (chosen - 1) * d, d);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], squared_distance(x.row(i), last));
      total += dist[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += dist[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      // every point coincides with a chosen centroid
      pick = first(rng);
    }
    push(pick);
  }
  return c;
}

}  // namespace detail

inline KMeansModel kmeans(const FeatureMatrix& x, std::size_t k, std::uint64_t seed, const KMeansOptions& opt = {}) {
  const std::size_t n = x.rows, d = x.cols;
  if (k < 1) throw Error(ErrorCode::validation, "k must be at least 1", "k");
  if (k > n) throw Error(ErrorCode::validation, "k exceeds the number of observations", "k");
  if (opt.max_iter < 1) throw Error(ErrorCode::validation, "max_iter must be at least 1", "max_iter");

  std::mt19937_64 rng(seed);
  KMeansModel m;
  m.k = k;
  m.dims = d;
  m.seed = seed;
  m.centroids = detail::seed_centroids(x, k, rng, opt.init);
  m.labels.assign(n, 0);

  std::vector<double> point_cost(n, 0.0);
  for (std::size_t iter = 0; iter < opt.max_iter; ++iter) {
    // assignment step
    for (std::size_t i = 0; i < n; ++i) {
      m.labels[i] = m.nearest(x.row(i));
      point_cost[i] = squared_distance(x.row(i), m.centroid(m.labels[i]));
    }
    // empty clusters take the point farthest from its centroid
    auto sizes = m.cluster_sizes();
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (sizes[m.labels[i]] > 1 && (far == n || point_cost[i] > point_cost[far])) far = i;
      if (far == n) break;  // cannot happen when k <= n
      --sizes[m.labels[far]];
      m.labels[far] = c;
      ++sizes[c];
      point_cost[far] = 0.0;
    }
    // update step
    std::vector<double> next(k * d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) next[m.labels[i] * d + j] += x(i, j);
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t j = 0; j < d; ++j) next[c * d + j] /= static_cast<double>(sizes[c]);

    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c)
      shift = std::max(shift, std::sqrt(squared_distance({next.data() + c * d, d}, m.centroid(c))));
    m.centroids = std::move(next);
    m.iterations_run = iter + 1;

    const double sse = sum_squared_error(x, m);
    if (opt.check_monotone && !m.sse_trace.empty() && sse > m.sse_trace.back() * (1.0 + 1e-12) + 1e-12)
      throw Error(ErrorCode::internal, "k-means SSE increased between iterations");
    m.sse_trace.push_back(sse);
    if (shift <= opt.tol) break;
  }
  m.sse = sum_squared_error(x, m);
  return m;
}

struct ScreePoint {
  std::size_t k = 0;
  double sse = 0.0;
};

// Derived per-run seed so each (k, restart) pair gets an independent stream.
inline std::uint64_t restart_seed(std::uint64_t seed, std::size_t k, std::size_t restart) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (1 + k * 1000003ull + restart);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Lowest-SSE model over `restarts` independently seeded runs.
inline KMeansModel best_of(const FeatureMatrix& x, std::size_t k, std::uint64_t seed, std::size_t restarts,
                           const KMeansOptions& opt = {}) {
  KMeansModel best;
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    auto m = kmeans(x, k, restart_seed(seed, k, r), opt);
    if (r == 0 || m.sse < best.sse) best = std::move(m);
  }
  return best;
}

inline std::vector<ScreePoint> scree(const FeatureMatrix& x, std::size_t k_min, std::size_t k_max, std::uint64_t seed,
                                     std::size_t restarts = 10, const KMeansOptions& opt = {}) {
  if (k_min < 1 || k_min > k_max || k_max > x.rows)
    throw Error(ErrorCode::validation, "scree range must satisfy 1 <= k_min <= k_max <= n", "k");
  std::vector<ScreePoint> out;
  for (std::size_t k = k_min; k <= k_max; ++k) out.push_back({k, best_of(x, k, seed, restarts, opt).sse});
  return out;
}

// Knee of the scree curve: after rescaling both axes to [0,1], the interior
// point farthest from the chord joining the first and last points. Ties go
// to the smaller k.
inline std::size_t elbow(std::span<const ScreePoint> points) {
  if (points.size() < 3) throw Error(ErrorCode::validation, "elbow selection needs at least three scree points");
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].k <= points[i - 1].k) throw Error(ErrorCode::validation, "scree k values must increase");

  const double k0 = static_cast<double>(points.front().k);
  const double k1 = static_cast<double>(points.back().k);
  double lo = points.front().sse, hi = points.front().sse;
  for (const auto& p : points) {
    lo = std::min(lo, p.sse);
    hi = std::max(hi, p.sse);
  }
  const double span = hi - lo;
  auto unit = [&](const ScreePoint& p) {
    return std::pair{(static_cast<double>(p.k) - k0) / (k1 - k0), span > 0.0 ? (p.sse - lo) / span : 0.0};
  };
  const auto [ax, ay] = unit(points.front());
  const auto [bx, by] = unit(points.back());
  const double len = std::hypot(bx - ax, by - ay);

  std::size_t best = points[1].k;
  double best_d = -1.0;
  for (std::size_t i = 1; i + 1 < points.size(); ++i) {
    const auto [px, py] = unit(points[i]);
    const double dist = len > 0.0 ? std::abs((bx - ax) * (ay - py) - (ax - px) * (by - ay)) / len : 0.0;
    if (dist > best_d + 1e-12) {
      best_d = dist;
      best = points[i].k;
    }
  }
  return best;
}

struct ClusterRow {
  std::size_t cluster = 0;
  std::size_t size = 0;
  std::vector<double> means;  // raw units, one per feature
};

struct ClusterSummary {
  std::vector<std::string> feature_names;
  std::vector<ClusterRow> rows;
};

// Per-cluster size and raw-feature means. `raw` must have the same row order
// as the data the model was fit on.
inline ClusterSummary cluster_summary(const KMeansModel& m, const FeatureMatrix& raw) {
  if (raw.rows != m.labels.size())
    throw Error(ErrorCode::validation, "raw feature matrix row count differs from the fitted data");
  ClusterSummary s{raw.names, {}};
  for (std::size_t c = 0; c < m.k; ++c) s.rows.push_back({c, 0, std::vector<double>(raw.cols, 0.0)});
  for (std::size_t i = 0; i < raw.rows; ++i) {
    auto& r = s.rows[m.labels[i]];
    ++r.size;
    for (std::size_t j = 0; j < raw.cols; ++j) r.means[j] += raw(i, j);
  }
  for (auto& r : s.rows)
    if (r.size > 0)
      for (double& v : r.means) v /= static_cast<double>(r.size);
  return s;
}

}  // namespace wuiq::segmentation
