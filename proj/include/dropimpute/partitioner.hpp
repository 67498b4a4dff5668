/*
 * Copyright 2026 The dropimpute Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Stratification by (arm, segment) and k-means partitioning inside each
// stratum. The cluster count is picked by the simplified Silhouette, which
// only needs point-to-centroid distances that k-means has already cached.

#ifndef DROPIMPUTE_PARTITIONER_HPP
#define DROPIMPUTE_PARTITIONER_HPP

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "dropimpute/core.hpp"
#include "dropimpute/error.hpp"
#include "dropimpute/matrix.hpp"
#include "dropimpute/rng.hpp"

namespace dropimpute {

struct StratumKey {
  std::uint32_t arm = 0;
  std::uint32_t segment = 0;

  friend constexpr auto operator<=>(const StratumKey&, const StratumKey&) = default;

  std::uint64_t packed() const { return (std::uint64_t{arm} << 32) | segment; }
};

/// Disjoint cover of the dataset by (arm, segment); empty strata are absent.
inline std::map<StratumKey, std::vector<std::size_t>> stratify(const Dataset& d) {
  std::map<StratumKey, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < d.size(); ++i) {
    strata[StratumKey{d[i].arm.id, d[i].segment}].push_back(i);
  }
  return strata;
}

struct KMeansConfig {
  std::uint64_t seed = 0x5eed;
  int restarts = 5;
  int max_iterations = 100;
  double tolerance = 1e-6;  // max centroid movement
};

struct ClusterModel {
  std::size_t cluster_count = 0;
  Matrix centroids;
  std::vector<std::uint32_t> assignment;
  std::vector<double> centroid_distance;  // exact ||x_i - mu_C(i)||
  double within_ss = 0.0;
  int iterations = 0;
  std::vector<double> ss_trace;  // within-cluster SS after every assignment pass

  std::span<const double> centroid(std::size_t h) const { return centroids.row(h); }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(cluster_count, 0);
    for (std::uint32_t h : assignment) ++s[h];
    return s;
  }
};

namespace detail {

/// Assigns every point to its nearest centroid (ties to the lower cluster id)
/// and refreshes the cached distances. Returns the number of changed labels.
inline std::size_t assign_points(const Matrix& points, ClusterModel& m) {
  std::size_t changed = 0;
  m.within_ss = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto x = points.row(i);
    std::uint32_t best = 0;
    double best_sq = std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < m.cluster_count; ++h) {
      const double sq = squared_distance(x, m.centroid(h));
      if (sq < best_sq) {
        best_sq = sq;
        best = static_cast<std::uint32_t>(h);
      }
    }
    if (m.assignment[i] != best) ++changed;
    m.assignment[i] = best;
    m.centroid_distance[i] = std::sqrt(best_sq);
    m.within_ss += best_sq;
  }
  m.ss_trace.push_back(m.within_ss);
  return changed;
}

/// Gives every empty cluster the point farthest from its own centroid,
/// taken from a cluster that can spare it.
inline void repair_empty(const Matrix& points, ClusterModel& m) {
  std::vector<std::size_t> sizes = m.sizes();
  for (std::size_t h = 0; h < m.cluster_count; ++h) {
    if (sizes[h] != 0) continue;
    std::size_t far = points.rows();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      if (sizes[m.assignment[i]] > 1 && m.centroid_distance[i] > far_d) {
        far_d = m.centroid_distance[i];
        far = i;
      }
    }
    if (far == points.rows()) return;
    --sizes[m.assignment[far]];
    ++sizes[h];
    m.within_ss -= far_d * far_d;
    m.assignment[far] = static_cast<std::uint32_t>(h);
    m.centroid_distance[far] = 0.0;
    std::copy(points.row(far).begin(), points.row(far).end(), m.centroids.row(h).begin());
  }
}

/// Moves centroids to the means of their members; returns the largest shift.
inline double update_centroids(const Matrix& points, ClusterModel& m) {
  const std::size_t dims = points.cols();
  Matrix sums(m.cluster_count, dims);
  std::vector<std::size_t> counts(m.cluster_count, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto h = m.assignment[i];
    ++counts[h];
    const auto x = points.row(i);
    auto s = sums.row(h);
    for (std::size_t j = 0; j < dims; ++j) s[j] += x[j];
  }
  double moved = 0.0;
  for (std::size_t h = 0; h < m.cluster_count; ++h) {
    if (counts[h] == 0) continue;
    auto s = sums.row(h);
    for (double& v : s) v /= static_cast<double>(counts[h]);
    moved = std::max(moved, distance(s, m.centroid(h)));
    std::copy(s.begin(), s.end(), m.centroids.row(h).begin());
  }
  return moved;
}

/// k-means++ seeding.
inline Matrix seed_centroids(const Matrix& points, std::size_t c, Rng& rng) {
  const std::size_t n = points.rows();
  Matrix centroids(c, points.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  std::size_t pick = static_cast<std::size_t>(rng.below(n));
  for (std::size_t h = 0; h < c; ++h) {
    chosen[pick] = true;
    std::copy(points.row(pick).begin(), points.row(pick).end(), centroids.row(h).begin());
    if (h + 1 == c) break;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(h)));
      total += d2[i];
    }
    if (total > 0.0) {
      double target = rng.uniform() * total;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        pick = i;
        target -= d2[i];
        if (target < 0.0) break;
      }
    } else {
      // every remaining point coincides with a centroid
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
    }
  }
  return centroids;
}

}  // namespace detail

/// Lloyd's iterations from given starting centroids (no seeding, no
/// restarts). Used to refine centroids fitted on a subsample.
inline ClusterModel kmeans_from(const Matrix& points, const Matrix& initial, const KMeansConfig& cfg = {}) {
  if (initial.rows() == 0) fail(ErrorCode::InvalidArgument, "no starting centroids");
  if (points.rows() < initial.rows()) fail(ErrorCode::DegenerateInput, "fewer points than clusters");
  if (initial.cols() != points.cols()) fail(ErrorCode::DimensionMismatch, "centroid dimension mismatch");
  ClusterModel m;
  m.cluster_count = initial.rows();
  m.centroids = initial;
  m.assignment.assign(points.rows(), 0);
  m.centroid_distance.assign(points.rows(), 0.0);
  detail::assign_points(points, m);
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    m.iterations = it;
    detail::repair_empty(points, m);
    const double moved = detail::update_centroids(points, m);
    const std::size_t changed = detail::assign_points(points, m);
    if (moved < cfg.tolerance || changed == 0) break;
  }
  return m;
}

/// Lloyd's k-means from k-means++ seeds, best of cfg.restarts by
/// within-cluster SS. On return every point sits in its nearest cluster and
/// centroid_distance holds the exact distance to that centroid.
inline ClusterModel kmeans(const Matrix& points, std::size_t c, const KMeansConfig& cfg = {}) {
  if (c == 0) fail(ErrorCode::InvalidArgument, "cluster count must be positive");
  if (points.rows() < c) fail(ErrorCode::DegenerateInput, "fewer points than clusters");
  ClusterModel best;
  const int restarts = std::max(1, c == 1 ? 1 : cfg.restarts);
  for (int r = 0; r < restarts; ++r) {
    Rng rng(split_seed(cfg.seed, static_cast<std::uint64_t>(r)));
    ClusterModel m = kmeans_from(points, detail::seed_centroids(points, c, rng), cfg);
    if (r == 0 || m.within_ss < best.within_ss) best = std::move(m);
  }
  return best;
}

struct SilhouetteScore {
  std::vector<double> per_point;
  double mean = 0.0;
};

/// Simplified Silhouette: a_i is the cached distance to the own centroid,
/// b_i the distance to the nearest other centroid.
inline SilhouetteScore simplified_silhouette(const ClusterModel& model, const Matrix& points) {
  if (model.cluster_count < 2) fail(ErrorCode::SingleCluster, "silhouette needs at least two clusters");
  if (points.rows() != model.assignment.size()) {
    fail(ErrorCode::DimensionMismatch, "points do not match the cluster model");
  }
  SilhouetteScore score;
  score.per_point.resize(points.rows());
  double sum = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const double a = model.centroid_distance[i];
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < model.cluster_count; ++h) {
      if (h == model.assignment[i]) continue;
      b = std::min(b, distance(points.row(i), model.centroid(h)));
    }
    const double denom = std::max(a, b);
    const double s = denom > 0.0 ? (b - a) / denom : 0.0;
    score.per_point[i] = s;
    sum += s;
  }
  score.mean = points.rows() ? sum / static_cast<double>(points.rows()) : 0.0;
  return score;
}

struct ClusterSelection {
  ClusterModel model;
  std::size_t chosen = 0;
  std::vector<std::pair<std::size_t, double>> scores;  // (c, mean simplified Silhouette)
};

/// Fits k-means for every c in [c_min, c_max] and keeps the one with the
/// highest mean simplified Silhouette; ties go to the smaller c.
inline ClusterSelection select_cluster_count(const Matrix& points, std::size_t c_min,
                                             std::size_t c_max, const KMeansConfig& cfg = {}) {
  if (c_min < 2) fail(ErrorCode::InvalidArgument, "c_min must be at least 2");
  if (c_max < c_min) fail(ErrorCode::InvalidArgument, "empty cluster-count range");
  if (c_max > points.rows()) fail(ErrorCode::DegenerateInput, "c_max exceeds the point count");
  ClusterSelection out;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t c = c_min; c <= c_max; ++c) {
    KMeansConfig local = cfg;
    local.seed = split_seed(cfg.seed, c);
    ClusterModel m = kmeans(points, c, local);
    const double s = simplified_silhouette(m, points).mean;
    out.scores.emplace_back(c, s);
    if (s > best) {
      best = s;
      out.chosen = c;
      out.model = std::move(m);
    }
  }
  return out;
}

}  // namespace dropimpute

#endif  // DROPIMPUTE_PARTITIONER_HPP
