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

// Exact k-nearest-neighbor search over one stratum's training points, using
// the k-means partition to skip distance evaluations.
//
// With d1 the target-to-centroid distance and d2 a member's distance to its
// own centroid, the triangle inequality gives ||target - member|| >= |d1 - d2|.
// Once the current k-th neighbor distance d_max falls below that bound the
// member cannot enter the set and its distance is never computed.
//
// Members of a cluster are stored by decreasing d2, so the members the rule
// rejects form a prefix (d2 too large) and a suffix (d2 too small). The
// cluster nearest the target is searched outward from the member whose d2 is
// closest to d1, which fills the neighbor set with good candidates quickly.
// Every other cluster is then visited nearest-centroid first, farthest
// members first, jumping over the rejected prefix by binary search and
// stopping at the rejected suffix.

#ifndef DROPIMPUTE_KNN_HPP
#define DROPIMPUTE_KNN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <type_traits>
#include <vector>

#include "dropimpute/error.hpp"
#include "dropimpute/matrix.hpp"
#include "dropimpute/partitioner.hpp"

namespace dropimpute {

struct Neighbor {
  std::size_t index = 0;  // position in the training set
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Neighbors sorted by (distance, index).
struct NeighborSet {
  std::vector<Neighbor> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  double d_max() const { return entries.empty() ? 0.0 : entries.back().distance; }
};

struct SearchStats {
  std::uint64_t queries = 0;
  std::uint64_t point_distances = 0;     // target-to-member evaluations
  std::uint64_t centroid_distances = 0;  // target-to-centroid evaluations
  std::uint64_t rule_hits = 0;           // times the skip rule fired
  std::uint64_t pruned_points = 0;       // members never evaluated

  std::uint64_t total_distances() const { return point_distances + centroid_distances; }

  SearchStats& operator+=(const SearchStats& o) {
    queries += o.queries;
    point_distances += o.point_distances;
    centroid_distances += o.centroid_distances;
    rule_hits += o.rule_hits;
    pruned_points += o.pruned_points;
    return *this;
  }
};

/// Default skip observer.
struct IgnoreSkips {
  void operator()(std::size_t /*train_index*/, double /*d_max*/) const {}
};

namespace detail {

class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { items_.reserve(k + 1); }

  bool full() const { return items_.size() == k_; }
  double worst() const { return items_.back().distance; }

  void offer(std::size_t index, double d) {
    const auto before = [](const Neighbor& a, const Neighbor& b) {
      return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
    };
    const Neighbor cand{index, d};
    if (full() && !before(cand, items_.back())) return;
    items_.insert(std::upper_bound(items_.begin(), items_.end(), cand, before), cand);
    if (items_.size() > k_) items_.pop_back();
  }

  std::vector<Neighbor> take() { return std::move(items_); }

 private:
  std::size_t k_;
  std::vector<Neighbor> items_;
};

// Relative slack on the skip test. Distances carry rounding error, and an
// exact tie at d_max must still be evaluated for the index tie-break, so the
// rule only fires when the bound clears d_max by a margin.
inline constexpr double kSkipSlack = 1e-10;

}  // namespace detail

/// Skip test: may a member with centroid distance d2, in a cluster whose
/// centroid is d1 away from the target, be passed over given the current
/// k-th distance d_max?
inline bool triangle_skip(double d_max, double d1, double d2) {
  return std::abs(d1 - d2) > d_max + detail::kSkipSlack * (d1 + d2);
}

/// Training points reorganized by cluster for pruned search.
class ClusteredIndex {
 public:
  ClusteredIndex() = default;

  ClusteredIndex(const Matrix& points, const ClusterModel& model)
      : centroids_(model.centroids), dims_(points.cols()) {
    if (points.rows() != model.assignment.size()) {
      fail(ErrorCode::DimensionMismatch, "cluster model does not match the training points");
    }
    const std::size_t n = points.rows();
    const std::size_t c = model.cluster_count;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (model.assignment[a] != model.assignment[b]) return model.assignment[a] < model.assignment[b];
      if (model.centroid_distance[a] != model.centroid_distance[b]) {
        return model.centroid_distance[a] > model.centroid_distance[b];
      }
      return a < b;
    });
    offsets_.assign(c + 1, 0);
    for (std::uint32_t h : model.assignment) ++offsets_[h + 1];
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
    points_ = Matrix(n, dims_);
    member_distance_.resize(n);
    original_.resize(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
      const std::size_t i = order[pos];
      std::copy(points.row(i).begin(), points.row(i).end(), points_.row(pos).begin());
      member_distance_[pos] = model.centroid_distance[i];
      original_[pos] = i;
    }
  }

  std::size_t size() const { return original_.size(); }
  std::size_t dims() const { return dims_; }
  std::size_t cluster_count() const { return centroids_.rows(); }

  /// Exact k nearest training points to target, ties to the lower index.
  /// on_skip(train_index, d_max) is called for every member the skip rule
  /// passes over.
  template <typename OnSkip = IgnoreSkips>
  NeighborSet search(std::span<const double> target, std::size_t k, SearchStats* stats = nullptr,
                     OnSkip&& on_skip = {}) const {
    if (size() == 0) fail(ErrorCode::EmptyTrainingSet, "no training points to search");
    if (k == 0) fail(ErrorCode::InvalidArgument, "k must be positive");
    if (target.size() != dims_) fail(ErrorCode::DimensionMismatch, "target dimension mismatch");

    SearchStats local;
    local.queries = 1;
    const std::size_t c = cluster_count();
    std::vector<double> d1(c);
    std::vector<std::size_t> visit(c);
    for (std::size_t h = 0; h < c; ++h) d1[h] = distance(target, centroids_.row(h));
    local.centroid_distances = c;
    std::iota(visit.begin(), visit.end(), std::size_t{0});
    std::sort(visit.begin(), visit.end(), [&](std::size_t a, std::size_t b) {
      return d1[a] < d1[b] || (d1[a] == d1[b] && a < b);
    });

    detail::TopK top(std::min(k, size()));
    auto evaluate = [&](std::size_t pos) {
      ++local.point_distances;
      top.offer(original_[pos], distance(target, points_.row(pos)));
    };
    auto skip_range = [&](std::size_t from, std::size_t to) {
      if (from >= to) return;
      ++local.rule_hits;
      local.pruned_points += to - from;
      if constexpr (!std::is_same_v<std::remove_cvref_t<OnSkip>, IgnoreSkips>) {
        for (std::size_t pos = from; pos < to; ++pos) on_skip(original_[pos], top.worst());
      }
    };
    auto rejects = [&](std::size_t pos, double dc) {
      return top.full() && triangle_skip(top.worst(), dc, member_distance_[pos]);
    };

    // nearest cluster: outward from the member with d2 closest to d1
    {
      const std::size_t h = visit.front();
      const double dc = d1[h];
      const std::size_t begin = offsets_[h];
      const std::size_t end = offsets_[h + 1];
      std::size_t split = first_at_or_below(begin, end, dc);
      std::size_t up = split;   // next candidate is up - 1 (larger d2)
      std::size_t down = split; // next candidate is down (smaller d2)
      bool up_open = up > begin;
      bool down_open = down < end;
      while (up_open || down_open) {
        bool take_up = up_open;
        if (up_open && down_open) {
          take_up = member_distance_[up - 1] - dc <= dc - member_distance_[down];
        }
        if (take_up) {
          if (rejects(up - 1, dc)) {
            skip_range(begin, up);
            up_open = false;
            continue;
          }
          evaluate(--up);
          up_open = up > begin;
        } else {
          if (rejects(down, dc)) {
            skip_range(down, end);
            down_open = false;
            continue;
          }
          evaluate(down++);
          down_open = down < end;
        }
      }
    }

    for (std::size_t v = 1; v < c; ++v) {
      const std::size_t h = visit[v];
      const double dc = d1[h];
      const std::size_t begin = offsets_[h];
      const std::size_t end = offsets_[h + 1];
      std::size_t pos = begin;
      if (top.full()) {
        // members whose d2 exceeds d1 by more than d_max
        pos = static_cast<std::size_t>(
            std::partition_point(member_distance_.begin() + static_cast<std::ptrdiff_t>(begin),
                                 member_distance_.begin() + static_cast<std::ptrdiff_t>(end),
                                 [&](double d2) { return d2 > dc && triangle_skip(top.worst(), dc, d2); }) -
            member_distance_.begin());
        skip_range(begin, pos);
      }
      for (; pos < end; ++pos) {
        if (rejects(pos, dc)) {
          if (member_distance_[pos] <= dc) {
            skip_range(pos, end);
            break;
          }
          skip_range(pos, pos + 1);
          continue;
        }
        evaluate(pos);
      }
    }
    if (stats) *stats += local;
    return NeighborSet{top.take()};
  }

 private:
  // First position in [begin, end) whose d2 is <= d.
  std::size_t first_at_or_below(std::size_t begin, std::size_t end, double d) const {
    return static_cast<std::size_t>(
        std::partition_point(member_distance_.begin() + static_cast<std::ptrdiff_t>(begin),
                             member_distance_.begin() + static_cast<std::ptrdiff_t>(end),
                             [d](double d2) { return d2 > d; }) -
        member_distance_.begin());
  }

  Matrix centroids_;
  std::size_t dims_ = 0;
  std::vector<std::size_t> offsets_;
  Matrix points_;                       // members grouped by cluster, farthest first
  std::vector<double> member_distance_; // distance to own centroid, same order
  std::vector<std::size_t> original_;   // same order -> training index
};

inline NeighborSet knn_search(std::span<const double> target, const ClusteredIndex& train,
                              std::size_t k, SearchStats* stats = nullptr) {
  return train.search(target, k, stats);
}

/// Majority vote over neighbor purchase indicators; a tie goes to 1.
inline bool impute_indicator(const NeighborSet& neighbors, std::span<const std::uint8_t> train_y) {
  if (neighbors.empty()) fail(ErrorCode::InvalidArgument, "empty neighbor set");
  std::size_t buyers = 0;
  for (const Neighbor& nb : neighbors.entries) buyers += train_y[nb.index] != 0;
  return 2 * buyers >= neighbors.size();
}

/// Minimizer of y_hat * sum_j (z - z_j)^2 + (1 - y_hat) * z^2 over z >= 0:
/// zero for a predicted visitor, otherwise the neighbor mean (clamped at zero,
/// which only matters when neighbor amounts are negative).
inline double impute_amount(bool y_hat, const NeighborSet& neighbors, std::span<const double> train_z) {
  if (neighbors.empty()) fail(ErrorCode::InvalidArgument, "empty neighbor set");
  if (!y_hat) return 0.0;
  double sum = 0.0;
  for (const Neighbor& nb : neighbors.entries) sum += train_z[nb.index];
  return std::max(0.0, sum / static_cast<double>(neighbors.size()));
}

/// Variant averaging only the neighbors that are buyers.
inline double impute_amount_buyers_only(bool y_hat, const NeighborSet& neighbors,
                                        std::span<const std::uint8_t> train_y,
                                        std::span<const double> train_z) {
  if (neighbors.empty()) fail(ErrorCode::InvalidArgument, "empty neighbor set");
  if (!y_hat) return 0.0;
  double sum = 0.0;
  std::size_t count = 0;
  for (const Neighbor& nb : neighbors.entries) {
    if (!train_y[nb.index]) continue;
    sum += train_z[nb.index];
    ++count;
  }
  return count == 0 ? 0.0 : std::max(0.0, sum / static_cast<double>(count));
}

struct ImputedOutcome {
  bool y_hat = false;
  double z_hat = 0.0;
  double neighbor_buyer_fraction = 0.0;
};

inline ImputedOutcome impute_outcome(const NeighborSet& neighbors, std::span<const std::uint8_t> train_y,
                                     std::span<const double> train_z, bool buyers_only_mean = false) {
  ImputedOutcome out;
  out.y_hat = impute_indicator(neighbors, train_y);
  out.z_hat = buyers_only_mean ? impute_amount_buyers_only(out.y_hat, neighbors, train_y, train_z)
                               : impute_amount(out.y_hat, neighbors, train_z);
  std::size_t buyers = 0;
  for (const Neighbor& nb : neighbors.entries) buyers += train_y[nb.index] != 0;
  out.neighbor_buyer_fraction = static_cast<double>(buyers) / static_cast<double>(neighbors.size());
  return out;
}

}  // namespace dropimpute

#endif  // DROPIMPUTE_KNN_HPP
