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

// End-to-end imputation. The proposed method screens missing users with the
// logistic classifier, then, per (arm, segment) stratum, trains on real
// buyers plus estimated visitors and imputes every dropout-buyer candidate
// from its k nearest training neighbors. The benchmark strategies fill the
// missing set with zeros or arm means, or drop it.

#ifndef DROPIMPUTE_IMPUTERS_HPP
#define DROPIMPUTE_IMPUTERS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dropimpute/classifier.hpp"
#include "dropimpute/core.hpp"
#include "dropimpute/error.hpp"
#include "dropimpute/knn.hpp"
#include "dropimpute/matrix.hpp"
#include "dropimpute/metrics.hpp"
#include "dropimpute/parallel.hpp"
#include "dropimpute/partitioner.hpp"
#include "dropimpute/rng.hpp"

namespace dropimpute {

enum class ImputationMethod {
  Proposed,
  CompleteCase,   // BM1
  ControlMean,    // BM2
  TreatmentMean,  // BM3
  Zero,           // BM4
  BestCase,       // BM5
  WorstCase,      // BM6
  NoMissing,
};

inline constexpr ImputationMethod kAllMethods[] = {
    ImputationMethod::CompleteCase, ImputationMethod::ControlMean, ImputationMethod::TreatmentMean,
    ImputationMethod::Zero,         ImputationMethod::BestCase,    ImputationMethod::WorstCase,
    ImputationMethod::Proposed,     ImputationMethod::NoMissing,
};

/// Short name used on the command line and in files.
inline std::string_view to_string(ImputationMethod m) {
  switch (m) {
    case ImputationMethod::Proposed: return "proposed";
    case ImputationMethod::CompleteCase: return "bm1";
    case ImputationMethod::ControlMean: return "bm2";
    case ImputationMethod::TreatmentMean: return "bm3";
    case ImputationMethod::Zero: return "bm4";
    case ImputationMethod::BestCase: return "bm5";
    case ImputationMethod::WorstCase: return "bm6";
    case ImputationMethod::NoMissing: return "nomissing";
  }
  return "?";
}

/// Name used in report tables.
inline std::string_view display_name(ImputationMethod m) {
  switch (m) {
    case ImputationMethod::Proposed: return "Proposed";
    case ImputationMethod::CompleteCase: return "BM1";
    case ImputationMethod::ControlMean: return "BM2";
    case ImputationMethod::TreatmentMean: return "BM3";
    case ImputationMethod::Zero: return "BM4";
    case ImputationMethod::BestCase: return "BM5";
    case ImputationMethod::WorstCase: return "BM6";
    case ImputationMethod::NoMissing: return "NoMissing";
  }
  return "?";
}

inline ImputationMethod parse_method(std::string_view s) {
  for (ImputationMethod m : kAllMethods) {
    if (s == to_string(m) || s == display_name(m)) return m;
  }
  fail(ErrorCode::InvalidArgument, "unknown method '" + std::string(s) + "'");
}

enum class Provenance : std::uint8_t {
  Observed,
  EstimatedVisitor,  // screened out as a visitor, set to zero
  ImputedDropout,    // given a positive amount
  ImputedVisitor,    // imputed as zero
  Dropped,           // excluded from analysis
};

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Observed: return "observed";
    case Provenance::EstimatedVisitor: return "estimated_visitor";
    case Provenance::ImputedDropout: return "imputed_dropout";
    case Provenance::ImputedVisitor: return "imputed_visitor";
    case Provenance::Dropped: return "dropped";
  }
  return "?";
}

inline Provenance parse_provenance(std::string_view s) {
  for (Provenance p : {Provenance::Observed, Provenance::EstimatedVisitor, Provenance::ImputedDropout,
                       Provenance::ImputedVisitor, Provenance::Dropped}) {
    if (s == to_string(p)) return p;
  }
  fail(ErrorCode::Schema, "unknown provenance '" + std::string(s) + "'");
}

/// Final outcome per user, aligned with the source dataset's row order.
struct ImputedDataset {
  ImputationMethod method = ImputationMethod::Proposed;
  std::vector<std::uint32_t> arm;
  std::vector<std::uint32_t> segment;
  std::vector<double> z;  // NaN where dropped
  std::vector<std::uint8_t> y;
  std::vector<Provenance> provenance;
  std::vector<std::uint8_t> pooled;  // trained on the arm-wide pool

  std::size_t size() const { return z.size(); }
  bool dropped(std::size_t i) const { return provenance[i] == Provenance::Dropped; }

  /// Retained final values of one arm.
  std::vector<double> arm_values(std::uint32_t a) const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) {
      if (arm[i] == a && !dropped(i)) out.push_back(z[i]);
    }
    return out;
  }

  /// Retained final values of every non-control arm.
  std::vector<double> treatment_values() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) {
      if (arm[i] != 0 && !dropped(i)) out.push_back(z[i]);
    }
    return out;
  }

  std::size_t count(Provenance p) const {
    return static_cast<std::size_t>(std::count(provenance.begin(), provenance.end(), p));
  }
};

/// Zero rate over retained users.
inline double zero_rate(const ImputedDataset& imputed) {
  std::size_t kept = 0, zeros = 0;
  for (std::size_t i = 0; i < imputed.size(); ++i) {
    if (imputed.dropped(i)) continue;
    ++kept;
    zeros += imputed.z[i] == 0.0;
  }
  return kept == 0 ? 0.0 : static_cast<double>(zeros) / static_cast<double>(kept);
}

namespace detail {

/// Copy of the observed part; missing entries start out as estimated
/// visitors with zero amount.
inline ImputedDataset passthrough(const Dataset& d, ImputationMethod method) {
  ImputedDataset out;
  out.method = method;
  const std::size_t n = d.size();
  out.arm.resize(n);
  out.segment.resize(n);
  out.z.assign(n, 0.0);
  out.y.assign(n, 0);
  out.provenance.assign(n, Provenance::EstimatedVisitor);
  out.pooled.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    out.arm[i] = d[i].arm.id;
    out.segment[i] = d[i].segment;
    if (d[i].outcome.is_observed()) {
      out.z[i] = d[i].outcome.z();
      out.y[i] = 1;
      out.provenance[i] = Provenance::Observed;
    }
  }
  return out;
}

inline void require_observed_per_arm(const Dataset& d) {
  for (TreatmentArm a : d.arms()) {
    bool any = false;
    for (const UserRecord& r : d.records()) {
      if (r.arm == a && r.outcome.is_observed()) {
        any = true;
        break;
      }
    }
    if (!any) fail(ErrorCode::EmptyArm, "arm " + std::to_string(a.id) + " has no observed outcome");
  }
}

}  // namespace detail

struct ClusteringConfig {
  std::vector<std::size_t> features;  // covariate columns; empty = all
  std::size_t c_min = 2;
  std::size_t c_max = 20;
  KMeansConfig kmeans;
  // Cluster-count selection and k-means++ restarts run on a subsample of at
  // most this many training points; the chosen centroids are then refined by
  // Lloyd's iterations on the full stratum. 0 disables subsampling.
  std::size_t selection_sample = 10000;
};

struct PipelineConfig {
  FitConfig fit;
  ThresholdMode threshold = ThresholdMode::fixed(0.5);
  ClusteringConfig clustering;
  std::size_t k = 15;
  bool buyers_only_mean = false;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

struct StratumReport {
  StratumKey key;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t cluster_count = 0;
  bool pooled = false;
  SearchStats search;
};

struct ProposedResult {
  ImputedDataset imputed;
  std::optional<ClassifierModel> model;
  ScreeningResult screening;
  std::vector<StratumReport> strata;
  SearchStats search;
};

namespace detail {

/// Clustering-feature rows for a set of users, z-scored with the mean and
/// population sd of `basis`.
struct FeatureSpace {
  std::vector<std::size_t> columns;
  std::vector<double> mean;
  std::vector<double> scale;

  FeatureSpace(const Dataset& d, std::vector<std::size_t> cols, std::span<const std::size_t> basis)
      : columns(std::move(cols)), mean(columns.size(), 0.0), scale(columns.size(), 1.0) {
    const auto n = static_cast<double>(basis.size());
    for (std::size_t i : basis) {
      for (std::size_t a = 0; a < columns.size(); ++a) mean[a] += d[i].x[columns[a]];
    }
    for (double& m : mean) m /= n;
    std::vector<double> ss(columns.size(), 0.0);
    for (std::size_t i : basis) {
      for (std::size_t a = 0; a < columns.size(); ++a) {
        const double v = d[i].x[columns[a]] - mean[a];
        ss[a] += v * v;
      }
    }
    for (std::size_t a = 0; a < columns.size(); ++a) {
      const double sd = std::sqrt(ss[a] / n);
      if (sd > 0.0 && std::isfinite(sd)) scale[a] = sd;
    }
  }

  Matrix project(const Dataset& d, std::span<const std::size_t> rows) const {
    Matrix out(rows.size(), columns.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t a = 0; a < columns.size(); ++a) {
        out(r, a) = (d[rows[r]].x[columns[a]] - mean[a]) / scale[a];
      }
    }
    return out;
  }
};

inline ClusterModel cluster_training_set(const Matrix& train, std::size_t stratum_size,
                                         const PipelineConfig& cfg, std::uint64_t seed) {
  const ClusteringConfig& cc = cfg.clustering;
  KMeansConfig kc = cc.kmeans;
  kc.seed = split_seed(seed, 0);
  const auto c_hi = std::min<std::size_t>(
      cc.c_max, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(stratum_size)))));
  // small strata get one cluster, i.e. an exhaustive search
  if (stratum_size < 2 * cfg.k || c_hi < std::max<std::size_t>(cc.c_min, 2) || train.rows() < c_hi) {
    return kmeans(train, 1, kc);
  }
  const std::size_t c_lo = std::max<std::size_t>(cc.c_min, 2);
  if (cc.selection_sample == 0 || train.rows() <= cc.selection_sample) {
    return select_cluster_count(train, c_lo, c_hi, kc).model;
  }
  // deterministic subsample: partial Fisher-Yates, then original order
  std::vector<std::size_t> pick(train.rows());
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  Rng rng(split_seed(seed, 1));
  for (std::size_t i = 0; i < cc.selection_sample; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pick.size() - i));
    std::swap(pick[i], pick[j]);
  }
  pick.resize(cc.selection_sample);
  std::sort(pick.begin(), pick.end());
  Matrix sample(pick.size(), train.cols());
  for (std::size_t r = 0; r < pick.size(); ++r) {
    std::copy(train.row(pick[r]).begin(), train.row(pick[r]).end(), sample.row(r).begin());
  }
  const ClusterSelection chosen = select_cluster_count(sample, c_lo, std::min(c_hi, sample.rows()), kc);
  return kmeans_from(train, chosen.model.centroids, kc);
}

}  // namespace detail

/// Runs the full proposed method and keeps the intermediate artifacts.
inline ProposedResult run_proposed_detailed(const Dataset& d, const PipelineConfig& cfg = {}) {
  if (cfg.k == 0) fail(ErrorCode::InvalidArgument, "k must be positive");
  ProposedResult result;
  result.imputed = detail::passthrough(d, ImputationMethod::Proposed);
  if (d.missing_count() == 0) return result;
  detail::require_observed_per_arm(d);

  // screening
  ClassifierModel model = fit(d, cfg.fit);
  std::vector<double> probs = predict_all(d, model);
  model.threshold = choose_threshold(d, probs, cfg.threshold);
  result.screening = screen(d, model, std::move(probs));
  result.model = model;

  std::vector<std::size_t> columns = cfg.clustering.features;
  if (columns.empty()) {
    for (std::size_t j = 0; j < d.dims(); ++j) columns.push_back(j);
  }
  for (std::size_t c : columns) {
    if (c >= d.dims()) fail(ErrorCode::InvalidArgument, "clustering feature index out of range");
  }

  const auto& classes = result.screening.classes;
  auto is_train = [&](std::size_t i) {
    return classes[i] != UserClass::FalsePositive;  // real buyers and estimated visitors
  };
  std::vector<std::uint8_t> train_label(d.size(), 0);
  std::vector<double> train_amount(d.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i].outcome.is_observed()) {
      train_label[i] = 1;
      train_amount[i] = d[i].outcome.z();
    }
  }

  ImputedDataset& out = result.imputed;
  const auto strata = stratify(d);
  for (const auto& [key, members] : strata) {
    StratumReport report;
    report.key = key;
    std::vector<std::size_t> train, test;
    for (std::size_t i : members) (is_train(i) ? train : test).push_back(i);
    if (test.empty()) continue;
    if (train.empty()) {
      // nothing to learn from in this stratum: borrow every segment of the arm
      report.pooled = true;
      for (const auto& [other, rows] : strata) {
        if (other.arm != key.arm) continue;
        for (std::size_t i : rows) {
          if (is_train(i)) train.push_back(i);
        }
      }
      std::sort(train.begin(), train.end());
      if (train.empty()) {
        fail(ErrorCode::StratumTooSmall,
             "arm " + std::to_string(key.arm) + " has no training users for imputation");
      }
    }
    report.train_size = train.size();
    report.test_size = test.size();

    std::vector<std::size_t> basis = train;
    basis.insert(basis.end(), test.begin(), test.end());
    const detail::FeatureSpace space(d, columns, basis);
    const Matrix train_points = space.project(d, train);
    const Matrix test_points = space.project(d, test);

    const std::uint64_t stratum_seed =
        split_seed(cfg.seed, report.pooled ? (std::uint64_t{key.arm} << 32) | 0xffffffffu : key.packed());
    const ClusterModel clusters = detail::cluster_training_set(train_points, basis.size(), cfg, stratum_seed);
    report.cluster_count = clusters.cluster_count;
    const ClusteredIndex index(train_points, clusters);

    std::vector<std::uint8_t> y_train(train.size());
    std::vector<double> z_train(train.size());
    for (std::size_t t = 0; t < train.size(); ++t) {
      y_train[t] = train_label[train[t]];
      z_train[t] = train_amount[train[t]];
    }

    std::vector<SearchStats> per_query(test.size());
    parallel_for(test.size(), cfg.threads, [&](std::size_t q) {
      const NeighborSet nbrs = index.search(test_points.row(q), cfg.k, &per_query[q]);
      const ImputedOutcome o = impute_outcome(nbrs, y_train, z_train, cfg.buyers_only_mean);
      const std::size_t i = test[q];
      out.y[i] = o.y_hat ? 1 : 0;
      out.z[i] = o.z_hat;
      out.provenance[i] = o.y_hat ? Provenance::ImputedDropout : Provenance::ImputedVisitor;
      out.pooled[i] = report.pooled ? 1 : 0;
    });
    for (const SearchStats& s : per_query) report.search += s;
    result.search += report.search;
    result.strata.push_back(report);
  }
  return result;
}

inline ImputedDataset run_proposed(const Dataset& d, const PipelineConfig& cfg = {}) {
  return run_proposed_detailed(d, cfg).imputed;
}

/// One of the fixed-rule benchmark strategies (BM1..BM6).
inline ImputedDataset run_benchmark(const Dataset& d, ImputationMethod method) {
  if (method == ImputationMethod::Proposed) {
    fail(ErrorCode::InvalidArgument, "the proposed method is not a benchmark");
  }
  if (method == ImputationMethod::NoMissing) {
    fail(ErrorCode::TruthUnavailable, "NoMissing needs ground truth; use attach_ground_truth");
  }
  ImputedDataset out = detail::passthrough(d, method);

  // observed means per arm, and for the pooled treatment group
  std::map<std::uint32_t, std::pair<double, std::size_t>> by_arm;
  double t_sum = 0.0;
  std::size_t t_count = 0;
  for (const UserRecord& r : d.records()) {
    auto& slot = by_arm[r.arm.id];
    if (r.outcome.is_missing()) continue;
    slot.first += r.outcome.z();
    ++slot.second;
    if (!r.arm.is_control()) {
      t_sum += r.outcome.z();
      ++t_count;
    }
  }
  auto arm_mean = [&](std::uint32_t a) {
    const auto it = by_arm.find(a);
    if (it == by_arm.end() || it->second.second == 0) {
      fail(ErrorCode::EmptyArm, "arm " + std::to_string(a) + " has no observed outcome");
    }
    return it->second.first / static_cast<double>(it->second.second);
  };
  auto treatment_mean = [&] {
    if (t_count == 0) fail(ErrorCode::EmptyArm, "treatment group has no observed outcome");
    return t_sum / static_cast<double>(t_count);
  };

  if (d.missing_count() == 0) return out;
  for (std::size_t i : d.missing_indices()) {
    const std::uint32_t a = d[i].arm.id;
    double value = 0.0;
    switch (method) {
      case ImputationMethod::CompleteCase:
        out.z[i] = std::numeric_limits<double>::quiet_NaN();
        out.y[i] = 0;
        out.provenance[i] = Provenance::Dropped;
        continue;
      case ImputationMethod::ControlMean: value = arm_mean(0); break;
      case ImputationMethod::TreatmentMean: value = treatment_mean(); break;
      case ImputationMethod::Zero: value = 0.0; break;
      case ImputationMethod::BestCase: value = arm_mean(a); break;
      case ImputationMethod::WorstCase: value = a == 0 ? treatment_mean() : arm_mean(0); break;
      default: break;
    }
    out.z[i] = value;
    out.y[i] = value != 0.0 ? 1 : 0;
    out.provenance[i] = value != 0.0 ? Provenance::ImputedDropout : Provenance::ImputedVisitor;
  }
  return out;
}

/// Reference row built from the complete pre-masking response.
inline ImputedDataset attach_ground_truth(const Dataset& d, std::span<const double> truth) {
  if (truth.size() != d.size()) {
    fail(ErrorCode::TruthUnavailable, "ground truth must hold one amount per user");
  }
  ImputedDataset out = detail::passthrough(d, ImputationMethod::NoMissing);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i].outcome.is_observed()) {
      if (d[i].outcome.z() != truth[i]) {
        fail(ErrorCode::InvalidData, "ground truth disagrees with observed row " + std::to_string(i));
      }
      continue;
    }
    out.z[i] = truth[i];
    out.y[i] = truth[i] != 0.0 ? 1 : 0;
    out.provenance[i] = truth[i] != 0.0 ? Provenance::ImputedDropout : Provenance::ImputedVisitor;
  }
  return out;
}

/// Dispatches to the right strategy. `truth` is only consulted for NoMissing.
inline ImputedDataset run_method(const Dataset& d, ImputationMethod method, const PipelineConfig& cfg = {},
                                 std::optional<std::span<const double>> truth = std::nullopt) {
  switch (method) {
    case ImputationMethod::Proposed: return run_proposed(d, cfg);
    case ImputationMethod::NoMissing:
      if (!truth) fail(ErrorCode::TruthUnavailable, "NoMissing needs ground truth");
      return attach_ground_truth(d, *truth);
    default: return run_benchmark(d, method);
  }
}

}  // namespace dropimpute

#endif  // DROPIMPUTE_IMPUTERS_HPP
