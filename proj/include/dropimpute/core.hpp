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

// Experiment data model: users, their arm and segment, covariates, and an
// outcome that is either a recorded purchase amount or missing. A missing
// outcome hides either a visitor (true amount zero) or a dropout buyer
// (purchase happened but was never recorded).

#ifndef DROPIMPUTE_CORE_HPP
#define DROPIMPUTE_CORE_HPP

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dropimpute/error.hpp"

namespace dropimpute {

/// Experiment arm; id 0 is control, 1..T-1 are treatments.
struct TreatmentArm {
  std::uint32_t id = 0;

  constexpr bool is_control() const { return id == 0; }
  friend constexpr auto operator<=>(TreatmentArm, TreatmentArm) = default;
};

inline constexpr TreatmentArm kControl{0};

/// Pre-experiment buyer segment; ids are contiguous 0..U-1.
struct BuyerSegment {
  std::uint32_t id = 0;
  std::string name;

  friend bool operator==(const BuyerSegment& a, const BuyerSegment& b) {
    return a.id == b.id;
  }
};

/// Recorded purchase amount, or nothing. An observed outcome always means a
/// purchase (y = 1); a zero amount is never a legal observation.
class Outcome {
 public:
  Outcome() = default;

  static Outcome observed(double amount) { return Outcome(amount); }
  static Outcome missing() { return Outcome(); }

  bool is_observed() const { return amount_.has_value(); }
  bool is_missing() const { return !amount_.has_value(); }

  /// Purchase amount; only valid when observed.
  double z() const { return *amount_; }
  /// Purchase indicator; only valid when observed.
  int y() const { return 1; }

  const std::optional<double>& amount() const { return amount_; }

 private:
  explicit Outcome(double amount) : amount_(amount) {}

  std::optional<double> amount_;
};

struct UserRecord {
  std::string user_id;
  TreatmentArm arm;
  std::uint32_t segment = 0;
  std::vector<double> x;
  Outcome outcome;
};

/// Immutable, ordered collection of users. Indices always refer to the
/// original row order; nothing downstream reorders records.
class Dataset {
 public:
  Dataset() = default;

  explicit Dataset(std::vector<UserRecord> records,
                   std::vector<std::string> covariate_names = {},
                   std::vector<std::string> segment_names = {})
      : records_(std::move(records)),
        covariate_names_(std::move(covariate_names)),
        segment_names_(std::move(segment_names)) {
    std::set<std::uint32_t> arms;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const UserRecord& r = records_[i];
      arms.insert(r.arm.id);
      segment_count_ = std::max<std::size_t>(segment_count_, r.segment + 1);
      if (r.outcome.is_missing()) {
        missing_.push_back(i);
      } else {
        ++observed_;
      }
    }
    for (std::uint32_t a : arms) arms_.push_back(TreatmentArm{a});
    if (covariate_names_.empty()) {
      for (std::size_t j = 0; j < dims(); ++j) {
        covariate_names_.push_back("x_" + std::to_string(j + 1));
      }
    }
  }

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  /// Covariate dimension, taken from the first record.
  std::size_t dims() const { return records_.empty() ? 0 : records_.front().x.size(); }
  std::size_t observed_count() const { return observed_; }
  std::size_t missing_count() const { return missing_.size(); }

  const UserRecord& operator[](std::size_t i) const { return records_[i]; }
  std::span<const UserRecord> records() const { return records_; }

  /// Index set of missing outcomes, ascending.
  std::span<const std::size_t> missing_indices() const { return missing_; }

  /// Distinct arms present, ascending.
  std::span<const TreatmentArm> arms() const { return arms_; }
  std::size_t segment_count() const { return segment_count_; }

  const std::vector<std::string>& covariate_names() const { return covariate_names_; }

  BuyerSegment segment(std::size_t i) const {
    const std::uint32_t id = records_[i].segment;
    return BuyerSegment{id, segment_name(id)};
  }

  std::string segment_name(std::uint32_t id) const {
    if (id < segment_names_.size() && !segment_names_[id].empty()) {
      return segment_names_[id];
    }
    return std::to_string(id);
  }

  const std::vector<std::string>& segment_names() const { return segment_names_; }

 private:
  std::vector<UserRecord> records_;
  std::vector<std::string> covariate_names_;
  std::vector<std::string> segment_names_;
  std::vector<std::size_t> missing_;
  std::vector<TreatmentArm> arms_;
  std::size_t observed_ = 0;
  std::size_t segment_count_ = 0;
};

enum class ViolationKind {
  EmptyDataset,
  NegativeAmount,
  ZeroObservedAmount,
  NonFiniteAmount,
  RaggedCovariates,
  NoCovariates,
  NonFiniteCovariate,
  TooFewArms,
};

constexpr std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::EmptyDataset: return "empty dataset";
    case ViolationKind::NegativeAmount: return "negative amount";
    case ViolationKind::ZeroObservedAmount: return "observed zero amount";
    case ViolationKind::NonFiniteAmount: return "non-finite amount";
    case ViolationKind::RaggedCovariates: return "ragged covariates";
    case ViolationKind::NoCovariates: return "no covariates";
    case ViolationKind::NonFiniteCovariate: return "non-finite covariate";
    case ViolationKind::TooFewArms: return "fewer than two arms";
  }
  return "unknown";
}

struct Violation {
  ViolationKind kind;
  std::optional<std::size_t> row;  // dataset-level violations carry no row

  std::string message() const {
    std::string out(to_string(kind));
    if (row) out += " at row " + std::to_string(*row);
    return out;
  }
};

struct ValidationResult {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }

  bool has(ViolationKind kind) const {
    return std::any_of(violations.begin(), violations.end(),
                       [kind](const Violation& v) { return v.kind == kind; });
  }
};

struct ValidationOptions {
  // The simulation model draws Gaussian amounts without truncation, so
  // replication datasets legitimately contain a few negative purchases.
  bool allow_negative_amounts = false;
};

inline ValidationResult validate(const Dataset& d, const ValidationOptions& options = {}) {
  ValidationResult result;
  if (d.empty()) {
    result.violations.push_back({ViolationKind::EmptyDataset, std::nullopt});
    return result;
  }
  const std::size_t p = d.dims();
  if (p == 0) result.violations.push_back({ViolationKind::NoCovariates, std::nullopt});
  for (std::size_t i = 0; i < d.size(); ++i) {
    const UserRecord& r = d[i];
    if (r.x.size() != p) {
      result.violations.push_back({ViolationKind::RaggedCovariates, i});
    } else if (!std::all_of(r.x.begin(), r.x.end(), [](double v) { return std::isfinite(v); })) {
      result.violations.push_back({ViolationKind::NonFiniteCovariate, i});
    }
    if (r.outcome.is_observed()) {
      const double z = r.outcome.z();
      if (!std::isfinite(z)) {
        result.violations.push_back({ViolationKind::NonFiniteAmount, i});
      } else if (z == 0.0) {
        result.violations.push_back({ViolationKind::ZeroObservedAmount, i});
      } else if (z < 0.0 && !options.allow_negative_amounts) {
        result.violations.push_back({ViolationKind::NegativeAmount, i});
      }
    }
  }
  if (d.arms().size() < 2) result.violations.push_back({ViolationKind::TooFewArms, std::nullopt});
  return result;
}

/// Pseudo-response: 1 where a purchase was recorded, 0 where the outcome is
/// missing.
inline std::vector<std::uint8_t> pseudo_response(const Dataset& d) {
  std::vector<std::uint8_t> y(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) y[i] = d[i].outcome.is_observed() ? 1 : 0;
  return y;
}

}  // namespace dropimpute

#endif  // DROPIMPUTE_CORE_HPP
