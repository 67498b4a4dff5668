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

// Synthetic experiments with known ground truth.
//
// Per user: arm w ~ Bernoulli(arm_split); covariates x1 ~ N(0.1, 1),
// x2 ~ N(0.2, 1.5^2), x3 ~ N(0.2, 0.2^2); purchase y ~ Bernoulli(p) with
// logit p = -1 + 5.8 x3; amount z = 1.5 + 1.1 w + 1.1 x1 + 0.2 x2 + e,
// e ~ N(0, 0.5^2), for buyers and z = 0 for visitors. A scenario-specific
// mask then hides some buyers' amounts, and every zero amount is hidden too.

#ifndef DROPIMPUTE_SIMGEN_HPP
#define DROPIMPUTE_SIMGEN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dropimpute/core.hpp"
#include "dropimpute/error.hpp"
#include "dropimpute/matrix.hpp"
#include "dropimpute/rng.hpp"

namespace dropimpute {

enum class Scenario { S1, S2, S3 };  // MCAR, MAR on a latent Gaussian, MNAR top quantile

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::S1: return "S1";
    case Scenario::S2: return "S2";
    case Scenario::S3: return "S3";
  }
  return "?";
}

inline Scenario parse_scenario(std::string_view s) {
  if (s == "S1" || s == "s1") return Scenario::S1;
  if (s == "S2" || s == "s2") return Scenario::S2;
  if (s == "S3" || s == "s3") return Scenario::S3;
  fail(ErrorCode::InvalidArgument, "unknown scenario '" + std::string(s) + "'");
}

/// What to do with buyer amounts drawn below zero.
enum class NegativeAmounts { Keep, Redraw };

/// Hidden share of buyers that puts the complete-case control arm at about
/// 954 of 2504 users: 1 - 953.8 / (2504.1 * P(y = 1)), P(y = 1) = 0.53144.
inline constexpr double kCalibratedMissingRate = 0.283;

struct SimConfig {
  std::size_t n = 5000;
  std::uint64_t seed = 1;
  Scenario scenario = Scenario::S1;
  double mcar_rate = kCalibratedMissingRate;      // S1 rate; S2 target rate
  double mar_slope = 1.0;                         // S2 coefficient on the latent variable
  double mnar_quantile = kCalibratedMissingRate;  // S3 top share hidden per arm
  double arm_split = 0.5;
  NegativeAmounts negatives = NegativeAmounts::Keep;
  std::size_t segments = 1;

  void check() const {
    auto prob = [](double p, const char* what) {
      if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::InvalidArgument, std::string(what) + " must lie in [0, 1]");
    };
    prob(mcar_rate, "mcar_rate");
    prob(mnar_quantile, "mnar_quantile");
    prob(arm_split, "arm_split");
    if (n == 0) fail(ErrorCode::InvalidArgument, "n must be positive");
    if (segments == 0) fail(ErrorCode::InvalidArgument, "segments must be positive");
  }
};

struct SimTruth {
  std::vector<double> z;          // complete response before masking
  std::vector<std::uint8_t> y;    // true purchase indicator
  std::vector<std::uint8_t> mask; // 1 = outcome hidden
  Matrix x;                       // x1, x2, x3
  std::vector<std::uint8_t> w;    // arm
  std::vector<std::uint32_t> segment;
};

struct Simulation {
  Dataset dataset;
  SimTruth truth;
};

namespace detail {

inline double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// E[logistic(g0 + slope * U)], U ~ N(0, 1), by composite Simpson.
inline double expected_logistic(double g0, double slope) {
  constexpr int kIntervals = 4000;
  constexpr double kLo = -12.0, kHi = 12.0;
  const double h = (kHi - kLo) / kIntervals;
  double sum = 0.0;
  for (int i = 0; i <= kIntervals; ++i) {
    const double u = kLo + h * i;
    const double f = logistic(g0 + slope * u) * std::exp(-0.5 * u * u);
    sum += f * (i == 0 || i == kIntervals ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  return sum * h / 3.0 / std::sqrt(2.0 * M_PI);
}

}  // namespace detail

/// Intercept g0 with E[logistic(g0 + slope * U)] = rate, by bisection.
inline double calibrate_mar_intercept(double rate, double slope) {
  double lo = -60.0, hi = 60.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (detail::expected_logistic(mid, slope) < rate ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Hidden-outcome mask for a scenario. Zero amounts are always hidden.
inline std::vector<std::uint8_t> apply_missingness(const SimTruth& truth, const SimConfig& cfg) {
  const std::size_t n = truth.z.size();
  std::vector<std::uint8_t> mask(n, 0);
  Rng rng(split_seed(cfg.seed, 1));
  switch (cfg.scenario) {
    case Scenario::S1:
      for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform();
        if (truth.z[i] != 0.0 && u < cfg.mcar_rate) mask[i] = 1;
      }
      break;
    case Scenario::S2: {
      if (cfg.mcar_rate <= 0.0 || cfg.mcar_rate >= 1.0) {
        for (std::size_t i = 0; i < n; ++i) mask[i] = truth.z[i] != 0.0 && cfg.mcar_rate >= 1.0;
        break;
      }
      const double g0 = calibrate_mar_intercept(cfg.mcar_rate, cfg.mar_slope);
      for (std::size_t i = 0; i < n; ++i) {
        const double latent = rng.normal();
        const double u = rng.uniform();
        if (truth.z[i] != 0.0 && u < detail::logistic(g0 + cfg.mar_slope * latent)) mask[i] = 1;
      }
      break;
    }
    case Scenario::S3:
      for (std::uint8_t arm : {std::uint8_t{0}, std::uint8_t{1}}) {
        std::vector<double> values;
        for (std::size_t i = 0; i < n; ++i) {
          if (truth.w[i] == arm && truth.z[i] != 0.0) values.push_back(truth.z[i]);
        }
        const auto hide = static_cast<std::size_t>(
            std::llround(cfg.mnar_quantile * static_cast<double>(values.size())));
        if (hide == 0) continue;
        std::sort(values.begin(), values.end());
        const double threshold = values[values.size() - hide];
        for (std::size_t i = 0; i < n; ++i) {
          if (truth.w[i] == arm && truth.z[i] != 0.0 && truth.z[i] >= threshold) mask[i] = 1;
        }
      }
      break;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (truth.z[i] == 0.0) mask[i] = 1;
  }
  return mask;
}

/// Reassembles the observable dataset from truth and mask.
inline Dataset observe(const SimTruth& truth, std::size_t segments = 1) {
  std::vector<UserRecord> records(truth.z.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    UserRecord& r = records[i];
    r.user_id = "u" + std::to_string(i + 1);
    r.arm = TreatmentArm{truth.w[i]};
    r.segment = truth.segment.empty() ? 0 : truth.segment[i];
    r.x.assign(truth.x.row(i).begin(), truth.x.row(i).end());
    r.outcome = truth.mask[i] ? Outcome::missing() : Outcome::observed(truth.z[i]);
  }
  std::vector<std::string> segment_names;
  for (std::size_t u = 0; u < segments; ++u) segment_names.push_back("seg" + std::to_string(u));
  return Dataset(std::move(records), {"x_1", "x_2", "x_3"}, std::move(segment_names));
}

inline Simulation generate(const SimConfig& cfg) {
  cfg.check();
  const std::size_t n = cfg.n;
  SimTruth t;
  t.z.resize(n);
  t.y.resize(n);
  t.w.resize(n);
  t.segment.assign(n, 0);
  t.x = Matrix(n, 3);

  Rng segment_rng(split_seed(cfg.seed, 2));
  Rng rng(split_seed(cfg.seed, 0));
  for (std::size_t i = 0; i < n; ++i) {
    // Segments shift purchase propensity and basket size; one segment leaves
    // the base model untouched.
    double seg_shift = 0.0;
    if (cfg.segments > 1) {
      t.segment[i] = static_cast<std::uint32_t>(segment_rng.below(cfg.segments));
      seg_shift = static_cast<double>(t.segment[i]) / static_cast<double>(cfg.segments - 1) - 0.5;
    }
    const bool w = rng.bernoulli(cfg.arm_split);
    const double x1 = rng.normal(0.1, 1.0);
    const double x2 = rng.normal(0.2, 1.5);
    const double x3 = rng.normal(0.2, 0.2);
    const bool y = rng.bernoulli(detail::logistic(-1.0 + 5.8 * x3 + 0.8 * seg_shift));
    const double mean = 1.5 + 1.1 * w + 1.1 * x1 + 0.2 * x2 + 0.5 * seg_shift;
    double z = mean + rng.normal(0.0, 0.5);
    if (cfg.negatives == NegativeAmounts::Redraw) {
      while (z <= 0.0) z = mean + rng.normal(0.0, 0.5);
    }
    t.w[i] = w;
    t.x(i, 0) = x1;
    t.x(i, 1) = x2;
    t.x(i, 2) = x3;
    t.y[i] = y;
    t.z[i] = y ? z : 0.0;
  }
  t.mask = apply_missingness(t, cfg);
  Dataset d = observe(t, cfg.segments);
  return Simulation{std::move(d), std::move(t)};
}

}  // namespace dropimpute

#endif  // DROPIMPUTE_SIMGEN_HPP
