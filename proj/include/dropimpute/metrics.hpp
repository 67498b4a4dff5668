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

#ifndef DROPIMPUTE_METRICS_HPP
#define DROPIMPUTE_METRICS_HPP

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <cstddef>
#include <span>

#include "dropimpute/error.hpp"

namespace dropimpute {

struct ArmStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, n - 1 divisor
  std::size_t zeros = 0;
};

inline ArmStats arm_stats(std::span<const double> z) {
  if (z.empty()) fail(ErrorCode::InsufficientSamples, "arm has no values");
  ArmStats s;
  s.n = z.size();
  double sum = 0.0;
  for (double v : z) {
    sum += v;
    s.zeros += v == 0.0;
  }
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : z) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

/// Relative difference of arm means, in percent.
inline double lift(const ArmStats& control, const ArmStats& treatment) {
  if (control.mean == 0.0) fail(ErrorCode::ZeroControlMean, "lift undefined for a zero control mean");
  return (treatment.mean - control.mean) / control.mean * 100.0;
}

/// Pooled-variance standard error of the difference in means.
inline double pooled_se(const ArmStats& control, const ArmStats& treatment) {
  if (control.n + treatment.n < 3 || control.n == 0 || treatment.n == 0) {
    fail(ErrorCode::InsufficientSamples, "pooled SE needs at least three values across both arms");
  }
  const double nc = static_cast<double>(control.n);
  const double nt = static_cast<double>(treatment.n);
  const double pooled =
      ((nt - 1.0) * treatment.sd * treatment.sd + (nc - 1.0) * control.sd * control.sd) / (nt + nc - 2.0);
  return std::sqrt(pooled * (1.0 / nc + 1.0 / nt));
}

/// Coefficient of variation of the control arm.
inline double cv(const ArmStats& control) {
  if (control.mean == 0.0) fail(ErrorCode::ZeroControlMean, "CV undefined for a zero control mean");
  return control.sd / control.mean;
}

/// Share of exact zeros.
inline double zero_rate(std::span<const double> z) {
  if (z.empty()) return 0.0;
  std::size_t zeros = 0;
  for (double v : z) zeros += v == 0.0;
  return static_cast<double>(zeros) / static_cast<double>(z.size());
}

/// Two-sided tail probability of Student's t with df degrees of freedom,
/// P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2).
inline double student_t_two_sided(double t, double df) {
  if (!(df > 0.0)) fail(ErrorCode::InvalidArgument, "degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return boost::math::ibeta(df / 2.0, 0.5, x);
}

/// Two-sided pooled-variance two-sample t-test.
inline double p_value(const ArmStats& control, const ArmStats& treatment) {
  if (control.n < 2 || treatment.n < 2) {
    fail(ErrorCode::InsufficientSamples, "t-test needs two values per arm");
  }
  const double diff = treatment.mean - control.mean;
  const double se = pooled_se(control, treatment);
  if (se == 0.0) return diff == 0.0 ? 1.0 : 0.0;
  const double df = static_cast<double>(control.n + treatment.n - 2);
  return student_t_two_sided(diff / se, df);
}

inline double p_value(std::span<const double> control, std::span<const double> treatment) {
  if (control.size() < 2 || treatment.size() < 2) {
    fail(ErrorCode::InsufficientSamples, "t-test needs two values per arm");
  }
  return p_value(arm_stats(control), arm_stats(treatment));
}

}  // namespace dropimpute

#endif  // DROPIMPUTE_METRICS_HPP
