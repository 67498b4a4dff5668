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

// Buyer screening. A logistic model of the pseudo-response (was a purchase
// recorded?) on the covariates scores every user; missing-outcome users that
// score below the threshold are declared visitors, the rest become
// dropout-buyer candidates for the neighbor imputation.

#ifndef DROPIMPUTE_CLASSIFIER_HPP
#define DROPIMPUTE_CLASSIFIER_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "dropimpute/core.hpp"
#include "dropimpute/error.hpp"
#include "dropimpute/matrix.hpp"

namespace dropimpute {

struct FitConfig {
  int max_iterations = 100;
  double tolerance = 1e-8;  // on max |delta beta|, standardized units
  double separation_bound = 30.0;
  int max_step_halvings = 30;
};

struct ClassifierModel {
  std::vector<double> beta;  // intercept first, then one slope per covariate
  double threshold = 0.5;
  bool converged = false;
  bool separated = false;
  int iterations = 0;
  double log_likelihood = 0.0;

  std::size_t dims() const { return beta.empty() ? 0 : beta.size() - 1; }
};

namespace detail {

inline double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

inline double softplus(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

/// Column standardization of the design; constant columns are dropped from
/// the optimization and get a zero slope.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<std::size_t> active;

  explicit Standardizer(const Matrix& x) : mean(x.cols(), 0.0), scale(x.cols(), 1.0) {
    const auto n = static_cast<double>(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) mean[j] += x(i, j);
    }
    for (double& m : mean) m /= n;
    std::vector<double> ss(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) {
        const double d = x(i, j) - mean[j];
        ss[j] += d * d;
      }
    }
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double sd = std::sqrt(ss[j] / n);
      if (sd > 0.0 && std::isfinite(sd)) {
        scale[j] = sd;
        active.push_back(j);
      }
    }
  }
};

}  // namespace detail

/// Maximum-likelihood logistic fit of y on [1, x] by iteratively reweighted
/// least squares with step-halving. Deterministic: all reductions run in row
/// order on one thread.
inline ClassifierModel fit(const Matrix& x, std::span<const std::uint8_t> y,
                           const FitConfig& cfg = {}) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (y.size() != n) fail(ErrorCode::DimensionMismatch, "label count differs from row count");
  if (n < p + 1) fail(ErrorCode::InvalidArgument, "need at least p+1 rows to fit");
  std::size_t positives = 0;
  for (std::uint8_t v : y) positives += v != 0;
  if (positives == 0 || positives == n) {
    fail(ErrorCode::SingleClass, "pseudo-response has a single class");
  }

  const detail::Standardizer st(x);
  const std::size_t q = st.active.size() + 1;

  // z-scored design, intercept column implicit
  Matrix design(n, q - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < st.active.size(); ++a) {
      const std::size_t j = st.active[a];
      design(i, a) = (x(i, j) - st.mean[j]) / st.scale[j];
    }
  }

  auto linear = [&](const Eigen::VectorXd& b, std::size_t i) {
    double eta = b[0];
    for (std::size_t a = 1; a < q; ++a) eta += b[a] * design(i, a - 1);
    return eta;
  };
  auto log_likelihood = [&](const Eigen::VectorXd& b) {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double eta = linear(b, i);
      ll += (y[i] ? eta : 0.0) - detail::softplus(eta);
    }
    return ll;
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q));
  const double rate = static_cast<double>(positives) / static_cast<double>(n);
  beta[0] = std::log(rate / (1.0 - rate));
  double ll = log_likelihood(beta);

  ClassifierModel model;
  Eigen::MatrixXd hessian(q, q);
  Eigen::VectorXd gradient(q);
  std::vector<double> row(q);
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    model.iterations = it;
    hessian.setZero();
    gradient.setZero();
    for (std::size_t i = 0; i < n; ++i) {
      row[0] = 1.0;
      for (std::size_t a = 1; a < q; ++a) row[a] = design(i, a - 1);
      const double prob = detail::sigmoid(linear(beta, i));
      const double w = prob * (1.0 - prob);
      const double r = (y[i] ? 1.0 : 0.0) - prob;
      for (std::size_t a = 0; a < q; ++a) {
        gradient[a] += row[a] * r;
        for (std::size_t b = 0; b <= a; ++b) hessian(a, b) += w * row[a] * row[b];
      }
    }
    for (std::size_t a = 0; a < q; ++a) {
      for (std::size_t b = 0; b < a; ++b) hessian(b, a) = hessian(a, b);
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    Eigen::VectorXd step = ldlt.solve(gradient);
    if (!step.allFinite()) break;

    Eigen::VectorXd candidate = beta + step;
    double candidate_ll = log_likelihood(candidate);
    for (int h = 0; h < cfg.max_step_halvings && !(candidate_ll >= ll); ++h) {
      step *= 0.5;
      candidate = beta + step;
      candidate_ll = log_likelihood(candidate);
    }
    if (!(candidate_ll >= ll)) {
      // no ascent direction left at working precision
      model.converged = true;
      break;
    }
    const double delta = step.cwiseAbs().maxCoeff();
    beta = candidate;
    ll = candidate_ll;
    if (q > 1 && beta.tail(q - 1).cwiseAbs().maxCoeff() > cfg.separation_bound) {
      model.separated = true;
      break;
    }
    if (delta < cfg.tolerance) {
      model.converged = true;
      break;
    }
  }

  // back to the original covariate scale
  model.beta.assign(p + 1, 0.0);
  model.beta[0] = beta[0];
  for (std::size_t a = 0; a < st.active.size(); ++a) {
    const std::size_t j = st.active[a];
    const double slope = beta[static_cast<Eigen::Index>(a + 1)] / st.scale[j];
    model.beta[j + 1] = slope;
    model.beta[0] -= slope * st.mean[j];
  }
  model.log_likelihood = ll;
  return model;
}

inline Matrix covariate_matrix(const Dataset& d) {
  Matrix x(d.size(), d.dims());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& xi = d[i].x;
    if (xi.size() != d.dims()) fail(ErrorCode::DimensionMismatch, "ragged covariates");
    std::copy(xi.begin(), xi.end(), x.row(i).begin());
  }
  return x;
}

inline ClassifierModel fit(const Dataset& d, const FitConfig& cfg = {}) {
  return fit(covariate_matrix(d), pseudo_response(d), cfg);
}

inline double linear_predictor(const ClassifierModel& model, std::span<const double> x) {
  if (x.size() != model.dims()) {
    fail(ErrorCode::DimensionMismatch, "covariate dimension does not match the model");
  }
  double eta = model.beta[0];
  for (std::size_t j = 0; j < x.size(); ++j) eta += model.beta[j + 1] * x[j];
  return eta;
}

inline double predict_proba(const ClassifierModel& model, std::span<const double> x) {
  return detail::sigmoid(linear_predictor(model, x));
}

/// Bernoulli log-likelihood of labels under the model, original scale.
inline double log_likelihood(const ClassifierModel& model, const Matrix& x,
                             std::span<const std::uint8_t> y) {
  double ll = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double eta = linear_predictor(model, x.row(i));
    ll += (y[i] ? eta : 0.0) - detail::softplus(eta);
  }
  return ll;
}

enum class UserClass : std::uint8_t { TrueNegative, FalsePositive, FalseNegative, TruePositive };

struct ScreeningResult {
  std::vector<UserClass> classes;
  std::vector<double> probabilities;
  std::vector<std::size_t> estimated_visitors;  // TN: missing, scored below threshold
  std::vector<std::size_t> candidates;          // FP: missing, scored at or above threshold

  std::size_t count(UserClass c) const {
    return static_cast<std::size_t>(std::count(classes.begin(), classes.end(), c));
  }
};

inline UserClass classify(bool recorded, double probability, double threshold) {
  const bool predicted = probability >= threshold;
  if (recorded) return predicted ? UserClass::TruePositive : UserClass::FalseNegative;
  return predicted ? UserClass::FalsePositive : UserClass::TrueNegative;
}

inline std::vector<double> predict_all(const Dataset& d, const ClassifierModel& model) {
  std::vector<double> probs(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) probs[i] = predict_proba(model, d[i].x);
  return probs;
}

inline ScreeningResult screen(const Dataset& d, const ClassifierModel& model,
                              std::vector<double> probabilities) {
  if (probabilities.size() != d.size()) {
    fail(ErrorCode::DimensionMismatch, "one probability per user required");
  }
  ScreeningResult out;
  out.probabilities = std::move(probabilities);
  out.classes.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const UserClass c = classify(d[i].outcome.is_observed(), out.probabilities[i], model.threshold);
    out.classes[i] = c;
    if (c == UserClass::TrueNegative) out.estimated_visitors.push_back(i);
    if (c == UserClass::FalsePositive) out.candidates.push_back(i);
  }
  return out;
}

inline ScreeningResult screen(const Dataset& d, const ClassifierModel& model) {
  return screen(d, model, predict_all(d, model));
}

struct ThresholdMode {
  enum class Kind { Fixed, TnFraction };
  Kind kind = Kind::Fixed;
  double value = 0.5;

  static ThresholdMode fixed(double tau) { return {Kind::Fixed, tau}; }
  /// Target share of *all* users that end up as estimated visitors.
  static ThresholdMode tn_fraction(double q) { return {Kind::TnFraction, q}; }
};

/// Threshold from precomputed probabilities (one per user).
inline double choose_threshold(const Dataset& d, std::span<const double> probabilities,
                               ThresholdMode mode) {
  if (mode.kind == ThresholdMode::Kind::Fixed) {
    if (!(mode.value > 0.0 && mode.value < 1.0)) {
      fail(ErrorCode::InvalidArgument, "threshold must lie in (0, 1)");
    }
    return mode.value;
  }
  if (!(mode.value >= 0.0 && mode.value <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "TN fraction must lie in [0, 1]");
  }
  std::vector<double> unrecorded;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i].outcome.is_missing()) unrecorded.push_back(probabilities[i]);
  }
  const auto needed = static_cast<std::size_t>(
      std::ceil(mode.value * static_cast<double>(d.size()) - 1e-9));
  if (needed > unrecorded.size()) {
    fail(ErrorCode::Unachievable, "TN fraction exceeds the share of unrecorded users");
  }
  if (needed == 0) return std::numeric_limits<double>::denorm_min();
  std::sort(unrecorded.begin(), unrecorded.end());
  // TN means p < tau, so the smallest tau covering `needed` users sits just
  // above the needed-th smallest probability.
  const double tau = std::nextafter(unrecorded[needed - 1], 2.0);
  if (!(tau < 1.0)) fail(ErrorCode::Unachievable, "required threshold is not below 1");
  return tau;
}

inline double choose_threshold(const Dataset& d, const ClassifierModel& model, ThresholdMode mode) {
  if (mode.kind == ThresholdMode::Kind::Fixed) return choose_threshold(d, std::span<const double>{}, mode);
  const std::vector<double> probs = predict_all(d, model);
  return choose_threshold(d, probs, mode);
}

}  // namespace dropimpute

#endif  // DROPIMPUTE_CLASSIFIER_HPP
