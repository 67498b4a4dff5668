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

#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <random>

#include "dropimpute/metrics.hpp"
#include "support/oracles.hpp"

using namespace dropimpute;

namespace {

std::vector<double> v(std::initializer_list<double> l) { return l; }

}  // namespace

TEST(Lift, Examples) {
  const ArmStats a = arm_stats(v({2, 2})), b = arm_stats(v({3, 3}));
  EXPECT_DOUBLE_EQ(lift(a, a), 0.0);
  EXPECT_DOUBLE_EQ(lift(a, b), 50.0);
  try {
    lift(arm_stats(v({0, 0})), b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroControlMean);
  }
}

TEST(PooledSe, Examples) {
  const ArmStats c = arm_stats(v({1, 3, 5, 7})), t = arm_stats(v({2, 4, 6, 8}));
  EXPECT_NEAR(pooled_se(c, t), c.sd * std::sqrt(2.0 / 4.0), 1e-14);
  const double hand = std::sqrt((1.0 * 2.0 + 2.0 * 1.0) / 3.0 * (1.0 / 3.0 + 1.0 / 2.0));
  EXPECT_NEAR(pooled_se(arm_stats(v({1, 2, 3})), arm_stats(v({2, 4}))), hand, 1e-15);
  EXPECT_EQ(pooled_se(arm_stats(v({2, 2})), arm_stats(v({2, 2}))), 0.0);
  EXPECT_THROW(pooled_se(arm_stats(v({1})), arm_stats(v({1}))), Error);
}

TEST(Cv, Examples) {
  EXPECT_EQ(cv(arm_stats(v({4, 4, 4}))), 0.0);
  ArmStats s;
  s.mean = 0.9;
  s.sd = 1.2;
  EXPECT_NEAR(cv(s), 1.3333, 1e-4);
  const std::vector<double> z{0, 0, 1.5, 2.5, 3.0, 0, 4.0};
  const double delta = 0.7;
  std::vector<double> shifted = z;
  for (double& x : shifted) x += delta;
  const ArmStats a = arm_stats(z);
  EXPECT_NEAR(cv(arm_stats(shifted)), cv(a) * a.mean / (a.mean + delta), 1e-12);
}

TEST(ZeroRate, Examples) {
  EXPECT_DOUBLE_EQ(zero_rate(v({0, 0, 0, 1, 2})), 0.6);
  EXPECT_DOUBLE_EQ(zero_rate(v({1, 2})), 0.0);
}

TEST(PValue, Examples) {
  EXPECT_DOUBLE_EQ(p_value(v({1, 2, 3, 4}), v({1, 2, 3, 4})), 1.0);
  EXPECT_LT(p_value(v({1, 2, 3, 4}), v({101, 102.0000001, 103, 104})), 1e-6);
  const double p = p_value(v({1, 2, 3}), v({2, 4}));
  const double t = (3.0 - 2.0) / pooled_se(arm_stats(v({1, 2, 3})), arm_stats(v({2, 4})));
  EXPECT_NEAR(p, oracle::t_two_sided_by_quadrature(t, 3.0), 1e-6);
  EXPECT_THROW(p_value(v({1}), v({2, 3})), Error);
}

TEST(PValue, MatchesIntegratedDensity) {
  for (double df : {1.0, 2.0, 3.0, 7.5, 30.0, 500.0, 4998.0}) {
    for (double t : {0.0, 0.1, 0.5, 1.0, 1.96, 3.0, 6.0, -2.5}) {
      EXPECT_NEAR(student_t_two_sided(t, df), oracle::t_two_sided_by_quadrature(t, df), 1e-6) << df << " " << t;
    }
  }
}

TEST(Metrics, ScaleInvariance) {
  const std::vector<double> c{0, 0, 1.5, 2.5, 3.0, 0, 4.0}, t{0, 2, 3, 0, 5, 6};
  std::vector<double> c2 = c, t2 = t;
  const double lambda = 3.5;
  for (double& x : c2) x *= lambda;
  for (double& x : t2) x *= lambda;
  const ArmStats a = arm_stats(c), b = arm_stats(t), a2 = arm_stats(c2), b2 = arm_stats(t2);
  EXPECT_NEAR(lift(a, b), lift(a2, b2), 1e-10);
  EXPECT_NEAR(cv(a), cv(a2), 1e-12);
  EXPECT_NEAR(pooled_se(a2, b2), lambda * pooled_se(a, b), 1e-12);
  EXPECT_NEAR(a2.mean, lambda * a.mean, 1e-12);
  EXPECT_EQ(zero_rate(c), zero_rate(c2));
}

TEST(Metrics, AgreeWithNaiveRecomputation) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0, 5);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> c(2 + gen() % 300), t(2 + gen() % 300);
    for (double& x : c) x = gen() % 2 ? 0.0 : u(gen);
    for (double& x : t) x = gen() % 2 ? 0.0 : u(gen) + 0.3;
    c[0] = 1.0;
    const auto nc = oracle::naive_stats(c), nt = oracle::naive_stats(t);
    const ArmStats a = arm_stats(c), b = arm_stats(t);
    EXPECT_NEAR(a.mean, nc.mean, 1e-12);
    EXPECT_NEAR(a.sd, nc.sd, 1e-10);
    EXPECT_EQ(a.zeros, nc.zeros);
    const double naive_lift = (nt.mean - nc.mean) / nc.mean * 100.0;
    EXPECT_NEAR(lift(a, b), naive_lift, 1e-10 * std::max(1.0, std::abs(naive_lift)));
    const double n1 = static_cast<double>(nc.n), n2 = static_cast<double>(nt.n);
    const double se = std::sqrt(((n2 - 1) * nt.sd * nt.sd + (n1 - 1) * nc.sd * nc.sd) / (n1 + n2 - 2) *
                                (1 / n1 + 1 / n2));
    EXPECT_NEAR(pooled_se(a, b), se, 1e-10);
    EXPECT_NEAR(cv(a), nc.sd / nc.mean, 1e-10);
    EXPECT_NEAR(zero_rate(c), static_cast<double>(nc.zeros) / n1, 1e-15);
    const boost::math::students_t_distribution<double> dist(n1 + n2 - 2);
    const double tstat = (nt.mean - nc.mean) / se;
    const double p_ref = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(tstat)));
    EXPECT_NEAR(p_value(a, b), p_ref, 1e-10);
  }
}
