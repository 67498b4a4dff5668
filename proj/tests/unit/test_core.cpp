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

#include <numeric>

#include "dropimpute/core.hpp"
#include "dropimpute/simgen.hpp"
#include "support/fixtures.hpp"

using namespace dropimpute;
using fixture::user;

TEST(Validate, NegativeAmountIsReported) {
  Dataset d({user(0, {1.0}, -1.0)});
  const auto r = validate(d);
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(r.has(ViolationKind::NegativeAmount));
  EXPECT_EQ(to_string(ViolationKind::NegativeAmount), "negative amount");
  // the row is reported alongside the kind
  bool found = false;
  for (const auto& v : r.violations) {
    if (v.kind == ViolationKind::NegativeAmount) {
      ASSERT_TRUE(v.row.has_value());
      EXPECT_EQ(*v.row, 0u);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(Validate, NegativeAmountAllowedOnRequest) {
  Dataset d({user(0, {1.0}, -1.0), user(1, {2.0}, 3.0)});
  EXPECT_TRUE(validate(d, {.allow_negative_amounts = true}).ok());
}

TEST(Validate, AllObservedPositiveIsOk) {
  Dataset d({user(0, {1.0}, 2.0), user(1, {0.5}, 3.5), user(1, {0.1}, 0.25)});
  EXPECT_TRUE(validate(d).ok());
  EXPECT_EQ(d.missing_count(), 0u);
}

TEST(Validate, SimulatedDatasetPasses) {
  SimConfig cfg;
  cfg.n = 5000;
  cfg.seed = 11;
  cfg.negatives = NegativeAmounts::Redraw;
  EXPECT_TRUE(validate(generate(cfg).dataset).ok());
  cfg.negatives = NegativeAmounts::Keep;
  EXPECT_TRUE(validate(generate(cfg).dataset, {.allow_negative_amounts = true}).ok());
}

TEST(Validate, StructuralViolations) {
  EXPECT_TRUE(validate(Dataset{}).has(ViolationKind::EmptyDataset));
  Dataset ragged({user(0, {1.0, 2.0}, 1.0), user(1, {1.0}, std::nullopt)});
  EXPECT_TRUE(validate(ragged).has(ViolationKind::RaggedCovariates));
  Dataset one_arm({user(0, {1.0}, 1.0), user(0, {2.0}, std::nullopt)});
  EXPECT_TRUE(validate(one_arm).has(ViolationKind::TooFewArms));
  Dataset zero({user(0, {1.0}, 0.0), user(1, {2.0}, 1.0)});
  EXPECT_TRUE(validate(zero).has(ViolationKind::ZeroObservedAmount));
  Dataset nan_x({user(0, {std::nan("")}, 1.0), user(1, {2.0}, 1.0)});
  EXPECT_TRUE(validate(nan_x).has(ViolationKind::NonFiniteCovariate));
  Dataset no_x({user(0, {}, 1.0), user(1, {}, 1.0)});
  EXPECT_TRUE(validate(no_x).has(ViolationKind::NoCovariates));
}

TEST(PseudoResponse, AllMissingIsZero) {
  Dataset d({user(0, {1.0}, std::nullopt), user(1, {2.0}, std::nullopt)});
  EXPECT_EQ(pseudo_response(d), (std::vector<std::uint8_t>{0, 0}));
}

TEST(PseudoResponse, MixedPattern) {
  Dataset d({user(0, {1.0}, 4.0), user(1, {2.0}, std::nullopt), user(1, {3.0}, 1.5)});
  EXPECT_EQ(pseudo_response(d), (std::vector<std::uint8_t>{1, 0, 1}));
}

TEST(PseudoResponse, MatchesGeneratorBookkeeping) {
  SimConfig cfg;
  cfg.seed = 5;
  const Simulation s = generate(cfg);
  const auto y = pseudo_response(s.dataset);
  std::size_t recorded = 0;
  for (std::size_t i = 0; i < s.truth.z.size(); ++i) recorded += s.truth.z[i] != 0.0 && !s.truth.mask[i];
  EXPECT_EQ(std::accumulate(y.begin(), y.end(), std::size_t{0}), recorded);
}

TEST(Dataset, CountsAndIndexSets) {
  Dataset d({user(1, {1.0}, std::nullopt), user(0, {2.0}, 2.0), user(2, {3.0}, std::nullopt, 3)});
  EXPECT_EQ(d.size(), d.observed_count() + d.missing_count());
  ASSERT_EQ(d.missing_count(), 2u);
  EXPECT_EQ(d.missing_indices()[0], 0u);
  EXPECT_EQ(d.missing_indices()[1], 2u);
  ASSERT_EQ(d.arms().size(), 3u);
  EXPECT_EQ(d.arms()[0], kControl);
  EXPECT_EQ(d.segment_count(), 4u);
  EXPECT_EQ(d.covariate_names(), (std::vector<std::string>{"x_1"}));
  const auto y = pseudo_response(d);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(y[i] == 1, d[i].outcome.is_observed());
}

TEST(Dataset, SegmentNames) {
  Dataset d({user(0, {1.0}, 1.0, 1)}, {}, {"idle", "frequent"});
  EXPECT_EQ(d.segment(0).name, "frequent");
  EXPECT_EQ(d.segment_name(7), "7");
}
