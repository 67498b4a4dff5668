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

#include <sstream>

#include "dropimpute/config.hpp"
#include "dropimpute/io.hpp"
#include "dropimpute/report.hpp"
#include "dropimpute/simgen.hpp"

using namespace dropimpute;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::Io;
}

}  // namespace

TEST(Csv, DoublesRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 123456789.125, 0.0}) {
    EXPECT_EQ(*parse_double(format_double(v)), v);
  }
  EXPECT_FALSE(parse_double("abc").has_value());
  EXPECT_FALSE(parse_double("1.5x").has_value());
}

TEST(Csv, QuotedFields) {
  std::istringstream in("a,b\n\"x,1\",\"say \"\"hi\"\"\"\n");
  const CsvTable t = read_csv(in);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], "x,1");
  EXPECT_EQ(t.rows[0][1], "say \"hi\"");
  EXPECT_EQ(csv_escape("x,1"), "\"x,1\"");
}

TEST(Csv, DatasetRoundTrip) {
  SimConfig cfg;
  cfg.n = 500;
  cfg.segments = 3;
  const Simulation s = generate(cfg);
  std::stringstream ss;
  write_dataset(ss, s.dataset);
  const Dataset back = read_dataset(ss);
  ASSERT_EQ(back.size(), s.dataset.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].user_id, s.dataset[i].user_id);
    EXPECT_EQ(back[i].arm, s.dataset[i].arm);
    EXPECT_EQ(back[i].segment, s.dataset[i].segment);
    EXPECT_EQ(back[i].x, s.dataset[i].x);
    EXPECT_EQ(back[i].outcome.amount(), s.dataset[i].outcome.amount());
  }
  std::stringstream again;
  write_dataset(again, back);
  EXPECT_EQ(again.str(), [&] {
    std::stringstream o;
    write_dataset(o, s.dataset);
    return o.str();
  }());
}

TEST(Csv, SchemaErrorsCarryLineNumbers) {
  std::istringstream missing_col("user_id,arm,x_1\nu1,0,1\n");
  EXPECT_EQ(code_of([&] { read_dataset(missing_col); }), ErrorCode::Schema);
  std::istringstream bad_arm("user_id,arm,x_1,z\nu1,0,1,2\nu2,b,1,\n");
  try {
    read_dataset(bad_arm);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Schema);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::istringstream ragged("user_id,arm,x_1,z\nu1,0,1\n");
  EXPECT_EQ(code_of([&] { read_dataset(ragged); }), ErrorCode::Schema);
  std::istringstream empty("");
  EXPECT_EQ(code_of([&] { read_dataset(empty); }), ErrorCode::Schema);
}

TEST(Csv, SegmentColumnIsOptional) {
  std::istringstream in("user_id,arm,x_1,z\nu1,0,1,2\nu2,1,3,\n");
  const Dataset d = read_dataset(in);
  EXPECT_EQ(d.segment_count(), 1u);
  EXPECT_TRUE(d[1].outcome.is_missing());
}

TEST(Csv, ImputedRoundTrip) {
  SimConfig cfg;
  cfg.n = 800;
  const Simulation s = generate(cfg);
  for (auto m : {ImputationMethod::CompleteCase, ImputationMethod::Proposed, ImputationMethod::Zero}) {
    const ImputedDataset imp = run_method(s.dataset, m);
    std::stringstream ss;
    write_imputed(ss, s.dataset, imp);
    const ImputedFile f = read_imputed(ss, m);
    EXPECT_EQ(f.imputed.provenance, imp.provenance);
    for (std::size_t i = 0; i < imp.size(); ++i) {
      if (imp.dropped(i)) {
        EXPECT_TRUE(std::isnan(f.imputed.z[i]));
      } else {
        EXPECT_EQ(f.imputed.z[i], imp.z[i]);
        EXPECT_EQ(f.imputed.y[i], imp.y[i]);
      }
    }
  }
}

TEST(Csv, TruthSidecar) {
  SimConfig cfg;
  cfg.n = 300;
  const Simulation s = generate(cfg);
  std::stringstream ss;
  write_truth(ss, s.dataset, s.truth);
  EXPECT_EQ(read_truth(ss, s.dataset), s.truth.z);
  std::stringstream wrong("user_id,y_true,z_true,masked\nu1,0,0,1\n");
  EXPECT_EQ(code_of([&] { read_truth(wrong, s.dataset); }), ErrorCode::TruthUnavailable);
}

TEST(Config, EmptyMeansDefaults) {
  const RunConfig c = parse_config(nlohmann::json::object());
  EXPECT_EQ(c.method, ImputationMethod::Proposed);
  EXPECT_EQ(c.threshold.kind, ThresholdMode::Kind::Fixed);
  EXPECT_EQ(c.threshold.value, 0.5);
  EXPECT_EQ(c.k, 15u);
  EXPECT_EQ(c.simulation.n, 5000u);
  EXPECT_EQ(c.replications, 50u);
}

TEST(Config, ParsesNestedKeys) {
  std::istringstream in(R"({
    "method": "bm2", "seed": 9, "replications": 3,
    "classifier": {"threshold_mode": "tn_fraction", "tn_fraction": 0.3},
    "clustering": {"features": ["x_1", "x_3"], "c_max": 8},
    "knn": {"k": 5, "buyers_only_mean": true},
    "simulation": {"scenario": "S3", "n": 100, "negative_amounts": "redraw"}
  })");
  const RunConfig c = parse_config(in);
  EXPECT_EQ(c.method, ImputationMethod::ControlMean);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.threshold.kind, ThresholdMode::Kind::TnFraction);
  EXPECT_EQ(c.threshold.value, 0.3);
  EXPECT_EQ(c.c_max, 8u);
  EXPECT_EQ(c.k, 5u);
  EXPECT_TRUE(c.buyers_only_mean);
  EXPECT_EQ(c.simulation.scenario, Scenario::S3);
  EXPECT_EQ(c.simulation.negatives, NegativeAmounts::Redraw);
  SimConfig small;
  small.n = 10;
  const Dataset d = generate(small).dataset;
  const PipelineConfig p = pipeline_config(c, &d);
  EXPECT_EQ(p.clustering.features, (std::vector<std::size_t>{0, 2}));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  std::istringstream typo(R"({"knn": {"kk": 3}})");
  EXPECT_EQ(code_of([&] { parse_config(typo); }), ErrorCode::Schema);
  std::istringstream bad_type(R"({"seed": "abc"})");
  EXPECT_EQ(code_of([&] { parse_config(bad_type); }), ErrorCode::Schema);
  std::istringstream not_json("{");
  EXPECT_EQ(code_of([&] { parse_config(not_json); }), ErrorCode::Schema);
  SimConfig small;
  small.n = 10;
  const Dataset d = generate(small).dataset;
  EXPECT_EQ(code_of([&] { resolve_features({"x_9"}, d); }), ErrorCode::Schema);
}

TEST(Report, EightRowsAndCsvRoundTrip) {
  SimConfig cfg;
  cfg.n = 2000;
  const Simulation s = generate(cfg);
  const EvaluationReport r =
      evaluate_methods(s.dataset, kAllMethods, PipelineConfig{}, std::span<const double>(s.truth.z));
  ASSERT_EQ(r.rows.size(), 8u);
  EXPECT_EQ(r.rows.front().method, "BM1");
  EXPECT_EQ(r.rows.back().method, "NoMissing");
  std::stringstream ss;
  write_report_csv(ss, r);
  const EvaluationReport back = read_report_csv(ss);
  ASSERT_EQ(back.rows.size(), r.rows.size());
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].method, r.rows[i].method);
    EXPECT_EQ(back.rows[i].values, r.rows[i].values);
  }
  const std::string table = render_table(r);
  EXPECT_NE(table.find("Proposed"), std::string::npos);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 9);
}

TEST(Report, EvaluateRowSemantics) {
  SimConfig cfg;
  cfg.n = 2000;
  const Simulation s = generate(cfg);
  const ImputedDataset bm1 = run_benchmark(s.dataset, ImputationMethod::CompleteCase);
  const EvaluationRow row = evaluate(bm1, "BM1");
  EXPECT_EQ(row[Column::Nc], static_cast<double>(bm1.arm_values(0).size()));
  EXPECT_EQ(row[Column::Zr], 0.0);
  const ArmStats c = arm_stats(bm1.arm_values(0)), t = arm_stats(bm1.arm_values(1));
  EXPECT_EQ(row[Column::Lift], lift(c, t));
  EXPECT_EQ(row[Column::Cv], cv(c));
  EXPECT_EQ(row[Column::PValue], p_value(c, t));
}

TEST(Report, ReplicationSummary) {
  std::vector<EvaluationReport> runs(3);
  for (int r = 0; r < 3; ++r) {
    EvaluationRow row;
    row.method = "X";
    row[Column::MuC] = 1.0 + r;
    runs[r].rows.push_back(row);
  }
  const ReplicationReport rep = summarize(runs);
  EXPECT_DOUBLE_EQ(rep.rows[0][Column::MuC].mean, 2.0);
  EXPECT_DOUBLE_EQ(rep.rows[0][Column::MuC].se, 1.0);
  const std::string table = render_table(rep);
  EXPECT_NE(table.find("2.0 (1.00)"), std::string::npos) << table;
}

TEST(Report, SegmentBreakdown) {
  // segment 0: all users missing; segment 1: every user a buyer
  std::vector<UserRecord> recs;
  for (int i = 0; i < 8; ++i) {
    UserRecord r;
    r.user_id = "s" + std::to_string(i);
    r.arm = TreatmentArm{static_cast<std::uint32_t>(i % 2)};
    r.segment = i < 4 ? 0 : 1;
    r.x = {1.0 * i};
    r.outcome = i < 4 ? Outcome::missing() : Outcome::observed(2.0 + i);
    recs.push_back(r);
  }
  const Dataset d(recs);
  const ImputedDataset zero = run_benchmark(d, ImputationMethod::Zero);
  const auto rows = segment_report(zero, zero_fill_of(zero));
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    if (r.segment == "0") {
      EXPECT_EQ(r.zr, 1.0);
      EXPECT_TRUE(std::isnan(r.cv));
    } else {
      EXPECT_LT(r.zr, 1.0);
    }
  }
  const std::vector<std::string> names{"all"};
  SimConfig cfg;
  cfg.n = 500;
  const Simulation s = generate(cfg);
  const ImputedDataset p = run_proposed(s.dataset);
  const auto one = segment_report(p, zero_fill_of(p), names);
  ASSERT_EQ(one.size(), 2u);
  for (const auto& r : one) {
    EXPECT_EQ(r.segment, "all");
    EXPECT_GE(r.mean, r.zero_fill_mean);
  }
}
