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

// Method comparison tables: one row per imputation strategy with lift, arm
// means, control sd, CV, control size, zero rate, pooled SE and p-value, and
// the replication harness that averages those rows over simulated datasets.

#ifndef DROPIMPUTE_REPORT_HPP
#define DROPIMPUTE_REPORT_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dropimpute/core.hpp"
#include "dropimpute/error.hpp"
#include "dropimpute/imputers.hpp"
#include "dropimpute/io.hpp"
#include "dropimpute/metrics.hpp"
#include "dropimpute/parallel.hpp"
#include "dropimpute/rng.hpp"
#include "dropimpute/simgen.hpp"

namespace dropimpute {

enum class Column { Lift, MuC, MuT, Sc, Cv, Nc, Zr, Se, PValue };
inline constexpr std::size_t kColumnCount = 9;
inline constexpr std::array<Column, kColumnCount> kColumns = {
    Column::Lift, Column::MuC, Column::MuT, Column::Sc, Column::Cv,
    Column::Nc,   Column::Zr,  Column::Se,  Column::PValue};

inline std::string_view column_key(Column c) {
  static constexpr std::array<std::string_view, kColumnCount> keys = {
      "lift_pct", "mu_c", "mu_t", "s_c", "cv", "n_c", "zr", "se", "p_value"};
  return keys[static_cast<std::size_t>(c)];
}

inline std::string_view column_title(Column c) {
  static constexpr std::array<std::string_view, kColumnCount> titles = {
      "Lift(%)", "mu_c", "mu_t", "s_c", "CV", "n_c", "ZR", "SE", "p-value"};
  return titles[static_cast<std::size_t>(c)];
}

struct EvaluationRow {
  std::string method;
  std::array<double, kColumnCount> values{};

  double operator[](Column c) const { return values[static_cast<std::size_t>(c)]; }
  double& operator[](Column c) { return values[static_cast<std::size_t>(c)]; }
};

struct EvaluationReport {
  std::vector<EvaluationRow> rows;

  const EvaluationRow* find(std::string_view method) const {
    for (const auto& r : rows) {
      if (r.method == method) return &r;
    }
    return nullptr;
  }
};

/// Control arm 0 against `treatment` (all non-control arms pooled when unset).
inline EvaluationRow evaluate(const ImputedDataset& imp, std::string label,
                              std::optional<std::uint32_t> treatment = std::nullopt) {
  const std::vector<double> c = imp.arm_values(0);
  const std::vector<double> t = treatment ? imp.arm_values(*treatment) : imp.treatment_values();
  if (c.empty()) fail(ErrorCode::EmptyArm, "no retained control users");
  if (t.empty()) fail(ErrorCode::EmptyArm, "no retained treatment users");
  const ArmStats cs = arm_stats(c);
  const ArmStats ts = arm_stats(t);
  EvaluationRow row;
  row.method = std::move(label);
  row[Column::Lift] = lift(cs, ts);
  row[Column::MuC] = cs.mean;
  row[Column::MuT] = ts.mean;
  row[Column::Sc] = cs.sd;
  row[Column::Cv] = cv(cs);
  row[Column::Nc] = static_cast<double>(cs.n);
  row[Column::Zr] = zero_rate(imp);
  row[Column::Se] = pooled_se(cs, ts);
  row[Column::PValue] = p_value(cs, ts);
  return row;
}

/// Runs every requested method on one dataset. NoMissing rows need `truth`.
inline EvaluationReport evaluate_methods(const Dataset& d, std::span<const ImputationMethod> methods,
                                         const PipelineConfig& cfg,
                                         std::optional<std::span<const double>> truth = std::nullopt) {
  EvaluationReport report;
  for (ImputationMethod m : methods) {
    const ImputedDataset imp = run_method(d, m, cfg, truth);
    report.rows.push_back(evaluate(imp, std::string(display_name(m))));
  }
  return report;
}

struct Summary {
  double mean = 0.0;
  double se = 0.0;  // spread across replications (sample sd)
};

struct ReplicationRow {
  std::string method;
  std::array<Summary, kColumnCount> columns{};

  const Summary& operator[](Column c) const { return columns[static_cast<std::size_t>(c)]; }
};

struct ReplicationReport {
  std::size_t replications = 0;
  std::vector<ReplicationRow> rows;

  const ReplicationRow* find(std::string_view method) const {
    for (const auto& r : rows) {
      if (r.method == method) return &r;
    }
    return nullptr;
  }
};

inline ReplicationReport summarize(const std::vector<EvaluationReport>& runs) {
  ReplicationReport out;
  out.replications = runs.size();
  if (runs.empty()) return out;
  for (std::size_t r = 0; r < runs.front().rows.size(); ++r) {
    ReplicationRow row;
    row.method = runs.front().rows[r].method;
    for (std::size_t c = 0; c < kColumnCount; ++c) {
      double sum = 0.0;
      for (const auto& run : runs) sum += run.rows[r].values[c];
      const double mean = sum / static_cast<double>(runs.size());
      double ss = 0.0;
      for (const auto& run : runs) {
        const double dv = run.rows[r].values[c] - mean;
        ss += dv * dv;
      }
      row.columns[c].mean = mean;
      row.columns[c].se = runs.size() > 1 ? std::sqrt(ss / static_cast<double>(runs.size() - 1)) : 0.0;
    }
    out.rows.push_back(row);
  }
  return out;
}

struct ReplicationPlan {
  SimConfig simulation;
  PipelineConfig pipeline;
  std::size_t replications = 50;
  std::vector<ImputationMethod> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  unsigned threads = 0;
};

/// Replication r simulates with seed split(sim.seed, r) and imputes with
/// seed split(pipeline.seed, r); replications run in parallel.
inline ReplicationReport replicate(const ReplicationPlan& plan) {
  std::vector<EvaluationReport> runs(plan.replications);
  parallel_for(plan.replications, plan.threads, [&](std::size_t r) {
    SimConfig sim = plan.simulation;
    sim.seed = split_seed(plan.simulation.seed, r);
    PipelineConfig pipe = plan.pipeline;
    pipe.seed = split_seed(plan.pipeline.seed, r);
    pipe.threads = 1;
    const Simulation s = generate(sim);
    runs[r] = evaluate_methods(s.dataset, plan.methods, pipe, std::span<const double>(s.truth.z));
  });
  return summarize(runs);
}

namespace detail {

inline std::string fixed(double v, int decimals) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  std::string s(buf);
  if (s == "-0" || s.rfind("-0.", 0) == 0) {
    // keep "-0.0" from rounding noise out of tables
    bool all_zero = true;
    for (char ch : s.substr(1)) all_zero &= (ch == '0' || ch == '.');
    if (all_zero) s.erase(0, 1);
  }
  return s;
}

inline std::string render_cell(Column c, double v) {
  if (c == Column::PValue) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
  }
  if (c == Column::Se) return fixed(v, 3);
  return fixed(v, 1);
}

inline std::string render_grid(const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> width;
  for (const auto& row : cells) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t j = 0; j < row.size(); ++j) width[j] = std::max(width[j], row[j].size());
  }
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == 0) {
        out += row[j] + std::string(width[j] - row[j].size(), ' ');
      } else {
        out += "  " + std::string(width[j] - row[j].size(), ' ') + row[j];
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace detail

/// Aligned text table, rounded the way published tables are.
inline std::string render_table(const EvaluationReport& report) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Method"});
  for (Column c : kColumns) cells.back().emplace_back(column_title(c));
  for (const auto& row : report.rows) {
    cells.push_back({row.method});
    for (Column c : kColumns) cells.back().push_back(detail::render_cell(c, row[c]));
  }
  return detail::render_grid(cells);
}

/// "mean (se)" cells.
inline std::string render_table(const ReplicationReport& report) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Method"});
  for (Column c : kColumns) cells.back().emplace_back(column_title(c));
  for (const auto& row : report.rows) {
    cells.push_back({row.method});
    for (Column c : kColumns) {
      const Summary& s = row[c];
      const std::string mean = c == Column::PValue ? detail::render_cell(c, s.mean) : detail::fixed(s.mean, 1);
      const std::string se = c == Column::PValue ? detail::render_cell(c, s.se) : detail::fixed(s.se, 2);
      cells.back().push_back(mean + " (" + se + ")");
    }
  }
  return detail::render_grid(cells);
}

inline void write_report_csv(std::ostream& os, const EvaluationReport& report) {
  os << "method";
  for (Column c : kColumns) os << ',' << column_key(c);
  os << '\n';
  for (const auto& row : report.rows) {
    os << csv_escape(row.method);
    for (double v : row.values) os << ',' << format_double(v);
    os << '\n';
  }
}

inline EvaluationReport read_report_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  if (t.header.size() != kColumnCount + 1 || t.header[0] != "method") {
    fail(ErrorCode::Schema, "not an evaluation report");
  }
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    if (t.header[c + 1] != column_key(kColumns[c])) fail(ErrorCode::Schema, "unexpected report column");
  }
  EvaluationReport report;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    EvaluationRow row;
    row.method = t.rows[r][0];
    for (std::size_t c = 0; c < kColumnCount; ++c) {
      const auto v = parse_double(t.rows[r][c + 1]);
      if (!v) detail::row_error(t.lines[r], "report value is not a number");
      row.values[c] = *v;
    }
    report.rows.push_back(row);
  }
  return report;
}

inline void write_replication_csv(std::ostream& os, const ReplicationReport& report) {
  os << "method,replications";
  for (Column c : kColumns) os << ',' << column_key(c) << "_mean," << column_key(c) << "_se";
  os << '\n';
  for (const auto& row : report.rows) {
    os << csv_escape(row.method) << ',' << report.replications;
    for (const Summary& s : row.columns) os << ',' << format_double(s.mean) << ',' << format_double(s.se);
    os << '\n';
  }
}

/// Per (segment, arm) comparison of a method against zero imputation.
struct SegmentRow {
  std::string segment;
  std::uint32_t arm = 0;
  std::size_t n = 0;
  double mean = 0.0;
  double cv = 0.0;
  double zr = 0.0;
  double zero_fill_mean = 0.0;
  double zero_fill_cv = 0.0;
  double zero_fill_zr = 0.0;
};

namespace detail {

inline void segment_stats(std::span<const double> v, double& mean, double& coef, double& zr) {
  const ArmStats s = arm_stats(v);
  mean = s.mean;
  coef = s.mean != 0.0 ? s.sd / s.mean : std::numeric_limits<double>::quiet_NaN();
  zr = zero_rate(v);
}

}  // namespace detail

/// `method` and `zero_fill` must describe the same users in the same order.
inline std::vector<SegmentRow> segment_report(const ImputedDataset& method, const ImputedDataset& zero_fill,
                                              std::span<const std::string> segment_names = {}) {
  if (method.size() != zero_fill.size()) fail(ErrorCode::DimensionMismatch, "imputations differ in size");
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (std::size_t i = 0; i < method.size(); ++i) {
    if (method.dropped(i) || zero_fill.dropped(i)) continue;
    auto& g = groups[{method.segment[i], method.arm[i]}];
    g.first.push_back(method.z[i]);
    g.second.push_back(zero_fill.z[i]);
  }
  std::vector<SegmentRow> rows;
  for (const auto& [key, values] : groups) {
    SegmentRow row;
    row.segment = key.first < segment_names.size() && !segment_names[key.first].empty()
                      ? segment_names[key.first]
                      : std::to_string(key.first);
    row.arm = key.second;
    row.n = values.first.size();
    detail::segment_stats(values.first, row.mean, row.cv, row.zr);
    detail::segment_stats(values.second, row.zero_fill_mean, row.zero_fill_cv, row.zero_fill_zr);
    rows.push_back(row);
  }
  return rows;
}

/// Zero imputation reconstructed from an imputed file: observed amounts kept,
/// everything else zero.
inline ImputedDataset zero_fill_of(const ImputedDataset& imp) {
  ImputedDataset out = imp;
  out.method = ImputationMethod::Zero;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.pooled[i] = 0;
    if (out.provenance[i] == Provenance::Observed) continue;
    out.z[i] = 0.0;
    out.y[i] = 0;
    out.provenance[i] = Provenance::ImputedVisitor;
  }
  return out;
}

inline void write_segment_csv(std::ostream& os, const std::vector<SegmentRow>& rows, std::string_view method) {
  os << "segment,arm,n," << method << "_mean," << method << "_cv," << method << "_zr,bm4_mean,bm4_cv,bm4_zr\n";
  for (const auto& r : rows) {
    os << csv_escape(r.segment) << ',' << r.arm << ',' << r.n << ',' << format_double(r.mean) << ','
       << format_double(r.cv) << ',' << format_double(r.zr) << ',' << format_double(r.zero_fill_mean) << ','
       << format_double(r.zero_fill_cv) << ',' << format_double(r.zero_fill_zr) << '\n';
  }
}

inline std::string render_segments(const std::vector<SegmentRow>& rows, std::string_view method) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Segment", "Arm", "n", std::string(method) + " mean", "CV", "ZR", "BM4 mean", "CV", "ZR"});
  for (const auto& r : rows) {
    cells.push_back({r.segment, std::to_string(r.arm), std::to_string(r.n), detail::fixed(r.mean, 3),
                     detail::fixed(r.cv, 3), detail::fixed(r.zr, 3), detail::fixed(r.zero_fill_mean, 3),
                     detail::fixed(r.zero_fill_cv, 3), detail::fixed(r.zero_fill_zr, 3)});
  }
  return detail::render_grid(cells);
}

}  // namespace dropimpute

#endif  // DROPIMPUTE_REPORT_HPP
