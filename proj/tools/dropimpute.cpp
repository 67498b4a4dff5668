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

// dropimpute: simulate, impute, evaluate and report from the command line.
//
// Exit codes: 0 ok, 1 usage error, 2 data or I/O error. Errors print a single
// line "error: CODE: detail" on stderr.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dropimpute.hpp"

namespace di = dropimpute;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool allow_negative = false;
};

struct PipelineFlags {
  std::optional<std::string> method;
  std::optional<std::size_t> k;
  std::optional<double> threshold;
  std::optional<double> tn_fraction;
  std::optional<std::string> features;
  bool buyers_only_mean = false;
};

struct SimFlags {
  std::optional<std::string> scenario;
  std::optional<std::size_t> n;
  std::optional<std::size_t> segments;
  std::optional<double> mcar_rate;
  std::optional<double> mnar_quantile;
  std::optional<std::string> negatives;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Precedence: defaults < config file < DI_SEED < flags.
di::RunConfig resolve(const Common& c) {
  di::RunConfig cfg = c.config.empty() ? di::RunConfig{} : di::load_config(c.config);
  if (const char* env = std::getenv("DI_SEED"); env != nullptr && *env != '\0') {
    const auto v = di::parse_unsigned(env);
    if (!v) di::fail(di::ErrorCode::InvalidArgument, std::string("DI_SEED '") + env + "' is not an unsigned integer");
    cfg.seed = *v;
  }
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  return cfg;
}

void apply(const PipelineFlags& f, di::RunConfig& cfg) {
  if (f.method) cfg.method = di::parse_method(*f.method);
  if (f.k) cfg.k = *f.k;
  if (f.threshold && f.tn_fraction) {
    di::fail(di::ErrorCode::InvalidArgument, "--threshold and --tn-fraction are mutually exclusive");
  }
  if (f.threshold) cfg.threshold = di::ThresholdMode::fixed(*f.threshold);
  if (f.tn_fraction) cfg.threshold = di::ThresholdMode::tn_fraction(*f.tn_fraction);
  if (f.features) cfg.features = split_list(*f.features);
  if (f.buyers_only_mean) cfg.buyers_only_mean = true;
}

void apply(const SimFlags& f, di::RunConfig& cfg) {
  di::SimConfig& s = cfg.simulation;
  if (f.scenario) s.scenario = di::parse_scenario(*f.scenario);
  if (f.n) s.n = *f.n;
  if (f.segments) s.segments = *f.segments;
  if (f.mcar_rate) s.mcar_rate = *f.mcar_rate;
  if (f.mnar_quantile) s.mnar_quantile = *f.mnar_quantile;
  if (f.negatives) {
    if (*f.negatives == "keep") {
      s.negatives = di::NegativeAmounts::Keep;
    } else if (*f.negatives == "redraw") {
      s.negatives = di::NegativeAmounts::Redraw;
    } else {
      di::fail(di::ErrorCode::InvalidArgument, "--negatives must be keep or redraw");
    }
  }
  s.seed = cfg.seed;
  s.check();
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON configuration file");
  app->add_option("--seed", c.seed, "random seed (overrides DI_SEED and config)");
  app->add_option("--threads", c.threads, "worker threads, 0 = all cores");
  app->add_flag("--allow-negative-z", c.allow_negative, "accept negative observed amounts");
}

void add_pipeline(CLI::App* app, PipelineFlags& f) {
  app->add_option("--method", f.method, "proposed, bm1..bm6 or nomissing");
  app->add_option("--k", f.k, "neighbours per query");
  app->add_option("--threshold", f.threshold, "fixed classification threshold");
  app->add_option("--tn-fraction", f.tn_fraction, "declare this fraction of users visitors");
  app->add_option("--features", f.features, "comma-separated clustering covariates");
  app->add_flag("--buyers-only-mean", f.buyers_only_mean, "average amounts over buyer neighbours only");
}

void add_simulation(CLI::App* app, SimFlags& f) {
  app->add_option("--scenario", f.scenario, "S1 (MCAR), S2 (MAR) or S3 (MNAR)");
  app->add_option("--n", f.n, "users per dataset");
  app->add_option("--segments", f.segments, "buyer segments");
  app->add_option("--mcar-rate", f.mcar_rate, "missing rate among buyers (S1, S2)");
  app->add_option("--mnar-quantile", f.mnar_quantile, "hidden top share per arm (S3)");
  app->add_option("--negatives", f.negatives, "negative amount draws: keep or redraw");
}

di::Dataset load_dataset(const std::string& path, bool allow_negative) {
  if (path.empty()) di::fail(di::ErrorCode::InvalidArgument, "no input file given");
  di::Dataset d = di::read_dataset(path);
  const di::ValidationResult v = di::validate(d, {allow_negative});
  if (!v.ok()) {
    const di::Violation& first = v.violations.front();
    std::string msg = std::string(di::to_string(first.kind));
    if (first.row) msg += " at data row " + std::to_string(*first.row + 1);
    if (v.violations.size() > 1) msg += " (" + std::to_string(v.violations.size() - 1) + " more)";
    if (first.kind == di::ViolationKind::NegativeAmount) msg += "; pass --allow-negative-z to accept";
    di::fail(di::ErrorCode::InvalidData, msg);
  }
  return d;
}

std::optional<std::vector<double>> load_truth(const std::string& path, const di::Dataset& d) {
  if (path.empty()) return std::nullopt;
  auto in = di::open_input(path);
  return di::read_truth(in, d);
}

std::string truth_path_for(const std::string& out) {
  std::filesystem::path p(out);
  if (p.extension() == ".csv") return (p.parent_path() / p.stem()).string() + ".truth.csv";
  return out + ".truth.csv";
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  auto out = di::open_output(path);
  out << text;
}

int cmd_simulate(const Common& c, const SimFlags& sf, const std::string& out_flag, const std::string& truth_flag) {
  di::RunConfig cfg = resolve(c);
  apply(sf, cfg);
  const std::string out = !out_flag.empty() ? out_flag : cfg.output;
  if (out.empty()) di::fail(di::ErrorCode::InvalidArgument, "simulate needs --out");
  const std::string truth = !truth_flag.empty() ? truth_flag : (!cfg.truth.empty() ? cfg.truth : truth_path_for(out));
  const di::Simulation sim = di::generate(cfg.simulation);
  {
    auto os = di::open_output(out);
    di::write_dataset(os, sim.dataset);
  }
  auto ts = di::open_output(truth);
  di::write_truth(ts, sim.dataset, sim.truth);
  return 0;
}

int cmd_impute(const Common& c, const PipelineFlags& pf, const std::string& in_flag, const std::string& out_flag,
               const std::string& truth_flag, bool stats) {
  di::RunConfig cfg = resolve(c);
  apply(pf, cfg);
  const di::Dataset d = load_dataset(!in_flag.empty() ? in_flag : cfg.input, c.allow_negative);
  const std::string out = !out_flag.empty() ? out_flag : cfg.output;
  if (out.empty()) di::fail(di::ErrorCode::InvalidArgument, "impute needs --out");
  const auto truth = load_truth(!truth_flag.empty() ? truth_flag : cfg.truth, d);
  const di::PipelineConfig pipe = di::pipeline_config(cfg, &d);

  di::ImputedDataset imp;
  if (cfg.method == di::ImputationMethod::Proposed) {
    di::ProposedResult r = di::run_proposed_detailed(d, pipe);
    if (stats) {
      const auto& s = r.screening;
      std::cerr << "screening: TN=" << s.count(di::UserClass::TrueNegative)
                << " FP=" << s.count(di::UserClass::FalsePositive)
                << " FN=" << s.count(di::UserClass::FalseNegative)
                << " TP=" << s.count(di::UserClass::TruePositive) << '\n';
      for (const auto& st : r.strata) {
        std::cerr << "stratum arm=" << st.key.arm << " segment=" << st.key.segment << " train=" << st.train_size
                  << " test=" << st.test_size << " clusters=" << st.cluster_count
                  << (st.pooled ? " pooled" : "") << " distances=" << st.search.total_distances() << '\n';
      }
    }
    imp = std::move(r.imputed);
  } else {
    imp = di::run_method(d, cfg.method, pipe,
                         truth ? std::optional<std::span<const double>>(*truth) : std::nullopt);
  }
  auto os = di::open_output(out);
  di::write_imputed(os, d, imp);
  return 0;
}

struct EvaluateFlags {
  std::string input;
  std::string truth;
  std::vector<std::string> imputed;
  std::string methods = "all";
  std::optional<std::size_t> replications;
  std::string out;
  std::string table;
};

std::vector<di::ImputationMethod> method_list(const std::string& spec, bool have_truth) {
  std::vector<di::ImputationMethod> out;
  if (spec == "all") {
    for (auto m : di::kAllMethods) {
      if (m != di::ImputationMethod::NoMissing || have_truth) out.push_back(m);
    }
    return out;
  }
  for (const auto& name : split_list(spec)) out.push_back(di::parse_method(name));
  if (out.empty()) di::fail(di::ErrorCode::InvalidArgument, "empty method list");
  return out;
}

int cmd_evaluate(const Common& c, const PipelineFlags& pf, const SimFlags& sf, const EvaluateFlags& ef) {
  di::RunConfig cfg = resolve(c);
  apply(pf, cfg);
  apply(sf, cfg);
  const int modes = (!ef.imputed.empty()) + (!ef.input.empty()) + ef.replications.has_value();
  if (modes > 1) di::fail(di::ErrorCode::InvalidArgument, "choose one of --imputed, --input or --replications");

  if (ef.replications || (modes == 0 && cfg.input.empty())) {
    di::ReplicationPlan plan;
    plan.simulation = cfg.simulation;
    plan.pipeline = di::pipeline_config(cfg);
    if (!cfg.features.empty()) {
      // simulated covariates are always x_1..x_3
      const di::Dataset probe = di::generate(di::SimConfig{.n = 8}).dataset;
      plan.pipeline.clustering.features = di::resolve_features(cfg.features, probe);
    }
    plan.replications = ef.replications.value_or(cfg.replications);
    if (plan.replications == 0) di::fail(di::ErrorCode::InvalidArgument, "replications must be positive");
    plan.methods = method_list(ef.methods, true);
    plan.threads = cfg.threads;
    const di::ReplicationReport rep = di::replicate(plan);
    if (!ef.out.empty()) {
      auto os = di::open_output(ef.out);
      di::write_replication_csv(os, rep);
    }
    emit(di::render_table(rep), ef.table);
    return 0;
  }

  di::EvaluationReport report;
  if (!ef.imputed.empty()) {
    for (const auto& item : ef.imputed) {
      std::string label = item;
      std::string path = item;
      if (const auto eq = item.find('='); eq != std::string::npos) {
        label = item.substr(0, eq);
        path = item.substr(eq + 1);
      } else {
        label = std::filesystem::path(item).stem().string();
      }
      auto in = di::open_input(path);
      const di::ImputedFile f = di::read_imputed(in);
      report.rows.push_back(di::evaluate(f.imputed, label));
    }
  } else {
    const di::Dataset d = load_dataset(!ef.input.empty() ? ef.input : cfg.input, c.allow_negative);
    const auto truth = load_truth(!ef.truth.empty() ? ef.truth : cfg.truth, d);
    const auto methods = method_list(ef.methods, truth.has_value());
    report = di::evaluate_methods(d, methods, di::pipeline_config(cfg, &d),
                                  truth ? std::optional<std::span<const double>>(*truth) : std::nullopt);
  }
  if (!ef.out.empty()) {
    auto os = di::open_output(ef.out);
    di::write_report_csv(os, report);
  }
  emit(di::render_table(report), ef.table);
  return 0;
}

bool has_segment_column(const std::string& path) {
  auto in = di::open_input(path);
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const auto cols = di::detail::split_csv_line(header, 1);
  return std::find(cols.begin(), cols.end(), "segment") != cols.end();
}

int cmd_report(const Common& c, const PipelineFlags& pf, const std::string& imputed, const std::string& input,
               const std::string& out, const std::string& table) {
  di::RunConfig cfg = resolve(c);
  apply(pf, cfg);
  if (imputed.empty() == input.empty() && cfg.input.empty()) {
    di::fail(di::ErrorCode::InvalidArgument, "report needs exactly one of --imputed or --input");
  }
  di::ImputedDataset method;
  std::string source;
  if (!imputed.empty()) {
    auto in = di::open_input(imputed);
    method = di::read_imputed(in).imputed;
    source = imputed;
  } else {
    source = !input.empty() ? input : cfg.input;
    const di::Dataset d = load_dataset(source, c.allow_negative);
    method = di::run_method(d, cfg.method, di::pipeline_config(cfg, &d));
  }
  std::vector<std::string> names;
  if (!has_segment_column(source)) names.push_back("all");
  const std::string label(di::to_string(cfg.method));
  const auto rows = di::segment_report(method, di::zero_fill_of(method), names);
  if (!out.empty()) {
    auto os = di::open_output(out);
    di::write_segment_csv(os, rows, label);
  }
  emit(di::render_segments(rows, label), table);
  return 0;
}

int exit_code(di::ErrorCode code) { return code == di::ErrorCode::InvalidArgument ? 1 : 2; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Imputation of dropout buyers in A/B tests"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dropimpute 1.0.0");

  Common common;
  PipelineFlags pipeline;
  SimFlags sim;
  EvaluateFlags eval;
  std::string input, output, truth, imputed, table;
  bool stats = false;

  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic experiment and its truth sidecar");
  add_common(simulate, common);
  add_simulation(simulate, sim);
  simulate->add_option("--out,-o", output, "dataset CSV");
  simulate->add_option("--truth", truth, "truth sidecar CSV (default: <out>.truth.csv)");

  CLI::App* impute = app.add_subcommand("impute", "fill missing outcomes");
  add_common(impute, common);
  add_pipeline(impute, pipeline);
  impute->add_option("--input,-i", input, "dataset CSV");
  impute->add_option("--out,-o", output, "imputed CSV");
  impute->add_option("--truth", truth, "truth sidecar (required for nomissing)");
  impute->add_flag("--stats", stats, "print screening and search counters to stderr");

  CLI::App* evaluate = app.add_subcommand("evaluate", "compare methods on one dataset or over replications");
  add_common(evaluate, common);
  add_pipeline(evaluate, pipeline);
  add_simulation(evaluate, sim);
  evaluate->add_option("--input,-i", eval.input, "dataset CSV; runs every method on it");
  evaluate->add_option("--truth", eval.truth, "truth sidecar, enables the nomissing row");
  evaluate->add_option("--imputed", eval.imputed, "imputed CSV, optionally label=path; repeatable");
  evaluate->add_option("--methods", eval.methods, "comma-separated methods or 'all'");
  evaluate->add_option("--replications", eval.replications, "simulate and evaluate this many datasets");
  evaluate->add_option("--out,-o", eval.out, "report CSV");
  evaluate->add_option("--table", eval.table, "text table destination (default stdout)");

  CLI::App* report = app.add_subcommand("report", "per-segment means, CV and zero rate against zero imputation");
  add_common(report, common);
  add_pipeline(report, pipeline);
  report->add_option("--imputed", imputed, "imputed CSV");
  report->add_option("--input,-i", input, "dataset CSV; imputed with --method first");
  report->add_option("--out,-o", output, "segment CSV");
  report->add_option("--table", table, "text table destination (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: USAGE: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*simulate) return cmd_simulate(common, sim, output, truth);
    if (*impute) return cmd_impute(common, pipeline, input, output, truth, stats);
    if (*evaluate) return cmd_evaluate(common, pipeline, sim, eval);
    if (*report) return cmd_report(common, pipeline, imputed, input, output, table);
  } catch (const di::Error& e) {
    std::cerr << "error: " << di::to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: INTERNAL: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
