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

// Run configuration: a JSON tree with every field defaulted, so an empty
// object reproduces the reference setup. Unknown keys are rejected to catch
// typos early.

#ifndef DROPIMPUTE_CONFIG_HPP
#define DROPIMPUTE_CONFIG_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dropimpute/core.hpp"
#include "dropimpute/error.hpp"
#include "dropimpute/imputers.hpp"
#include "dropimpute/io.hpp"
#include "dropimpute/simgen.hpp"

namespace dropimpute {

struct RunConfig {
  ImputationMethod method = ImputationMethod::Proposed;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::size_t replications = 50;

  // classifier
  ThresholdMode threshold = ThresholdMode::fixed(0.5);
  FitConfig fit;

  // clustering
  std::vector<std::string> features;  // covariate names; empty = all
  std::size_t c_min = 2;
  std::size_t c_max = 20;
  KMeansConfig kmeans;
  std::size_t selection_sample = 10000;

  // knn
  std::size_t k = 15;
  bool buyers_only_mean = false;

  SimConfig simulation;

  std::string input;
  std::string output;
  std::string truth;
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& node, const std::string& where, std::initializer_list<const char*> keys) {
  if (!node.is_object()) fail(ErrorCode::Schema, "config: " + where + " must be an object");
  for (const auto& [key, value] : node.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      fail(ErrorCode::Schema, "config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

template <class T>
void read_key(const json& node, const char* key, T& out, const std::string& where) {
  if (!node.contains(key)) return;
  try {
    out = node.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::Schema, "config: bad value for '" + (where.empty() ? std::string(key) : where + "." + key) + "'");
  }
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& root) {
  using detail::read_key;
  RunConfig cfg;
  detail::reject_unknown(root, "", {"method", "seed", "threads", "replications", "classifier", "clustering", "knn",
                                    "simulation", "paths"});
  std::string method(to_string(cfg.method));
  read_key(root, "method", method, "");
  try {
    cfg.method = parse_method(method);
  } catch (const Error& e) {
    fail(ErrorCode::Schema, std::string("config: ") + e.what());
  }
  read_key(root, "seed", cfg.seed, "");
  read_key(root, "threads", cfg.threads, "");
  read_key(root, "replications", cfg.replications, "");

  if (root.contains("classifier")) {
    const auto& c = root.at("classifier");
    detail::reject_unknown(c, "classifier", {"threshold_mode", "threshold", "tn_fraction", "max_iterations",
                                             "tolerance"});
    std::string mode = "fixed";
    double tau = 0.5;
    double q = 0.0;
    read_key(c, "threshold_mode", mode, "classifier");
    read_key(c, "threshold", tau, "classifier");
    read_key(c, "tn_fraction", q, "classifier");
    if (mode == "fixed") {
      cfg.threshold = ThresholdMode::fixed(tau);
    } else if (mode == "tn_fraction") {
      cfg.threshold = ThresholdMode::tn_fraction(q);
    } else {
      fail(ErrorCode::Schema, "config: classifier.threshold_mode must be fixed or tn_fraction");
    }
    read_key(c, "max_iterations", cfg.fit.max_iterations, "classifier");
    read_key(c, "tolerance", cfg.fit.tolerance, "classifier");
  }

  if (root.contains("clustering")) {
    const auto& c = root.at("clustering");
    detail::reject_unknown(c, "clustering", {"features", "c_min", "c_max", "restarts", "max_iterations", "tolerance",
                                             "selection_sample"});
    read_key(c, "features", cfg.features, "clustering");
    read_key(c, "c_min", cfg.c_min, "clustering");
    read_key(c, "c_max", cfg.c_max, "clustering");
    read_key(c, "restarts", cfg.kmeans.restarts, "clustering");
    read_key(c, "max_iterations", cfg.kmeans.max_iterations, "clustering");
    read_key(c, "tolerance", cfg.kmeans.tolerance, "clustering");
    read_key(c, "selection_sample", cfg.selection_sample, "clustering");
  }

  if (root.contains("knn")) {
    const auto& c = root.at("knn");
    detail::reject_unknown(c, "knn", {"k", "buyers_only_mean"});
    read_key(c, "k", cfg.k, "knn");
    read_key(c, "buyers_only_mean", cfg.buyers_only_mean, "knn");
  }

  if (root.contains("simulation")) {
    const auto& c = root.at("simulation");
    detail::reject_unknown(c, "simulation", {"n", "scenario", "mcar_rate", "mar_slope", "mnar_quantile", "arm_split",
                                             "negative_amounts", "segments"});
    SimConfig& s = cfg.simulation;
    read_key(c, "n", s.n, "simulation");
    std::string scenario(to_string(s.scenario));
    read_key(c, "scenario", scenario, "simulation");
    try {
      s.scenario = parse_scenario(scenario);
    } catch (const Error& e) {
      fail(ErrorCode::Schema, std::string("config: ") + e.what());
    }
    read_key(c, "mcar_rate", s.mcar_rate, "simulation");
    read_key(c, "mar_slope", s.mar_slope, "simulation");
    read_key(c, "mnar_quantile", s.mnar_quantile, "simulation");
    read_key(c, "arm_split", s.arm_split, "simulation");
    std::string negatives = s.negatives == NegativeAmounts::Keep ? "keep" : "redraw";
    read_key(c, "negative_amounts", negatives, "simulation");
    if (negatives == "keep") {
      s.negatives = NegativeAmounts::Keep;
    } else if (negatives == "redraw") {
      s.negatives = NegativeAmounts::Redraw;
    } else {
      fail(ErrorCode::Schema, "config: simulation.negative_amounts must be keep or redraw");
    }
    read_key(c, "segments", s.segments, "simulation");
  }

  if (root.contains("paths")) {
    const auto& c = root.at("paths");
    detail::reject_unknown(c, "paths", {"input", "output", "truth"});
    read_key(c, "input", cfg.input, "paths");
    read_key(c, "output", cfg.output, "paths");
    read_key(c, "truth", cfg.truth, "paths");
  }
  return cfg;
}

inline RunConfig parse_config(std::istream& in) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::Schema, std::string("config: ") + e.what());
  }
  return parse_config(root);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in = open_input(path);
  return parse_config(in);
}

/// Maps clustering feature names onto covariate columns of `d`.
inline std::vector<std::size_t> resolve_features(const std::vector<std::string>& names, const Dataset& d) {
  std::vector<std::size_t> out;
  const auto& cov = d.covariate_names();
  for (const auto& name : names) {
    const auto it = std::find(cov.begin(), cov.end(), name);
    if (it == cov.end()) fail(ErrorCode::Schema, "unknown clustering feature '" + name + "'");
    out.push_back(static_cast<std::size_t>(it - cov.begin()));
  }
  return out;
}

/// Engine configuration for one dataset. Feature names must already be
/// resolvable against `d` when given.
inline PipelineConfig pipeline_config(const RunConfig& run, const Dataset* d = nullptr) {
  PipelineConfig p;
  p.fit = run.fit;
  p.threshold = run.threshold;
  p.clustering.c_min = run.c_min;
  p.clustering.c_max = run.c_max;
  p.clustering.kmeans = run.kmeans;
  p.clustering.selection_sample = run.selection_sample;
  if (d != nullptr) p.clustering.features = resolve_features(run.features, *d);
  p.k = run.k;
  p.buyers_only_mean = run.buyers_only_mean;
  p.seed = run.seed;
  p.threads = run.threads;
  return p;
}

}  // namespace dropimpute

#endif  // DROPIMPUTE_CONFIG_HPP
