#pragma once

#include <string>
#include <vector>

#include "feedrank/features.hpp"
#include "feedrank/model.hpp"
#include "feedrank/reranker.hpp"
#include "feedrank/simgen.hpp"

namespace feedrank {

struct PathsConfig {
  std::string out_dir = "run";
  std::string corpus;            // default <out_dir>/corpus.jsonl
  std::string users;             // default <out_dir>/users.jsonl
  std::string logs_dir;          // default <out_dir>/logs
  std::string model_baseline;    // default <out_dir>/model_baseline.json
  std::string model_contextual;  // default <out_dir>/model_contextual.json
  std::string reports_dir;       // default <out_dir>/reports

  void resolve();
};

struct EvalConfig {
  int num_buckets = 40;       // uniform over [-1, 1]
  int holdout_days = 2;       // trailing days excluded from training
  int objective_task = 0;
  double mmr_lambda = 0.5;
  long min_bucket_count = 500;
};

struct ServiceConfig {
  // Sessions untouched for this many requests are evicted.
  long session_idle_limit = 256;
};

struct AppConfig {
  PathsConfig paths;
  WorldConfig world;
  TrainConfig train;
  FeatureConfig features;
  RerankParams rerank;
  EvalConfig eval;
  ServiceConfig service;
};

AppConfig default_config();

// Single JSON document; any subset of keys may be present.
AppConfig parse_config_json(const std::string& text);
AppConfig load_config(const std::string& path);

// Dotted-path overrides of the form "--rerank.window=5" (leading dashes
// optional). Values are parsed as JSON scalars, falling back to strings.
void apply_config_overrides(AppConfig& cfg,
                            const std::vector<std::string>& overrides);

std::string config_to_json(const AppConfig& cfg);

}  // namespace feedrank
