// Operator surface for the contextual re-ranking pipeline:
//   simulate    generate a synthetic world and day-partitioned session logs
//   train       fit the baseline or contextual scorer on the logged days
//   eval        calibration / NE / ranker-comparison reports on held-out days
//   rerank-file re-rank one feed file offline
//   serve       line-delimited JSON re-ranking service on stdin/stdout
//
// All settings come from a JSON config (--config or $FEEDRANK_CONFIG) plus
// dotted-path overrides such as --world.seed=7 or --rerank.window=5.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "feedrank/config.hpp"
#include "feedrank/eval.hpp"
#include "feedrank/model.hpp"
#include "feedrank/reranker.hpp"
#include "feedrank/service.hpp"
#include "feedrank/simgen.hpp"

namespace fs = std::filesystem;
using namespace feedrank;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitDataError = 3;

std::ofstream must_open(const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::IoError, "cannot write '" + path + "'");
  return out;
}

// Highest day value minus the holdout tail; days above the cut are reserved
// for evaluation.
int holdout_cut_day(const SessionLog& log, int holdout_days) {
  int max_day = 0;
  for (const Impression& imp : log.impressions) {
    max_day = std::max(max_day, imp.day);
  }
  return max_day + 1 - holdout_days;
}

SessionLog filter_days(const SessionLog& log, int lo, int hi) {
  SessionLog out;
  out.meta = log.meta;
  for (const Impression& imp : log.impressions) {
    if (imp.day >= lo && imp.day < hi) out.impressions.push_back(imp);
  }
  return out;
}

int cmd_simulate(const AppConfig& cfg) {
  const World world = generate_world(cfg.world);
  const SessionLog log = simulate_sessions(world);

  fs::create_directories(cfg.paths.out_dir);
  write_corpus(world.items, cfg.paths.corpus);
  write_users(world.users, cfg.paths.users);
  write_session_log(log, cfg.paths.logs_dir);

  std::printf("seed %llu: %d users, %d items, %d days x %d sessions, %zu impressions\n",
              static_cast<unsigned long long>(cfg.world.seed),
              cfg.world.num_users, cfg.world.num_items, cfg.world.num_days,
              cfg.world.sessions_per_day, log.impressions.size());
  return kExitOk;
}

int cmd_train(const AppConfig& cfg, const std::string& mode_name,
              const std::string& out_override) {
  const FeatureMode mode = feature_mode_from_name(mode_name);
  const SessionLog full = read_session_log(cfg.paths.logs_dir);
  if (full.impressions.empty()) raise(ErrorKind::EmptyLog, "no logged days");

  const int cut = holdout_cut_day(full, cfg.eval.holdout_days);
  const SessionLog train_log = filter_days(full, 0, cut);
  if (train_log.impressions.empty()) {
    raise(ErrorKind::EmptyLog, "holdout leaves no training days");
  }

  TrainConfig train_cfg = cfg.train;
  train_cfg.objective_task = cfg.eval.objective_task;
  const TrainResult result = train(train_log, train_cfg, mode);

  const std::string model_path =
      !out_override.empty()
          ? out_override
          : (mode == FeatureMode::baseline ? cfg.paths.model_baseline
                                           : cfg.paths.model_contextual);
  save_model(result.model, model_path);

  fs::create_directories(cfg.paths.reports_dir);
  const std::string csv_path =
      (fs::path(cfg.paths.reports_dir) /
       ("ne_trajectory_" + std::string(feature_mode_name(mode)) + ".csv"))
          .string();
  std::ofstream csv = must_open(csv_path);
  csv << "day,ne\n";
  char buf[64];
  for (const auto& [day, ne] : result.day_ne) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g\n", day, ne);
    csv << buf;
  }

  std::printf("trained %s model on days [0, %d): input_dim %d, %zu impressions -> %s\n",
              feature_mode_name(mode), cut, result.model.input_dim,
              train_log.impressions.size(), model_path.c_str());
  return kExitOk;
}

struct HoldoutPredictions {
  Vec similarity;
  Vec predictions;
  std::vector<int> labels;
  std::vector<int> days;
};

HoldoutPredictions predict_holdout(const SessionLog& holdout,
                                   const ScorerModel& model, int task) {
  std::vector<Vec> rows;
  rows.reserve(holdout.impressions.size());
  for (const Impression& imp : holdout.impressions) {
    rows.push_back(model_input_row(imp, model.mode));
  }
  std::vector<Vec> probs;
  forward_batch(model, rows, probs);

  HoldoutPredictions out;
  out.similarity.reserve(rows.size());
  out.predictions.reserve(rows.size());
  for (std::size_t i = 0; i < holdout.impressions.size(); ++i) {
    const Impression& imp = holdout.impressions[i];
    out.similarity.push_back(imp.similarity_score);
    out.predictions.push_back(probs[i][static_cast<std::size_t>(task)]);
    out.labels.push_back(imp.labels[static_cast<std::size_t>(task)]);
    out.days.push_back(imp.day);
  }
  return out;
}

std::vector<std::pair<int, double>> per_day_ne(const HoldoutPredictions& p) {
  std::map<int, std::pair<Vec, std::vector<int>>> by_day;
  for (std::size_t i = 0; i < p.predictions.size(); ++i) {
    auto& slot = by_day[p.days[i]];
    slot.first.push_back(p.predictions[i]);
    slot.second.push_back(p.labels[i]);
  }
  std::vector<std::pair<int, double>> out;
  for (const auto& [day, slot] : by_day) {
    try {
      out.emplace_back(day, normalized_entropy(slot.first, slot.second));
    } catch (const Error&) {
      // single-class day: skip the point
    }
  }
  return out;
}

std::vector<Feed> feeds_from_log(const SessionLog& holdout,
                                 const std::vector<Item>& corpus,
                                 const std::vector<UserProfile>& users) {
  std::map<std::string, const Item*> item_by_id;
  for (const Item& item : corpus) item_by_id[item.id] = &item;
  std::map<std::string, const UserProfile*> user_by_id;
  for (const UserProfile& user : users) user_by_id[user.id] = &user;

  std::vector<Feed> feeds;
  std::string current;
  std::vector<Item> items;
  const UserProfile* user = nullptr;
  auto flush = [&]() {
    if (!items.empty() && user != nullptr) {
      feeds.push_back(make_feed(*user, std::move(items)));
    }
    items.clear();
  };
  for (const Impression& imp : holdout.impressions) {
    if (imp.session_id != current) {
      flush();
      current = imp.session_id;
      auto uit = user_by_id.find(imp.user_id);
      if (uit == user_by_id.end()) {
        raise(ErrorKind::IoError, "log user '" + imp.user_id + "' not in users file");
      }
      user = uit->second;
    }
    auto iit = item_by_id.find(imp.item_id);
    if (iit == item_by_id.end()) {
      raise(ErrorKind::IoError, "log item '" + imp.item_id + "' not in corpus");
    }
    Item item = *iit->second;
    item.main_score = imp.pointwise.size() > 1 ? imp.pointwise[1] : item.main_score;
    items.push_back(std::move(item));
  }
  flush();
  return feeds;
}

int cmd_eval(const AppConfig& cfg) {
  const SessionLog full = read_session_log(cfg.paths.logs_dir);
  if (full.impressions.empty()) raise(ErrorKind::EmptyLog, "no logged days");
  const int cut = holdout_cut_day(full, cfg.eval.holdout_days);
  const SessionLog holdout = filter_days(full, cut, cut + cfg.eval.holdout_days);
  if (holdout.impressions.empty()) {
    raise(ErrorKind::EmptyLog, "holdout window is empty");
  }

  const ScorerModel baseline = load_model(cfg.paths.model_baseline);
  const ScorerModel contextual = load_model(cfg.paths.model_contextual);
  const int task = cfg.eval.objective_task;

  const HoldoutPredictions base_pred = predict_holdout(holdout, baseline, task);
  const HoldoutPredictions ctx_pred = predict_holdout(holdout, contextual, task);

  const std::vector<double> edges = uniform_bucket_edges(cfg.eval.num_buckets);
  const CalibrationReport base_cal = calibration_by_bucket(
      base_pred.similarity, base_pred.predictions, base_pred.labels, edges);
  const CalibrationReport ctx_cal = calibration_by_bucket(
      ctx_pred.similarity, ctx_pred.predictions, ctx_pred.labels, edges);

  long positives = 0;
  for (int y : base_pred.labels) positives += y;
  const double ctr =
      static_cast<double>(positives) / static_cast<double>(base_pred.labels.size());

  NEReport base_ne;
  base_ne.model_name = "baseline";
  base_ne.ne = normalized_entropy(base_pred.predictions, base_pred.labels);
  base_ne.background_ctr = ctr;
  base_ne.per_day = per_day_ne(base_pred);

  NEReport ctx_ne;
  ctx_ne.model_name = "contextual";
  ctx_ne.ne = normalized_entropy(ctx_pred.predictions, ctx_pred.labels);
  ctx_ne.background_ctr = ctr;
  ctx_ne.per_day = per_day_ne(ctx_pred);
  ctx_ne.baseline_name = "baseline";
  ctx_ne.improvement_vs_baseline_pct =
      100.0 * (base_ne.ne - ctx_ne.ne) / base_ne.ne;

  const std::vector<Item> corpus = read_corpus(cfg.paths.corpus, cfg.world.dim);
  const std::vector<UserProfile> users = read_users(cfg.paths.users, cfg.world.dim);
  World world;
  world.cfg = cfg.world;
  world.items = corpus;
  world.users = users;

  const std::vector<Feed> feeds = feeds_from_log(holdout, corpus, users);

  RerankParams params = cfg.rerank;
  const FeatureConfig feature_cfg = cfg.features;
  const double mmr_lambda = cfg.eval.mmr_lambda;
  std::vector<std::pair<std::string, Ranker>> rankers;
  rankers.emplace_back("pointwise", [](const Feed& feed) { return feed.items; });
  rankers.emplace_back("mmr", [&](const Feed& feed) {
    return mmr_rerank(feed, mmr_lambda, params.context_depth);
  });
  rankers.emplace_back("contextual", [&](const Feed& feed) {
    return rerank_feed(feed, contextual, params, feature_cfg, task).order;
  });
  const RankerComparison comparison = compare_rankers(world, feeds, rankers, task);

  fs::create_directories(cfg.paths.reports_dir);
  const fs::path reports(cfg.paths.reports_dir);
  must_open((reports / "calibration_baseline.json").string())
      << calibration_report_json(base_cal);
  must_open((reports / "calibration_baseline.csv").string())
      << calibration_report_csv(base_cal);
  must_open((reports / "calibration_contextual.json").string())
      << calibration_report_json(ctx_cal);
  must_open((reports / "calibration_contextual.csv").string())
      << calibration_report_csv(ctx_cal);
  must_open((reports / "ne_baseline.json").string()) << ne_report_json(base_ne);
  must_open((reports / "ne_contextual.json").string()) << ne_report_json(ctx_ne);
  must_open((reports / "ranker_comparison.json").string())
      << comparison_json(comparison);
  must_open((reports / "ranker_comparison.txt").string())
      << comparison_table(comparison);

  std::printf("holdout days [%d, %d): %zu impressions, background CTR %.4f\n",
              cut, cut + cfg.eval.holdout_days, holdout.impressions.size(), ctr);
  std::printf("NE baseline %.6f, contextual %.6f (%.2f%% improvement)\n",
              base_ne.ne, ctx_ne.ne, *ctx_ne.improvement_vs_baseline_pct);
  std::fputs(comparison_table(comparison).c_str(), stdout);
  return kExitOk;
}

int cmd_rerank_file(const AppConfig& cfg, const std::string& model_path,
                    const std::string& input_path, const std::string& user_path,
                    const std::string& out_path) {
  const ScorerModel scorer = load_model(model_path);

  std::ifstream user_in(user_path);
  if (!user_in) raise(ErrorKind::IoError, "cannot read '" + user_path + "'");
  nlohmann::json ju = nlohmann::json::parse(user_in, nullptr, false);
  if (ju.is_discarded()) raise(ErrorKind::IoError, "malformed user file");
  UserProfile user;
  user.id = ju.at("id").get<std::string>();
  user.interest_embedding = ju.at("embedding").get<Vec>();
  const int dim = static_cast<int>(user.interest_embedding.size());
  user = std::move(validate_users({std::move(user)}, dim).front());

  const std::vector<Item> items = read_corpus(input_path, dim);
  const Feed feed = make_feed(user, items);
  const RerankResult result = rerank_feed(feed, scorer, cfg.rerank,
                                          cfg.features, cfg.eval.objective_task);

  nlohmann::json out;
  nlohmann::json order = nlohmann::json::array();
  for (const Item& item : result.order) order.push_back(item.id);
  out["order"] = std::move(order);
  out["scores"] = result.scores;
  const std::string text = out.dump(2) + "\n";
  if (out_path.empty() || out_path == "-") {
    std::fputs(text.c_str(), stdout);
  } else {
    must_open(out_path) << text;
  }
  return kExitOk;
}

int cmd_serve(const AppConfig& cfg, const std::string& model_path) {
  const ScorerModel scorer = load_model(model_path.empty()
                                            ? cfg.paths.model_contextual
                                            : model_path);
  serve_rerank(std::cin, std::cout, scorer, cfg);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contextual feed re-ranking pipeline"};
  app.allow_extras();

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file")
      ->envname("FEEDRANK_CONFIG");

  auto* sim = app.add_subcommand("simulate", "generate world and session logs");
  sim->allow_extras();

  auto* tr = app.add_subcommand("train", "train a scorer on the logged days");
  tr->allow_extras();
  std::string mode = "baseline";
  std::string train_out;
  tr->add_option("--mode", mode, "baseline | contextual")->required();
  tr->add_option("--out", train_out, "model output path override");

  auto* ev = app.add_subcommand("eval", "evaluate models on the holdout days");
  ev->allow_extras();

  auto* rf = app.add_subcommand("rerank-file", "re-rank one feed file");
  rf->allow_extras();
  std::string rf_model, rf_input, rf_user, rf_out;
  rf->add_option("--model", rf_model, "contextual model file")->required();
  rf->add_option("--input", rf_input, "candidate items, JSON lines")->required();
  rf->add_option("--user", rf_user, "user profile JSON file")->required();
  rf->add_option("--out", rf_out, "output path (default stdout)");

  auto* sv = app.add_subcommand("serve", "line-delimited JSON service loop");
  sv->allow_extras();
  std::string sv_model;
  sv->add_option("--model", sv_model, "contextual model file");

  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    AppConfig cfg = config_path.empty() ? default_config()
                                        : load_config(config_path);
    std::vector<std::string> overrides = app.remaining();
    for (CLI::App* sub : {sim, tr, ev, rf, sv}) {
      for (const std::string& extra : sub->remaining()) overrides.push_back(extra);
    }
    apply_config_overrides(cfg, overrides);
    cfg.paths.resolve();

    if (sim->parsed()) return cmd_simulate(cfg);
    if (tr->parsed()) return cmd_train(cfg, mode, train_out);
    if (ev->parsed()) return cmd_eval(cfg);
    if (rf->parsed()) return cmd_rerank_file(cfg, rf_model, rf_input, rf_user, rf_out);
    if (sv->parsed()) return cmd_serve(cfg, sv_model);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == ErrorKind::InvalidConfig || e.kind() == ErrorKind::BadEdges
               ? kExitConfigError
               : kExitDataError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDataError;
  }
  return kExitOk;
}
