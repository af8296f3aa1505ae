#include "feedrank/config.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace feedrank {

void PathsConfig::resolve() {
  const fs::path base(out_dir);
  auto fill = [&](std::string& field, const char* name) {
    if (field.empty()) field = (base / name).string();
  };
  fill(corpus, "corpus.jsonl");
  fill(users, "users.jsonl");
  fill(logs_dir, "logs");
  fill(model_baseline, "model_baseline.json");
  fill(model_contextual, "model_contextual.json");
  fill(reports_dir, "reports");
}

AppConfig default_config() { return AppConfig{}; }

namespace {

void get_if(const json& j, const char* key, auto& out) {
  if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
}

void parse_paths(const json& j, PathsConfig& p) {
  get_if(j, "out_dir", p.out_dir);
  get_if(j, "corpus", p.corpus);
  get_if(j, "users", p.users);
  get_if(j, "logs_dir", p.logs_dir);
  get_if(j, "model_baseline", p.model_baseline);
  get_if(j, "model_contextual", p.model_contextual);
  get_if(j, "reports_dir", p.reports_dir);
}

void parse_world(const json& j, WorldConfig& w) {
  get_if(j, "num_users", w.num_users);
  get_if(j, "num_items", w.num_items);
  get_if(j, "dim", w.dim);
  get_if(j, "num_topics", w.num_topics);
  get_if(j, "sessions_per_day", w.sessions_per_day);
  get_if(j, "num_days", w.num_days);
  get_if(j, "feed_length", w.feed_length);
  get_if(j, "tasks", w.tasks);
  get_if(j, "context_depth", w.context_depth);
  get_if(j, "affinity_scale", w.affinity_scale);
  get_if(j, "engagement_bias", w.engagement_bias);
  get_if(j, "beta_hi", w.beta_hi);
  get_if(j, "beta_fraction", w.beta_fraction);
  get_if(j, "label_noise", w.label_noise);
  get_if(j, "main_score_noise", w.main_score_noise);
  get_if(j, "topic_spread", w.topic_spread);
  get_if(j, "user_spread", w.user_spread);
  get_if(j, "candidate_topic_bias", w.candidate_topic_bias);
  get_if(j, "seed", w.seed);
}

void parse_train(const json& j, TrainConfig& t) {
  get_if(j, "learning_rate", t.learning_rate);
  get_if(j, "batch_size", t.batch_size);
  get_if(j, "beta1", t.beta1);
  get_if(j, "beta2", t.beta2);
  get_if(j, "epsilon", t.epsilon);
  get_if(j, "lr_schedule", t.lr_schedule);
  get_if(j, "initial_window_days", t.initial_window_days);
  get_if(j, "single_pass", t.single_pass);
  get_if(j, "passes", t.passes);
  get_if(j, "hidden_dims", t.hidden_dims);
  get_if(j, "objective_task", t.objective_task);
  get_if(j, "seed", t.seed);
}

void parse_features(const json& j, FeatureConfig& f) {
  get_if(j, "context_depth", f.context_depth);
  get_if(j, "missing_context_fill", f.missing_context_fill);
}

void parse_rerank(const json& j, RerankParams& r) {
  get_if(j, "window", r.window);
  get_if(j, "context_depth", r.context_depth);
  get_if(j, "page_size", r.page_size);
}

void parse_eval(const json& j, EvalConfig& e) {
  get_if(j, "num_buckets", e.num_buckets);
  get_if(j, "holdout_days", e.holdout_days);
  get_if(j, "objective_task", e.objective_task);
  get_if(j, "mmr_lambda", e.mmr_lambda);
  get_if(j, "min_bucket_count", e.min_bucket_count);
}

void parse_service(const json& j, ServiceConfig& s) {
  get_if(j, "session_idle_limit", s.session_idle_limit);
}

AppConfig from_json_doc(const json& doc) {
  AppConfig cfg;
  try {
    if (doc.contains("paths")) parse_paths(doc.at("paths"), cfg.paths);
    if (doc.contains("world")) parse_world(doc.at("world"), cfg.world);
    if (doc.contains("train")) parse_train(doc.at("train"), cfg.train);
    if (doc.contains("features")) parse_features(doc.at("features"), cfg.features);
    if (doc.contains("rerank")) parse_rerank(doc.at("rerank"), cfg.rerank);
    if (doc.contains("eval")) parse_eval(doc.at("eval"), cfg.eval);
    if (doc.contains("service")) parse_service(doc.at("service"), cfg.service);
  } catch (const json::exception& e) {
    raise(ErrorKind::InvalidConfig, std::string("bad config value: ") + e.what());
  }

  if (cfg.eval.num_buckets < 1 || cfg.eval.holdout_days < 0 ||
      cfg.eval.objective_task < 0 || cfg.eval.mmr_lambda < 0.0 ||
      cfg.eval.mmr_lambda > 1.0) {
    raise(ErrorKind::InvalidConfig, "bad eval section");
  }
  if (cfg.rerank.window < 1 || cfg.rerank.page_size < 1 ||
      cfg.rerank.context_depth < 1) {
    raise(ErrorKind::InvalidConfig, "bad rerank section");
  }
  if (cfg.features.context_depth < 1) {
    raise(ErrorKind::InvalidConfig, "bad features section");
  }
  if (cfg.train.learning_rate < 0.0 || cfg.train.batch_size < 1) {
    raise(ErrorKind::InvalidConfig, "bad train section");
  }
  return cfg;
}

json to_json_doc(const AppConfig& cfg) {
  json doc;
  doc["paths"] = {{"out_dir", cfg.paths.out_dir},
                  {"corpus", cfg.paths.corpus},
                  {"users", cfg.paths.users},
                  {"logs_dir", cfg.paths.logs_dir},
                  {"model_baseline", cfg.paths.model_baseline},
                  {"model_contextual", cfg.paths.model_contextual},
                  {"reports_dir", cfg.paths.reports_dir}};
  doc["world"] = {{"num_users", cfg.world.num_users},
                  {"num_items", cfg.world.num_items},
                  {"dim", cfg.world.dim},
                  {"num_topics", cfg.world.num_topics},
                  {"sessions_per_day", cfg.world.sessions_per_day},
                  {"num_days", cfg.world.num_days},
                  {"feed_length", cfg.world.feed_length},
                  {"tasks", cfg.world.tasks},
                  {"context_depth", cfg.world.context_depth},
                  {"affinity_scale", cfg.world.affinity_scale},
                  {"engagement_bias", cfg.world.engagement_bias},
                  {"beta_hi", cfg.world.beta_hi},
                  {"beta_fraction", cfg.world.beta_fraction},
                  {"label_noise", cfg.world.label_noise},
                  {"main_score_noise", cfg.world.main_score_noise},
                  {"topic_spread", cfg.world.topic_spread},
                  {"user_spread", cfg.world.user_spread},
                  {"candidate_topic_bias", cfg.world.candidate_topic_bias},
                  {"seed", cfg.world.seed}};
  doc["train"] = {{"learning_rate", cfg.train.learning_rate},
                  {"batch_size", cfg.train.batch_size},
                  {"beta1", cfg.train.beta1},
                  {"beta2", cfg.train.beta2},
                  {"epsilon", cfg.train.epsilon},
                  {"lr_schedule", cfg.train.lr_schedule},
                  {"initial_window_days", cfg.train.initial_window_days},
                  {"single_pass", cfg.train.single_pass},
                  {"passes", cfg.train.passes},
                  {"hidden_dims", cfg.train.hidden_dims},
                  {"objective_task", cfg.train.objective_task},
                  {"seed", cfg.train.seed}};
  doc["features"] = {{"context_depth", cfg.features.context_depth},
                     {"missing_context_fill", cfg.features.missing_context_fill}};
  doc["rerank"] = {{"window", cfg.rerank.window},
                   {"context_depth", cfg.rerank.context_depth},
                   {"page_size", cfg.rerank.page_size}};
  doc["eval"] = {{"num_buckets", cfg.eval.num_buckets},
                 {"holdout_days", cfg.eval.holdout_days},
                 {"objective_task", cfg.eval.objective_task},
                 {"mmr_lambda", cfg.eval.mmr_lambda},
                 {"min_bucket_count", cfg.eval.min_bucket_count}};
  doc["service"] = {{"session_idle_limit", cfg.service.session_idle_limit}};
  return doc;
}

}  // namespace

AppConfig parse_config_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    raise(ErrorKind::InvalidConfig, "config is not a JSON object");
  }
  return from_json_doc(doc);
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::InvalidConfig, "cannot read config '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config_json(text);
}

void apply_config_overrides(AppConfig& cfg,
                            const std::vector<std::string>& overrides) {
  if (overrides.empty()) return;
  json doc = to_json_doc(cfg);

  for (const std::string& raw : overrides) {
    std::string s = raw;
    while (!s.empty() && s.front() == '-') s.erase(s.begin());
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      raise(ErrorKind::InvalidConfig,
            "override '" + raw + "' is not of the form key.path=value");
    }
    const std::string path = s.substr(0, eq);
    const std::string value = s.substr(eq + 1);

    json* node = &doc;
    std::size_t start = 0;
    while (true) {
      const std::size_t dotpos = path.find('.', start);
      const std::string key = path.substr(
          start, dotpos == std::string::npos ? std::string::npos : dotpos - start);
      if (key.empty()) {
        raise(ErrorKind::InvalidConfig, "empty key in override '" + raw + "'");
      }
      if (dotpos == std::string::npos) {
        json parsed = json::parse(value, nullptr, false);
        (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
        break;
      }
      node = &(*node)[key];
      start = dotpos + 1;
    }
  }
  cfg = from_json_doc(doc);
}

std::string config_to_json(const AppConfig& cfg) {
  return to_json_doc(cfg).dump(2) + "\n";
}

}  // namespace feedrank
