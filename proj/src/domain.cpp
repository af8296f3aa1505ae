#include "feedrank/domain.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace feedrank {

namespace {

// Norm exactly within tolerance: leave bits alone so ingestion is idempotent.
constexpr double kNormTolerance = 1e-6;
constexpr double kRenormTolerance = 1e-3;

void normalize_embedding(Vec& e, const std::string& id) {
  double norm = l2_norm(e);
  if (norm == 0.0) {
    raise(ErrorKind::DegenerateEmbedding, "zero embedding for '" + id + "'");
  }
  if (std::abs(norm - 1.0) <= kNormTolerance) return;
  if (std::abs(norm - 1.0) > kRenormTolerance) {
    raise(ErrorKind::DegenerateEmbedding,
          "embedding norm " + std::to_string(norm) + " for '" + id +
              "' is too far from unit to renormalize");
  }
  for (double& x : e) x /= norm;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::IoError, "cannot read '" + path + "'");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::IoError, "cannot write '" + path + "'");
  return out;
}

json parse_line(const std::string& line, const std::string& path, long lineno) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) {
    raise(ErrorKind::IoError,
          "malformed JSON at " + path + ":" + std::to_string(lineno));
  }
  return j;
}

}  // namespace

Feed make_feed(UserProfile user, std::vector<Item> items) {
  std::unordered_set<std::string> seen;
  for (const Item& item : items) {
    if (!seen.insert(item.id).second) {
      raise(ErrorKind::DuplicateId, "feed item '" + item.id + "'");
    }
  }
  std::stable_sort(items.begin(), items.end(),
                   [](const Item& a, const Item& b) {
                     return a.main_score > b.main_score;
                   });
  return Feed{std::move(user), std::move(items)};
}

std::vector<Item> validate_corpus(std::vector<Item> items, int dim) {
  std::unordered_set<std::string> seen;
  for (Item& item : items) {
    if (static_cast<int>(item.embedding.size()) != dim) {
      raise(ErrorKind::DimensionMismatch,
            "item '" + item.id + "' has embedding length " +
                std::to_string(item.embedding.size()) + ", expected " +
                std::to_string(dim));
    }
    normalize_embedding(item.embedding, item.id);
    if (item.main_score < 0.0 || item.main_score > 1.0) {
      raise(ErrorKind::InvalidConfig,
            "item '" + item.id + "' main_score outside [0, 1]");
    }
    if (!seen.insert(item.id).second) {
      raise(ErrorKind::DuplicateId, "item '" + item.id + "'");
    }
  }
  return items;
}

std::vector<UserProfile> validate_users(std::vector<UserProfile> users,
                                        int dim) {
  std::unordered_set<std::string> seen;
  for (UserProfile& user : users) {
    if (static_cast<int>(user.interest_embedding.size()) != dim) {
      raise(ErrorKind::DimensionMismatch,
            "user '" + user.id + "' has embedding length " +
                std::to_string(user.interest_embedding.size()) +
                ", expected " + std::to_string(dim));
    }
    normalize_embedding(user.interest_embedding, user.id);
    if (user.diversity_sensitivity < 0.0) {
      raise(ErrorKind::InvalidConfig,
            "user '" + user.id + "' diversity_sensitivity < 0");
    }
    if (!seen.insert(user.id).second) {
      raise(ErrorKind::DuplicateId, "user '" + user.id + "'");
    }
  }
  return users;
}

std::vector<Item> read_corpus(const std::string& path, int dim) {
  std::ifstream in = open_input(path);
  std::vector<Item> items;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_line(line, path, lineno);
    Item item;
    item.id = j.at("id").get<std::string>();
    item.embedding = j.at("embedding").get<Vec>();
    item.topic = j.at("topic").get<int>();
    item.main_score = j.at("main_score").get<double>();
    items.push_back(std::move(item));
  }
  return validate_corpus(std::move(items), dim);
}

void write_corpus(const std::vector<Item>& items, const std::string& path) {
  std::ofstream out = open_output(path);
  for (const Item& item : items) {
    json j;
    j["id"] = item.id;
    j["embedding"] = item.embedding;
    j["topic"] = item.topic;
    j["main_score"] = item.main_score;
    out << j.dump() << '\n';
  }
}

std::vector<UserProfile> read_users(const std::string& path, int dim) {
  std::ifstream in = open_input(path);
  std::vector<UserProfile> users;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_line(line, path, lineno);
    UserProfile user;
    user.id = j.at("id").get<std::string>();
    user.interest_embedding = j.at("embedding").get<Vec>();
    user.diversity_sensitivity = j.value("diversity_sensitivity", 0.0);
    users.push_back(std::move(user));
  }
  return validate_users(std::move(users), dim);
}

void write_users(const std::vector<UserProfile>& users,
                 const std::string& path) {
  std::ofstream out = open_output(path);
  for (const UserProfile& user : users) {
    json j;
    j["id"] = user.id;
    j["embedding"] = user.interest_embedding;
    j["diversity_sensitivity"] = user.diversity_sensitivity;
    out << j.dump() << '\n';
  }
}

std::string impression_to_json_line(const Impression& imp) {
  json j;
  j["session_id"] = imp.session_id;
  j["day"] = imp.day;
  j["user_id"] = imp.user_id;
  j["item_id"] = imp.item_id;
  j["position"] = imp.position;
  j["pointwise"] = imp.pointwise;
  j["contextual"] = imp.contextual;
  j["labels"] = imp.labels;
  j["similarity_score"] = imp.similarity_score;
  return j.dump();
}

namespace {

std::string day_file_name(int day) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "day_%03d.jsonl", day);
  return buf;
}

Impression impression_from_json(const json& j) {
  Impression imp;
  imp.session_id = j.at("session_id").get<std::string>();
  imp.day = j.at("day").get<int>();
  imp.user_id = j.at("user_id").get<std::string>();
  imp.item_id = j.at("item_id").get<std::string>();
  imp.position = j.at("position").get<int>();
  imp.pointwise = j.at("pointwise").get<Vec>();
  const json& ctx = j.at("contextual");
  if (ctx.size() != imp.contextual.size()) {
    raise(ErrorKind::DimensionMismatch,
          "contextual feature block of length " + std::to_string(ctx.size()));
  }
  for (std::size_t i = 0; i < imp.contextual.size(); ++i) {
    imp.contextual[i] = ctx[i].get<double>();
  }
  imp.labels = j.at("labels").get<std::vector<int>>();
  imp.similarity_score = j.at("similarity_score").get<double>();
  return imp;
}

}  // namespace

void write_session_log(const SessionLog& log, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) raise(ErrorKind::IoError, "cannot create '" + dir + "'");

  json meta;
  meta["dim"] = log.meta.dim;
  meta["tasks"] = log.meta.tasks;
  meta["context_depth"] = log.meta.context_depth;
  meta["feed_length"] = log.meta.feed_length;
  meta["num_topics"] = log.meta.num_topics;
  meta["seed"] = log.meta.seed;
  open_output((fs::path(dir) / "meta.json").string()) << meta.dump(2) << '\n';

  int current_day = -1;
  std::ofstream out;
  for (const Impression& imp : log.impressions) {
    if (imp.day != current_day) {
      current_day = imp.day;
      out = open_output((fs::path(dir) / day_file_name(current_day)).string());
    }
    out << impression_to_json_line(imp) << '\n';
  }
}

SessionLog read_session_log(const std::string& dir) {
  fs::path meta_path = fs::path(dir) / "meta.json";
  std::ifstream meta_in = open_input(meta_path.string());
  json meta = json::parse(meta_in, nullptr, false);
  if (meta.is_discarded()) {
    raise(ErrorKind::IoError, "malformed meta.json in '" + dir + "'");
  }

  SessionLog log;
  log.meta.dim = meta.at("dim").get<int>();
  log.meta.tasks = meta.at("tasks").get<int>();
  log.meta.context_depth = meta.at("context_depth").get<int>();
  log.meta.feed_length = meta.at("feed_length").get<int>();
  log.meta.num_topics = meta.at("num_topics").get<int>();
  log.meta.seed = meta.at("seed").get<std::uint64_t>();

  std::vector<fs::path> day_files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("day_", 0) == 0 && entry.path().extension() == ".jsonl") {
      day_files.push_back(entry.path());
    }
  }
  std::sort(day_files.begin(), day_files.end());

  for (const fs::path& file : day_files) {
    std::ifstream in = open_input(file.string());
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      log.impressions.push_back(
          impression_from_json(parse_line(line, file.string(), lineno)));
    }
  }
  return log;
}

}  // namespace feedrank
