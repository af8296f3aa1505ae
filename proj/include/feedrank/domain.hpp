#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "feedrank/vecmath.hpp"

namespace feedrank {

// One rankable video. Embeddings are unit length so a dot product is a
// cosine similarity bounded in [-1, 1].
struct Item {
  std::string id;
  Vec embedding;           // length D, unit norm
  int topic = 0;           // dense small-integer category
  double main_score = 0.0; // point-wise score from the main ranking pass, in [0, 1]
};

struct UserProfile {
  std::string id;
  Vec interest_embedding;  // length D, unit norm
  // Ground-truth fatigue strength used only by the simulator and the slate
  // oracle. Scoring and re-ranking paths never read it.
  double diversity_sensitivity = 0.0;
};

// An ordered candidate list for one user, descending main_score.
struct Feed {
  UserProfile user;
  std::vector<Item> items;
};

// Stable-sorts descending by main_score and rejects duplicate item ids.
Feed make_feed(UserProfile user, std::vector<Item> items);

// The already-slotted prefix visible above the current slot, most recent
// last. Only the last `depth` items participate in feature extraction.
struct FeedContext {
  std::vector<const Item*> prefix;
  int depth = 5;

  void push(const Item& item) { prefix.push_back(&item); }
  bool empty() const { return prefix.empty(); }
};

struct Impression {
  std::string session_id;
  int day = 0;
  std::string user_id;
  std::string item_id;
  int position = 0;
  Vec pointwise;
  std::array<double, 10> contextual{};  // f1..f10, serving order
  std::vector<int> labels;              // one binary label per task
  double similarity_score = 0.0;        // dot with avg embedding of the previous 5, cached at logging
};

struct LogMeta {
  int dim = 0;
  int tasks = 0;
  int context_depth = 5;
  int feed_length = 0;
  int num_topics = 0;
  std::uint64_t seed = 0;
};

// Impressions grouped by session; positions contiguous from 0 within a
// session; days ascending across the file set.
struct SessionLog {
  LogMeta meta;
  std::vector<Impression> impressions;
};

// Enforces Item invariants. Embeddings within 1e-3 of unit norm are
// re-normalized; already-valid corpora pass through bit-for-bit.
std::vector<Item> validate_corpus(std::vector<Item> items, int dim);
std::vector<UserProfile> validate_users(std::vector<UserProfile> users, int dim);

// JSON-lines file formats.
// Corpus: {"id": str, "embedding": [f64; D], "topic": int, "main_score": f64}
// Users:  {"id": str, "embedding": [f64; D], "diversity_sensitivity": f64}
// Log:    {"session_id", "day", "user_id", "item_id", "position",
//          "pointwise": [..], "contextual": [f1..f10], "labels": [..],
//          "similarity_score"}
std::vector<Item> read_corpus(const std::string& path, int dim);
void write_corpus(const std::vector<Item>& items, const std::string& path);
std::vector<UserProfile> read_users(const std::string& path, int dim);
void write_users(const std::vector<UserProfile>& users, const std::string& path);

// Logs live in a directory: meta.json plus one day_NNN.jsonl per day.
void write_session_log(const SessionLog& log, const std::string& dir);
SessionLog read_session_log(const std::string& dir);

std::string impression_to_json_line(const Impression& imp);

}  // namespace feedrank
