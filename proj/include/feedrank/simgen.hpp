#pragma once

#include <cstdint>
#include <vector>

#include "feedrank/domain.hpp"
#include "feedrank/parallel.hpp"

namespace feedrank {

struct WorldConfig {
  int num_users = 200;
  int num_items = 500;
  int dim = 16;          // embedding dimensionality D
  int num_topics = 8;
  int sessions_per_day = 200;
  int num_days = 24;
  int feed_length = 10;  // K
  int tasks = 2;         // T engagement events; task 0 carries the fatigue term
  int context_depth = 5; // k used when logging contextual features

  double affinity_scale = 3.0;    // alpha
  double engagement_bias = 0.0;   // b0
  double beta_hi = 4.0;           // fatigue strength of the sensitive segment
  double beta_fraction = 0.5;     // q: fraction of users drawn with beta = beta_hi
  double label_noise = 0.0;       // probability of flipping a sampled label
  double main_score_noise = 0.25; // logit noise of the main ranking pass
  double topic_spread = 0.35;     // item scatter around topic centroids
  double user_spread = 0.35;      // user scatter around their preferred centroid
  // Probability that a candidate slot is drawn from the user's best topic
  // instead of the whole corpus, mimicking preference-biased retrieval.
  double candidate_topic_bias = 0.0;

  std::uint64_t seed = 1;
};

struct World {
  WorldConfig cfg;
  std::vector<UserProfile> users;
  std::vector<Item> items;
};

// Ground-truth engagement probability:
//   task 0:  sigmoid(alpha * dot(user, item) - beta_user * avg_sim + b0)
// Secondary tasks are context free with a damped affinity slope, so only the
// primary event carries similarity fatigue.
struct GroundTruth {
  double affinity_scale = 3.0;
  double bias = 0.0;

  double prob_with_similarity(const UserProfile& user, const Item& item,
                              double avg_sim, int task) const;
  double prob(const UserProfile& user, const Item& item,
              const FeedContext& context, int task) const;
};

GroundTruth ground_truth(const WorldConfig& cfg);

// Seeded, reproducible world. Item embeddings scatter around per-topic
// centroids so same-topic items are similar; users scatter around a preferred
// topic so the main pass stacks similar items.
World generate_world(const WorldConfig& cfg);

// One SessionLog covering cfg.num_days days. Sessions use per-session derived
// seeds, so parallel generation emits the same bytes as serial.
SessionLog simulate_sessions(const World& world,
                             ExecMode exec = ExecMode::parallel);

// Ground-truth slate value: sum over positions of the primary-event
// probability given the true context of the items above. The oracle used to
// compare rankers.
double expected_slate_engagement(const WorldConfig& cfg,
                                 const UserProfile& user,
                                 const std::vector<Item>& ordering,
                                 int task = 0);

}  // namespace feedrank
