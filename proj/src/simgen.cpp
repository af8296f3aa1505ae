#include "feedrank/simgen.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "feedrank/features.hpp"
#include "feedrank/rng.hpp"

namespace feedrank {

namespace {

constexpr int kDiagnosticWindow = 5;  // previous-5 window of the similarity diagnostic

void validate(const WorldConfig& cfg) {
  if (cfg.num_users < 1 || cfg.num_items < 1 || cfg.dim < 1 ||
      cfg.num_topics < 1 || cfg.feed_length < 1 || cfg.num_days < 1 ||
      cfg.sessions_per_day < 0 || cfg.tasks < 1 || cfg.context_depth < 1) {
    raise(ErrorKind::InvalidConfig, "world sizes must be positive");
  }
  if (cfg.feed_length > cfg.num_items) {
    raise(ErrorKind::InvalidConfig,
          "feed_length exceeds the number of items");
  }
  if (cfg.beta_fraction < 0.0 || cfg.beta_fraction > 1.0 ||
      cfg.label_noise < 0.0 || cfg.label_noise > 1.0 ||
      cfg.candidate_topic_bias < 0.0 || cfg.candidate_topic_bias > 1.0) {
    raise(ErrorKind::InvalidConfig, "fractions must lie in [0, 1]");
  }
  if (cfg.beta_hi < 0.0) {
    raise(ErrorKind::InvalidConfig, "beta_hi must be non-negative");
  }
}

Vec random_unit(Rng& rng, int dim) {
  Vec v(static_cast<std::size_t>(dim));
  for (double& x : v) x = rng.normal();
  const double norm = l2_norm(v);
  for (double& x : v) x /= norm;
  return v;
}

// center + a uniform-in-ball perturbation of radius `spread`, renormalized.
// Bounded support keeps cross-topic similarities inside a hard band instead
// of leaving thin gaussian tails across the similarity axis.
Vec scattered_unit(Rng& rng, const Vec& center, double spread) {
  Vec noise(center.size());
  for (double& x : noise) x = rng.normal();
  const double noise_norm = l2_norm(noise);
  const double radius =
      spread * std::pow(rng.uniform(), 1.0 / static_cast<double>(center.size()));
  Vec v(center.size());
  for (std::size_t d = 0; d < v.size(); ++d) {
    v[d] = center[d] + radius * noise[d] / noise_norm;
  }
  const double norm = l2_norm(v);
  for (double& x : v) x /= norm;
  return v;
}

std::string padded_id(char prefix, int n) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%c%06d", prefix, n);
  return buf;
}

}  // namespace

GroundTruth ground_truth(const WorldConfig& cfg) {
  return GroundTruth{cfg.affinity_scale, cfg.engagement_bias};
}

double GroundTruth::prob_with_similarity(const UserProfile& user,
                                         const Item& item, double avg_sim,
                                         int task) const {
  const double affinity = dot(user.interest_embedding, item.embedding);
  if (task == 0) {
    return sigmoid(affinity_scale * affinity -
                   user.diversity_sensitivity * avg_sim + bias);
  }
  // Secondary engagement events: damped affinity, no context term.
  return sigmoid(0.8 * affinity_scale * affinity + bias - 0.25 * task);
}

double GroundTruth::prob(const UserProfile& user, const Item& item,
                         const FeedContext& context, int task) const {
  const double avg_sim =
      task == 0 ? avg_similarity(item, context, kDiagnosticWindow) : 0.0;
  return prob_with_similarity(user, item, avg_sim, task);
}

World generate_world(const WorldConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);

  // Orthonormal topic centroids (Gram-Schmidt over seeded gaussians) while
  // dimensionality allows, so cross-topic similarity concentrates near zero
  // and the similarity axis separates cleanly by shared-topic count.
  std::vector<Vec> centroids;
  centroids.reserve(static_cast<std::size_t>(cfg.num_topics));
  for (int t = 0; t < cfg.num_topics; ++t) {
    Vec v = random_unit(rng, cfg.dim);
    if (t < cfg.dim) {
      for (const Vec& prev : centroids) {
        const double proj = dot(v, prev);
        for (int d = 0; d < cfg.dim; ++d) v[static_cast<std::size_t>(d)] -= proj * prev[static_cast<std::size_t>(d)];
      }
      const double norm = l2_norm(v);
      if (norm > 1e-9) {
        for (double& x : v) x /= norm;
      }
    }
    centroids.push_back(std::move(v));
  }

  World world;
  world.cfg = cfg;

  world.items.reserve(static_cast<std::size_t>(cfg.num_items));
  for (int i = 0; i < cfg.num_items; ++i) {
    Item item;
    item.id = padded_id('v', i);
    item.topic = i % cfg.num_topics;
    item.embedding = scattered_unit(
        rng, centroids[static_cast<std::size_t>(item.topic)], cfg.topic_spread);
    world.items.push_back(std::move(item));
  }

  world.users.reserve(static_cast<std::size_t>(cfg.num_users));
  for (int u = 0; u < cfg.num_users; ++u) {
    UserProfile user;
    user.id = padded_id('u', u);
    const int preferred = rng.uniform_int(cfg.num_topics);
    user.interest_embedding = scattered_unit(
        rng, centroids[static_cast<std::size_t>(preferred)], cfg.user_spread);
    user.diversity_sensitivity =
        rng.bernoulli(cfg.beta_fraction) ? cfg.beta_hi : 0.0;
    world.users.push_back(std::move(user));
  }

  // Corpus main_score: the marginal engagement proxy used when a feed file is
  // ranked without a session-specific main pass.
  for (Item& item : world.items) {
    double mean_affinity = 0.0;
    for (const UserProfile& user : world.users) {
      mean_affinity += dot(user.interest_embedding, item.embedding);
    }
    mean_affinity /= cfg.num_users;
    item.main_score =
        sigmoid(cfg.affinity_scale * mean_affinity + cfg.engagement_bias);
  }

  return world;
}

namespace {

std::vector<Impression> simulate_one_session(
    const World& world, const GroundTruth& truth,
    const std::vector<std::vector<int>>& topic_items, int day,
    int global_session) {
  const WorldConfig& cfg = world.cfg;
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(global_session)));

  const UserProfile& user =
      world.users[static_cast<std::size_t>(rng.uniform_int(cfg.num_users))];

  // The user's behaviorally dominant topic, used for biased retrieval.
  int best_topic = 0;
  if (cfg.candidate_topic_bias > 0.0) {
    double best_affinity = -2.0;
    for (const Item& item : world.items) {
      const double a = dot(user.interest_embedding, item.embedding);
      if (a > best_affinity) {
        best_affinity = a;
        best_topic = item.topic;
      }
    }
  }
  const std::vector<int>& preferred_pool =
      topic_items[static_cast<std::size_t>(best_topic)];

  // K distinct candidates; each slot comes from the preferred-topic pool with
  // probability candidate_topic_bias, otherwise from the whole corpus.
  std::vector<bool> used(static_cast<std::size_t>(cfg.num_items), false);
  std::vector<Item> feed_items;
  feed_items.reserve(static_cast<std::size_t>(cfg.feed_length));
  int picked = 0;
  while (picked < cfg.feed_length) {
    int candidate = -1;
    const bool biased = cfg.candidate_topic_bias > 0.0 &&
                        rng.bernoulli(cfg.candidate_topic_bias);
    for (int attempt = 0; attempt < 64; ++attempt) {
      const int idx = biased
                          ? preferred_pool[static_cast<std::size_t>(
                                rng.uniform_int(static_cast<int>(preferred_pool.size())))]
                          : rng.uniform_int(cfg.num_items);
      if (!used[static_cast<std::size_t>(idx)]) {
        candidate = idx;
        break;
      }
    }
    if (candidate < 0) {
      // Pool nearly exhausted: take the first unused item.
      for (int idx = 0; idx < cfg.num_items; ++idx) {
        if (!used[static_cast<std::size_t>(idx)]) {
          candidate = idx;
          break;
        }
      }
    }
    used[static_cast<std::size_t>(candidate)] = true;
    feed_items.push_back(world.items[static_cast<std::size_t>(candidate)]);
    ++picked;
  }

  // Main ranking pass: noisy point-wise affinity mapped through a sigmoid.
  for (Item& item : feed_items) {
    const double affinity = dot(user.interest_embedding, item.embedding);
    item.main_score = sigmoid(cfg.affinity_scale * affinity +
                              cfg.engagement_bias +
                              cfg.main_score_noise * rng.normal());
  }
  std::stable_sort(feed_items.begin(), feed_items.end(),
                   [](const Item& a, const Item& b) {
                     return a.main_score > b.main_score;
                   });

  FeatureConfig feature_cfg;
  feature_cfg.context_depth = cfg.context_depth;
  feature_cfg.feed_length = cfg.feed_length;

  std::vector<Impression> impressions;
  impressions.reserve(feed_items.size());
  FeedContext ctx;
  ctx.depth = cfg.context_depth;
  const std::string session_id = padded_id('s', global_session);

  for (int pos = 0; pos < static_cast<int>(feed_items.size()); ++pos) {
    const Item& item = feed_items[static_cast<std::size_t>(pos)];

    Impression imp;
    imp.session_id = session_id;
    imp.day = day;
    imp.user_id = user.id;
    imp.item_id = item.id;
    imp.position = pos;
    imp.pointwise = pointwise_features(user, item, cfg.num_topics);
    imp.contextual = extract_contextual(item, ctx, pos, feature_cfg).as_array();
    imp.similarity_score = avg_similarity(item, ctx, kDiagnosticWindow);

    imp.labels.resize(static_cast<std::size_t>(cfg.tasks));
    for (int t = 0; t < cfg.tasks; ++t) {
      const double p = truth.prob_with_similarity(
          user, item, t == 0 ? imp.similarity_score : 0.0, t);
      int label = rng.bernoulli(p) ? 1 : 0;
      if (cfg.label_noise > 0.0 && rng.bernoulli(cfg.label_noise)) {
        label = 1 - label;
      }
      imp.labels[static_cast<std::size_t>(t)] = label;
    }

    impressions.push_back(std::move(imp));
    ctx.push(feed_items[static_cast<std::size_t>(pos)]);
  }
  return impressions;
}

}  // namespace

SessionLog simulate_sessions(const World& world, ExecMode exec) {
  const WorldConfig& cfg = world.cfg;
  validate(cfg);
  const GroundTruth truth = ground_truth(cfg);

  std::vector<std::vector<int>> topic_items(static_cast<std::size_t>(cfg.num_topics));
  for (int i = 0; i < cfg.num_items; ++i) {
    topic_items[static_cast<std::size_t>(world.items[static_cast<std::size_t>(i)].topic)].push_back(i);
  }
  for (const std::vector<int>& pool : topic_items) {
    if (pool.empty() && cfg.candidate_topic_bias > 0.0) {
      raise(ErrorKind::InvalidConfig, "a topic has no items to retrieve from");
    }
  }

  const std::size_t total_sessions =
      static_cast<std::size_t>(cfg.num_days) *
      static_cast<std::size_t>(cfg.sessions_per_day);
  std::vector<std::vector<Impression>> per_session(total_sessions);

  parallel_for(total_sessions, exec, [&](std::size_t g) {
    const int day = static_cast<int>(g) / cfg.sessions_per_day;
    per_session[g] =
        simulate_one_session(world, truth, topic_items, day, static_cast<int>(g));
  });

  SessionLog log;
  log.meta.dim = cfg.dim;
  log.meta.tasks = cfg.tasks;
  log.meta.context_depth = cfg.context_depth;
  log.meta.feed_length = cfg.feed_length;
  log.meta.num_topics = cfg.num_topics;
  log.meta.seed = cfg.seed;
  log.impressions.reserve(total_sessions *
                          static_cast<std::size_t>(cfg.feed_length));
  for (std::vector<Impression>& session : per_session) {
    for (Impression& imp : session) log.impressions.push_back(std::move(imp));
  }
  return log;
}

double expected_slate_engagement(const WorldConfig& cfg,
                                 const UserProfile& user,
                                 const std::vector<Item>& ordering, int task) {
  const GroundTruth truth = ground_truth(cfg);
  FeedContext ctx;
  ctx.depth = kDiagnosticWindow;
  CompensatedSum total;
  for (const Item& item : ordering) {
    total.add(truth.prob(user, item, ctx, task));
    ctx.push(item);
  }
  return total.value();
}

}  // namespace feedrank
