#include "feedrank/reranker.hpp"

#include <algorithm>

namespace feedrank {

namespace {

FeedContext tail_context(const std::vector<Item>& served, int depth) {
  FeedContext ctx;
  ctx.depth = depth;
  const int n = static_cast<int>(served.size());
  const int take = std::min(depth, n);
  ctx.prefix.reserve(static_cast<std::size_t>(take));
  for (int i = n - take; i < n; ++i) ctx.prefix.push_back(&served[i]);
  return ctx;
}

// One greedy slot-filling pass over `remaining`, writing up to `slots` picks.
// `served` doubles as the context source and receives the picks.
void greedy_slots(const UserProfile& user, std::vector<Item>& served,
                  std::vector<Item>& remaining, int slots, int feed_length,
                  const ScorerModel& scorer, const RerankParams& params,
                  const FeatureConfig& cfg, int objective_task,
                  std::vector<Item>& out_order, Vec& out_scores,
                  RerankStats& stats, ExecMode exec) {
  const int num_topics = static_cast<int>(
      scorer.input_dim - kContextualFeatureCount - 2);

  FeatureConfig slot_cfg = cfg;
  slot_cfg.context_depth = params.context_depth;
  slot_cfg.feed_length = feed_length;

  std::vector<Vec> rows;
  std::vector<Vec> probs;
  for (int filled = 0; filled < slots && !remaining.empty(); ++filled) {
    const int window =
        std::min<int>(params.window, static_cast<int>(remaining.size()));
    const int slot_index = static_cast<int>(served.size());
    const FeedContext ctx = tail_context(served, params.context_depth);

    rows.assign(static_cast<std::size_t>(window), Vec{});
    parallel_for(static_cast<std::size_t>(window), exec, [&](std::size_t c) {
      const Item& cand = remaining[c];
      Vec row = pointwise_features(user, cand, num_topics);
      const auto ctx_features =
          extract_contextual(cand, ctx, slot_index, slot_cfg).as_array();
      row.insert(row.end(), ctx_features.begin(), ctx_features.end());
      rows[c] = std::move(row);
    });
    forward_batch(scorer, rows, probs, exec);
    stats.scorer_calls += window;

    int best = 0;
    double best_score = probs[0][static_cast<std::size_t>(objective_task)];
    for (int c = 1; c < window; ++c) {
      const double s = probs[static_cast<std::size_t>(c)][static_cast<std::size_t>(objective_task)];
      if (s > best_score) {  // ties keep the lower main-pass rank
        best_score = s;
        best = c;
      }
    }

    out_order.push_back(remaining[static_cast<std::size_t>(best)]);
    out_scores.push_back(best_score);
    served.push_back(remaining[static_cast<std::size_t>(best)]);
    remaining.erase(remaining.begin() + best);
  }
}

void check_scorer(const ScorerModel& scorer, int objective_task) {
  if (scorer.mode != FeatureMode::contextual) {
    raise(ErrorKind::ModeMismatch,
          "re-ranking requires a contextual-mode scorer");
  }
  if (objective_task < 0 || objective_task >= scorer.task_count) {
    raise(ErrorKind::InvalidConfig,
          "objective task " + std::to_string(objective_task) +
              " outside task count " + std::to_string(scorer.task_count));
  }
}

}  // namespace

RerankResult rerank_feed(const Feed& feed, const ScorerModel& scorer,
                         const RerankParams& params, const FeatureConfig& cfg,
                         int objective_task, ExecMode exec) {
  if (feed.items.empty()) raise(ErrorKind::EmptyFeed, "cannot re-rank");
  check_scorer(scorer, objective_task);

  RerankResult result;
  std::vector<Item> served;
  std::vector<Item> remaining = feed.items;
  served.reserve(feed.items.size());
  greedy_slots(feed.user, served, remaining,
               static_cast<int>(feed.items.size()),
               static_cast<int>(feed.items.size()), scorer, params, cfg,
               objective_task, result.order, result.scores, result.stats,
               exec);
  return result;
}

SessionState make_session_state(const Feed& feed) {
  if (feed.items.empty()) raise(ErrorKind::EmptyFeed, "cannot start session");
  SessionState state;
  state.user = feed.user;
  state.remaining = feed.items;
  state.feed_length = static_cast<int>(feed.items.size());
  return state;
}

PageResult rerank_page(SessionState& state, const ScorerModel& scorer,
                       const RerankParams& params, const FeatureConfig& cfg,
                       int objective_task, ExecMode exec) {
  if (state.exhausted()) {
    raise(ErrorKind::SessionExhausted, "no remaining candidates");
  }
  check_scorer(scorer, objective_task);

  PageResult result;
  greedy_slots(state.user, state.served, state.remaining, params.page_size,
               state.feed_length, scorer, params, cfg, objective_task,
               result.page, result.scores, result.stats, exec);
  result.session_done = state.exhausted();
  return result;
}

std::vector<Item> mmr_rerank(const Feed& feed, double lambda,
                             int context_depth) {
  if (feed.items.empty()) raise(ErrorKind::EmptyFeed, "cannot re-rank");

  std::vector<Item> order;
  std::vector<Item> remaining = feed.items;
  order.reserve(feed.items.size());
  while (!remaining.empty()) {
    const int n = static_cast<int>(order.size());
    const int take = std::min(context_depth, n);

    int best = 0;
    double best_score = 0.0;
    for (std::size_t c = 0; c < remaining.size(); ++c) {
      // Max similarity to the recent prefix; no prefix means no penalty.
      double penalty = take > 0 ? -2.0 : 0.0;
      for (int i = n - take; i < n; ++i) {
        penalty = std::max(penalty,
                           dot(remaining[c].embedding, order[static_cast<std::size_t>(i)].embedding));
      }
      const double score =
          lambda * remaining[c].main_score - (1.0 - lambda) * penalty;
      if (c == 0 || score > best_score) {  // ties keep the lower main-pass rank
        best_score = score;
        best = static_cast<int>(c);
      }
    }
    order.push_back(remaining[static_cast<std::size_t>(best)]);
    remaining.erase(remaining.begin() + best);
  }
  return order;
}

}  // namespace feedrank
