#pragma once

#include "feedrank/domain.hpp"
#include "feedrank/features.hpp"
#include "feedrank/model.hpp"

namespace feedrank {

struct RerankParams {
  int window = 10;        // w: candidates scored per slot
  int context_depth = 5;  // k: slotted items visible to the extractor
  int page_size = 10;     // p: slots filled per demand-based page
  // Tie break is fixed: lower main-pass rank wins.
};

struct RerankStats {
  long scorer_calls = 0;
};

struct RerankResult {
  std::vector<Item> order;  // permutation of the input feed
  Vec scores;               // chosen objective-task score per slot
  RerankStats stats;
};

// Greedy contextual pass: for each slot, score the first min(w, remaining)
// unslotted candidates (main-pass order) against the last k slotted items and
// slot the argmax. Scorer invocations are bounded by K * w.
RerankResult rerank_feed(const Feed& feed, const ScorerModel& scorer,
                         const RerankParams& params, const FeatureConfig& cfg,
                         int objective_task,
                         ExecMode exec = ExecMode::parallel);

// Demand-based pagination. served + remaining is always a permutation of the
// original feed items.
struct SessionState {
  UserProfile user;
  std::vector<Item> served;
  std::vector<Item> remaining;  // main-pass order among unslotted items
  int feed_length = 0;          // K of the original feed

  bool exhausted() const { return remaining.empty(); }
};

SessionState make_session_state(const Feed& feed);

struct PageResult {
  std::vector<Item> page;
  Vec scores;
  bool session_done = false;
  RerankStats stats;
};

// Runs the greedy loop for min(p, remaining) slots, seeding the context with
// the tail of state.served. Repeated calls until exhaustion reproduce the
// single-pass permutation exactly.
PageResult rerank_page(SessionState& state, const ScorerModel& scorer,
                       const RerankParams& params, const FeatureConfig& cfg,
                       int objective_task, ExecMode exec = ExecMode::parallel);

// Maximal-marginal-relevance comparator: greedy argmax of
// lambda * main_score - (1 - lambda) * max similarity to the last k slotted.
std::vector<Item> mmr_rerank(const Feed& feed, double lambda,
                             int context_depth);

}  // namespace feedrank
