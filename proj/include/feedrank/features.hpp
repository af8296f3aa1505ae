#pragma once

#include <array>

#include "feedrank/domain.hpp"

namespace feedrank {

inline constexpr int kContextualFeatureCount = 10;
inline constexpr int kLagCount = 5;

// The ten contextual features in their fixed serving order. Model files and
// session logs depend on this layout:
//   f1      avg_embedding_similarity   dot(candidate, mean of the last k embeddings)
//   f2..f6  lag_similarity[m-1]        dot(candidate, m-th previous item), m = 1..5
//   f7      mean_lag_similarity        mean of the defined lag similarities
//   f8      topic_overlap              fraction of the last min(k,5) items sharing the topic
//   f9      immediate_topic_repeat     1.0 when the previous item shares the topic
//   f10     normalized_position        slot index / feed length
struct ContextualFeatureVector {
  double avg_embedding_similarity = 0.0;
  std::array<double, kLagCount> lag_similarity{};
  double mean_lag_similarity = 0.0;
  double topic_overlap = 0.0;
  double immediate_topic_repeat = 0.0;
  double normalized_position = 0.0;

  std::array<double, kContextualFeatureCount> as_array() const;
  static ContextualFeatureVector from_array(
      const std::array<double, kContextualFeatureCount>& a);
};

struct FeatureConfig {
  int context_depth = 5;             // k
  double missing_context_fill = 0.0; // value for lags beyond the prefix
  int feed_length = 1;               // K, for position normalization
};

// Componentwise mean of the last min(k, prefix) embeddings; zero vector on an
// empty context. Deliberately not re-normalized: magnitude shrinkage of a
// diverse prefix is itself signal.
Vec average_context_embedding(const FeedContext& context, int k, int dim);

// dot(candidate, average_context_embedding); 0.0 on an empty context.
double avg_similarity(const Item& candidate, const FeedContext& context, int k);

struct LagSimilarityResult {
  Vec lags;     // slot m-1 = dot with the m-th previous item, fill beyond the prefix
  double mean;  // mean over defined lags, fill when none are defined
};

LagSimilarityResult pairwise_similarities(const Item& candidate,
                                          const FeedContext& context, int k,
                                          double fill);

ContextualFeatureVector extract_contextual(const Item& candidate,
                                           const FeedContext& context,
                                           int slot_index,
                                           const FeatureConfig& cfg);

// Point-wise feature block logged by the simulator and rebuilt at serving:
// [affinity, main_score, topic one-hot]. Width = 2 + num_topics.
Vec pointwise_features(const UserProfile& user, const Item& item,
                       int num_topics);

}  // namespace feedrank
