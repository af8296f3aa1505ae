#include "feedrank/features.hpp"

#include <algorithm>

namespace feedrank {

std::array<double, kContextualFeatureCount> ContextualFeatureVector::as_array()
    const {
  return {avg_embedding_similarity,
          lag_similarity[0],
          lag_similarity[1],
          lag_similarity[2],
          lag_similarity[3],
          lag_similarity[4],
          mean_lag_similarity,
          topic_overlap,
          immediate_topic_repeat,
          normalized_position};
}

ContextualFeatureVector ContextualFeatureVector::from_array(
    const std::array<double, kContextualFeatureCount>& a) {
  ContextualFeatureVector f;
  f.avg_embedding_similarity = a[0];
  for (int m = 0; m < kLagCount; ++m) f.lag_similarity[m] = a[1 + m];
  f.mean_lag_similarity = a[6];
  f.topic_overlap = a[7];
  f.immediate_topic_repeat = a[8];
  f.normalized_position = a[9];
  return f;
}

Vec average_context_embedding(const FeedContext& context, int k, int dim) {
  Vec mean(dim, 0.0);
  const int n = static_cast<int>(context.prefix.size());
  const int take = std::min(k, n);
  if (take <= 0) return mean;
  for (int i = n - take; i < n; ++i) {
    const Vec& e = context.prefix[i]->embedding;
    if (static_cast<int>(e.size()) != dim) {
      raise(ErrorKind::DimensionMismatch,
            "context embedding length " + std::to_string(e.size()));
    }
    for (int d = 0; d < dim; ++d) mean[d] += e[d];
  }
  const double inv = 1.0 / take;
  for (double& x : mean) x *= inv;
  return mean;
}

double avg_similarity(const Item& candidate, const FeedContext& context,
                      int k) {
  if (context.empty()) return 0.0;
  Vec mean = average_context_embedding(
      context, k, static_cast<int>(candidate.embedding.size()));
  return dot(candidate.embedding, mean);
}

LagSimilarityResult pairwise_similarities(const Item& candidate,
                                          const FeedContext& context, int k,
                                          double fill) {
  LagSimilarityResult r;
  r.lags.assign(static_cast<std::size_t>(k), fill);
  const int n = static_cast<int>(context.prefix.size());
  const int defined = std::min(k, n);
  double sum = 0.0;
  for (int m = 1; m <= defined; ++m) {
    double s = dot(candidate.embedding, context.prefix[n - m]->embedding);
    r.lags[m - 1] = s;
    sum += s;
  }
  r.mean = defined > 0 ? sum / defined : fill;
  return r;
}

ContextualFeatureVector extract_contextual(const Item& candidate,
                                           const FeedContext& context,
                                           int slot_index,
                                           const FeatureConfig& cfg) {
  ContextualFeatureVector f;
  f.avg_embedding_similarity =
      avg_similarity(candidate, context, cfg.context_depth);

  // The lag block is fixed at five slots; a deeper configured window only
  // widens the average above.
  const int lag_depth = std::min(cfg.context_depth, kLagCount);
  LagSimilarityResult lags = pairwise_similarities(
      candidate, context, lag_depth, cfg.missing_context_fill);
  for (int m = 0; m < kLagCount; ++m) {
    f.lag_similarity[m] = m < lag_depth ? lags.lags[m] : cfg.missing_context_fill;
  }
  f.mean_lag_similarity = lags.mean;

  const int n = static_cast<int>(context.prefix.size());
  const int overlap_window = std::min(lag_depth, n);
  if (overlap_window > 0) {
    int shared = 0;
    for (int m = 1; m <= overlap_window; ++m) {
      if (context.prefix[n - m]->topic == candidate.topic) ++shared;
    }
    f.topic_overlap = static_cast<double>(shared) / overlap_window;
    f.immediate_topic_repeat =
        context.prefix[n - 1]->topic == candidate.topic ? 1.0 : 0.0;
  }

  f.normalized_position =
      static_cast<double>(slot_index) / static_cast<double>(cfg.feed_length);
  return f;
}

Vec pointwise_features(const UserProfile& user, const Item& item,
                       int num_topics) {
  if (item.topic < 0 || item.topic >= num_topics) {
    raise(ErrorKind::DimensionMismatch,
          "topic " + std::to_string(item.topic) + " outside one-hot width " +
              std::to_string(num_topics));
  }
  Vec row(2 + static_cast<std::size_t>(num_topics), 0.0);
  row[0] = dot(user.interest_embedding, item.embedding);
  row[1] = item.main_score;
  row[2 + static_cast<std::size_t>(item.topic)] = 1.0;
  return row;
}

}  // namespace feedrank
