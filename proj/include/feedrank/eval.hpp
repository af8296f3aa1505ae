#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "feedrank/domain.hpp"
#include "feedrank/parallel.hpp"
#include "feedrank/simgen.hpp"

namespace feedrank {

// sum(predictions) / sum(labels); 1.0 means unbiased on the slice.
double calibration(std::span<const double> predictions,
                   std::span<const int> labels);

struct BucketStat {
  double lo = 0.0;
  double hi = 0.0;
  long count = 0;
  double sum_prediction = 0.0;
  double sum_label = 0.0;
  std::optional<double> calibration;  // absent when the label mass is zero
};

struct CalibrationReport {
  std::vector<BucketStat> buckets;
  long total = 0;
  // Combined from the bucket sums, so overall == sum(num_b) / sum(den_b)
  // holds exactly.
  double overall = 0.0;
};

// num_buckets uniform edges over [-1, 1].
std::vector<double> uniform_bucket_edges(int num_buckets);

// Buckets are half-open on the cached similarity score, last bucket closed.
CalibrationReport calibration_by_bucket(std::span<const double> similarity,
                                        std::span<const double> predictions,
                                        std::span<const int> labels,
                                        const std::vector<double>& edges);

// Mean per-impression log-loss divided by the entropy of the background CTR
// (the empirical positive rate of `labels`). Natural logs. 1.0 equals a
// constant background-rate predictor.
double normalized_entropy(std::span<const double> predictions,
                          std::span<const int> labels,
                          ExecMode exec = ExecMode::parallel);

struct NEReport {
  std::string model_name;
  double ne = 0.0;
  double background_ctr = 0.0;
  std::vector<std::pair<int, double>> per_day;
  std::string baseline_name;
  std::optional<double> improvement_vs_baseline_pct;
};

using Ranker = std::function<std::vector<Item>(const Feed&)>;

struct RankerStats {
  std::string name;
  double mean_engagement = 0.0;
  double mean_engagement_beta0 = 0.0;
  double mean_engagement_beta_hi = 0.0;
  // Strict wins against the point-wise order on the slate oracle.
  double win_rate = 0.0;
  double win_rate_beta0 = 0.0;
  double win_rate_beta_hi = 0.0;
  double mean_intra_similarity = 0.0;  // diversity proxy, lower is more diverse
};

struct RankerComparison {
  long sessions = 0;
  long sessions_beta0 = 0;
  long sessions_beta_hi = 0;
  int objective_task = 0;
  std::vector<RankerStats> rankers;
};

// Scores every test feed with every ranker through the ground-truth slate
// oracle. The first ranker is the reference for win rates (use the identity
// point-wise order there).
RankerComparison compare_rankers(
    const World& world, const std::vector<Feed>& test_feeds,
    const std::vector<std::pair<std::string, Ranker>>& rankers,
    int objective_task = 0);

// Mean over slots >= 1 of the similarity of the slotted item to the average
// embedding of the previous min(5, slot) items.
double mean_intra_feed_similarity(const std::vector<Item>& ordering);

// Deterministic report serializations.
std::string calibration_report_json(const CalibrationReport& report);
std::string calibration_report_csv(const CalibrationReport& report);
std::string ne_report_json(const NEReport& report);
std::string comparison_json(const RankerComparison& cmp);
std::string comparison_table(const RankerComparison& cmp);

}  // namespace feedrank
