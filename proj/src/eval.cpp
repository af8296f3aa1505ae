#include "feedrank/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "feedrank/features.hpp"

using nlohmann::json;

namespace feedrank {

double calibration(std::span<const double> predictions,
                   std::span<const int> labels) {
  if (predictions.size() != labels.size() || predictions.empty()) {
    raise(ErrorKind::DimensionMismatch,
          "calibration needs equal, nonzero prediction/label lengths");
  }
  CompensatedSum num, den;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    num.add(predictions[i]);
    den.add(static_cast<double>(labels[i]));
  }
  if (den.value() <= 0.0) {
    raise(ErrorKind::ZeroLabelMass, "no positive labels in slice");
  }
  return num.value() / den.value();
}

std::vector<double> uniform_bucket_edges(int num_buckets) {
  if (num_buckets < 1) raise(ErrorKind::BadEdges, "need at least one bucket");
  std::vector<double> edges(static_cast<std::size_t>(num_buckets) + 1);
  for (int i = 0; i <= num_buckets; ++i) {
    edges[static_cast<std::size_t>(i)] = -1.0 + 2.0 * i / num_buckets;
  }
  edges.front() = -1.0;
  edges.back() = 1.0;
  return edges;
}

CalibrationReport calibration_by_bucket(std::span<const double> similarity,
                                        std::span<const double> predictions,
                                        std::span<const int> labels,
                                        const std::vector<double>& edges) {
  if (edges.size() < 2) raise(ErrorKind::BadEdges, "need at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      raise(ErrorKind::BadEdges, "edges must be strictly increasing");
    }
  }
  if (edges.front() > -1.0 || edges.back() < 1.0) {
    raise(ErrorKind::BadEdges, "edges must cover [-1, 1]");
  }
  if (similarity.size() != predictions.size() ||
      similarity.size() != labels.size()) {
    raise(ErrorKind::DimensionMismatch, "input spans differ in length");
  }

  CalibrationReport report;
  report.buckets.resize(edges.size() - 1);
  for (std::size_t b = 0; b < report.buckets.size(); ++b) {
    report.buckets[b].lo = edges[b];
    report.buckets[b].hi = edges[b + 1];
  }

  // Half-open buckets, last bucket closed.
  auto bucket_of = [&](double s) -> std::size_t {
    const auto it = std::upper_bound(edges.begin(), edges.end(), s);
    std::size_t b = it == edges.begin()
                        ? 0
                        : static_cast<std::size_t>(it - edges.begin()) - 1;
    return std::min(b, report.buckets.size() - 1);
  };

  for (std::size_t i = 0; i < similarity.size(); ++i) {
    BucketStat& bucket = report.buckets[bucket_of(similarity[i])];
    bucket.count += 1;
    bucket.sum_prediction += predictions[i];
    bucket.sum_label += static_cast<double>(labels[i]);
  }

  double total_pred = 0.0, total_label = 0.0;
  for (BucketStat& bucket : report.buckets) {
    report.total += bucket.count;
    total_pred += bucket.sum_prediction;
    total_label += bucket.sum_label;
    if (bucket.sum_label > 0.0) {
      bucket.calibration = bucket.sum_prediction / bucket.sum_label;
    }
  }
  report.overall = total_label > 0.0 ? total_pred / total_label : 0.0;
  return report;
}

double normalized_entropy(std::span<const double> predictions,
                          std::span<const int> labels, ExecMode exec) {
  if (predictions.size() != labels.size() || predictions.empty()) {
    raise(ErrorKind::DimensionMismatch,
          "NE needs equal, nonzero prediction/label lengths");
  }

  long positives = 0;
  for (int y : labels) positives += y;
  if (positives == 0 || positives == static_cast<long>(labels.size())) {
    raise(ErrorKind::DegenerateLabels, "labels contain a single class");
  }

  Vec losses(predictions.size());
  parallel_for(predictions.size(), exec, [&](std::size_t i) {
    const double p = clamp_prob(predictions[i]);
    losses[i] = labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
  });
  CompensatedSum sum;
  for (double l : losses) sum.add(l);
  const double mean_loss = sum.value() / static_cast<double>(losses.size());

  const double ctr =
      static_cast<double>(positives) / static_cast<double>(labels.size());
  const double background_entropy =
      -(ctr * std::log(ctr) + (1.0 - ctr) * std::log(1.0 - ctr));
  return mean_loss / background_entropy;
}

double mean_intra_feed_similarity(const std::vector<Item>& ordering) {
  if (ordering.size() < 2) return 0.0;
  FeedContext ctx;
  ctx.depth = 5;
  CompensatedSum sum;
  for (std::size_t j = 0; j < ordering.size(); ++j) {
    if (j > 0) sum.add(avg_similarity(ordering[j], ctx, 5));
    ctx.push(ordering[j]);
  }
  return sum.value() / static_cast<double>(ordering.size() - 1);
}

RankerComparison compare_rankers(
    const World& world, const std::vector<Feed>& test_feeds,
    const std::vector<std::pair<std::string, Ranker>>& rankers,
    int objective_task) {
  if (rankers.empty() || test_feeds.empty()) {
    raise(ErrorKind::InvalidConfig, "need at least one ranker and one feed");
  }

  RankerComparison cmp;
  cmp.objective_task = objective_task;
  cmp.sessions = static_cast<long>(test_feeds.size());

  std::vector<bool> is_beta_hi(test_feeds.size());
  for (std::size_t s = 0; s < test_feeds.size(); ++s) {
    is_beta_hi[s] = test_feeds[s].user.diversity_sensitivity > 0.0;
    if (is_beta_hi[s]) ++cmp.sessions_beta_hi; else ++cmp.sessions_beta0;
  }

  // engagement[r][s]
  std::vector<Vec> engagement(rankers.size(), Vec(test_feeds.size()));
  std::vector<Vec> intra(rankers.size(), Vec(test_feeds.size()));
  for (std::size_t r = 0; r < rankers.size(); ++r) {
    for (std::size_t s = 0; s < test_feeds.size(); ++s) {
      const std::vector<Item> order = rankers[r].second(test_feeds[s]);
      engagement[r][s] = expected_slate_engagement(
          world.cfg, test_feeds[s].user, order, objective_task);
      intra[r][s] = mean_intra_feed_similarity(order);
    }
  }

  for (std::size_t r = 0; r < rankers.size(); ++r) {
    RankerStats stats;
    stats.name = rankers[r].first;
    CompensatedSum total, total0, total_hi, total_intra;
    long wins = 0, wins0 = 0, wins_hi = 0;
    for (std::size_t s = 0; s < test_feeds.size(); ++s) {
      total.add(engagement[r][s]);
      total_intra.add(intra[r][s]);
      const bool win = engagement[r][s] > engagement[0][s];
      if (is_beta_hi[s]) {
        total_hi.add(engagement[r][s]);
        wins_hi += win;
      } else {
        total0.add(engagement[r][s]);
        wins0 += win;
      }
      wins += win;
    }
    const double n = static_cast<double>(test_feeds.size());
    stats.mean_engagement = total.value() / n;
    stats.mean_engagement_beta0 =
        cmp.sessions_beta0 > 0 ? total0.value() / cmp.sessions_beta0 : 0.0;
    stats.mean_engagement_beta_hi =
        cmp.sessions_beta_hi > 0 ? total_hi.value() / cmp.sessions_beta_hi : 0.0;
    stats.win_rate = wins / n;
    stats.win_rate_beta0 =
        cmp.sessions_beta0 > 0 ? static_cast<double>(wins0) / cmp.sessions_beta0 : 0.0;
    stats.win_rate_beta_hi =
        cmp.sessions_beta_hi > 0 ? static_cast<double>(wins_hi) / cmp.sessions_beta_hi
                                 : 0.0;
    stats.mean_intra_similarity = total_intra.value() / n;
    cmp.rankers.push_back(std::move(stats));
  }
  return cmp;
}

namespace {

json bucket_to_json(const BucketStat& b) {
  json j;
  j["lo"] = b.lo;
  j["hi"] = b.hi;
  j["count"] = b.count;
  j["sum_prediction"] = b.sum_prediction;
  j["sum_label"] = b.sum_label;
  if (b.calibration) {
    j["calibration"] = *b.calibration;
  } else {
    j["calibration"] = nullptr;
  }
  return j;
}

}  // namespace

std::string calibration_report_json(const CalibrationReport& report) {
  json j;
  j["total"] = report.total;
  j["overall_calibration"] = report.overall;
  json buckets = json::array();
  for (const BucketStat& b : report.buckets) buckets.push_back(bucket_to_json(b));
  j["buckets"] = std::move(buckets);
  return j.dump(2) + "\n";
}

std::string calibration_report_csv(const CalibrationReport& report) {
  std::ostringstream out;
  out << "bucket_low,bucket_high,count,calibration\n";
  char buf[128];
  for (const BucketStat& b : report.buckets) {
    if (b.calibration) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%ld,%.17g\n", b.lo, b.hi,
                    b.count, *b.calibration);
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%ld,nan\n", b.lo, b.hi,
                    b.count);
    }
    out << buf;
  }
  return out.str();
}

std::string ne_report_json(const NEReport& report) {
  json j;
  j["model"] = report.model_name;
  j["ne"] = report.ne;
  j["background_ctr"] = report.background_ctr;
  json days = json::array();
  for (const auto& [day, ne] : report.per_day) {
    days.push_back({{"day", day}, {"ne", ne}});
  }
  j["per_day"] = std::move(days);
  if (!report.baseline_name.empty()) j["baseline"] = report.baseline_name;
  if (report.improvement_vs_baseline_pct) {
    j["improvement_vs_baseline_pct"] = *report.improvement_vs_baseline_pct;
  }
  return j.dump(2) + "\n";
}

std::string comparison_json(const RankerComparison& cmp) {
  json j;
  j["sessions"] = cmp.sessions;
  j["sessions_beta0"] = cmp.sessions_beta0;
  j["sessions_beta_hi"] = cmp.sessions_beta_hi;
  j["objective_task"] = cmp.objective_task;
  json rankers = json::array();
  for (const RankerStats& r : cmp.rankers) {
    rankers.push_back({{"name", r.name},
                       {"mean_engagement", r.mean_engagement},
                       {"mean_engagement_beta0", r.mean_engagement_beta0},
                       {"mean_engagement_beta_hi", r.mean_engagement_beta_hi},
                       {"win_rate", r.win_rate},
                       {"win_rate_beta0", r.win_rate_beta0},
                       {"win_rate_beta_hi", r.win_rate_beta_hi},
                       {"mean_intra_similarity", r.mean_intra_similarity}});
  }
  j["rankers"] = std::move(rankers);
  return j.dump(2) + "\n";
}

std::string comparison_table(const RankerComparison& cmp) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-12s %12s %12s %12s %9s %9s %10s\n",
                "ranker", "engagement", "eng(b=0)", "eng(b=hi)", "win%",
                "win%(hi)", "intra-sim");
  out << buf;
  for (const RankerStats& r : cmp.rankers) {
    std::snprintf(buf, sizeof(buf),
                  "%-12s %12.5f %12.5f %12.5f %8.1f%% %8.1f%% %10.4f\n",
                  r.name.c_str(), r.mean_engagement, r.mean_engagement_beta0,
                  r.mean_engagement_beta_hi, 100.0 * r.win_rate,
                  100.0 * r.win_rate_beta_hi, r.mean_intra_similarity);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "sessions: %ld (beta=0: %ld, beta=hi: %ld), objective task %d\n",
                cmp.sessions, cmp.sessions_beta0, cmp.sessions_beta_hi,
                cmp.objective_task);
  out << buf;
  return out.str();
}

}  // namespace feedrank
