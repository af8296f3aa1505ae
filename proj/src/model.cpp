#include "feedrank/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "feedrank/eval.hpp"
#include "feedrank/features.hpp"
#include "feedrank/rng.hpp"

using nlohmann::json;

namespace feedrank {

const char* feature_mode_name(FeatureMode mode) {
  return mode == FeatureMode::baseline ? "baseline" : "contextual";
}

FeatureMode feature_mode_from_name(const std::string& name) {
  if (name == "baseline") return FeatureMode::baseline;
  if (name == "contextual") return FeatureMode::contextual;
  raise(ErrorKind::InvalidConfig, "unknown feature mode '" + name + "'");
}

int ScorerModel::param_count() const {
  int n = 0;
  for (const DenseLayer& layer : layers) n += layer.in * layer.out + layer.out;
  return n;
}

ScorerModel init_model(int input_dim, std::vector<int> hidden_dims,
                       int task_count, FeatureMode mode, std::uint64_t seed) {
  if (input_dim <= 0 || task_count <= 0) {
    raise(ErrorKind::InvalidConfig, "model dimensions must be positive");
  }
  for (int h : hidden_dims) {
    if (h <= 0) raise(ErrorKind::InvalidConfig, "hidden width must be positive");
  }

  ScorerModel model;
  model.mode = mode;
  model.input_dim = input_dim;
  model.hidden_dims = std::move(hidden_dims);
  model.task_count = task_count;

  Rng rng(seed);
  int in = input_dim;
  auto add_layer = [&](int out) {
    DenseLayer layer;
    layer.in = in;
    layer.out = out;
    layer.w.resize(static_cast<std::size_t>(in) * out);
    layer.b.assign(static_cast<std::size_t>(out), 0.0);
    const double limit = std::sqrt(6.0 / (in + out));
    for (double& w : layer.w) w = rng.uniform(-limit, limit);
    model.layers.push_back(std::move(layer));
    in = out;
  };
  for (int h : model.hidden_dims) add_layer(h);
  add_layer(task_count);
  return model;
}

namespace {

// z = W x + b, accumulated in input order so every code path that scores a
// row produces identical bits.
void affine(const DenseLayer& layer, std::span<const double> x, Vec& z) {
  z.resize(static_cast<std::size_t>(layer.out));
  for (int o = 0; o < layer.out; ++o) {
    const double* w = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
    double acc = layer.b[static_cast<std::size_t>(o)];
    for (int i = 0; i < layer.in; ++i) acc += w[i] * x[static_cast<std::size_t>(i)];
    z[static_cast<std::size_t>(o)] = acc;
  }
}

struct ForwardScratch {
  std::vector<Vec> activations;  // activations[0] = input copy
  Vec probs;
};

void forward_into(const ScorerModel& model, std::span<const double> features,
                  ForwardScratch& s) {
  if (static_cast<int>(features.size()) != model.input_dim) {
    raise(ErrorKind::DimensionMismatch,
          "feature row of length " + std::to_string(features.size()) +
              ", model expects " + std::to_string(model.input_dim));
  }
  s.activations.resize(model.layers.size() + 1);
  s.activations[0].assign(features.begin(), features.end());
  const std::size_t hidden = model.layers.size() - 1;
  for (std::size_t l = 0; l < hidden; ++l) {
    affine(model.layers[l], s.activations[l], s.activations[l + 1]);
    for (double& a : s.activations[l + 1]) a = a > 0.0 ? a : 0.0;
  }
  affine(model.layers[hidden], s.activations[hidden], s.activations[hidden + 1]);
  s.probs.resize(s.activations.back().size());
  for (std::size_t t = 0; t < s.probs.size(); ++t) {
    s.probs[t] = clamp_prob(sigmoid(s.activations.back()[t]));
  }
}

}  // namespace

Vec forward(const ScorerModel& model, std::span<const double> features) {
  ForwardScratch s;
  forward_into(model, features, s);
  return s.probs;
}

void forward_batch(const ScorerModel& model, const std::vector<Vec>& rows,
                   std::vector<Vec>& out, ExecMode mode) {
  out.resize(rows.size());
  parallel_for(rows.size(), mode, [&](std::size_t i) {
    ForwardScratch s;
    forward_into(model, rows[i], s);
    out[i] = std::move(s.probs);
  });
}

double bce_loss(std::span<const double> predictions,
                std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    raise(ErrorKind::DimensionMismatch,
          "prediction / label length mismatch");
  }
  double loss = 0.0;
  for (std::size_t t = 0; t < predictions.size(); ++t) {
    const double p = clamp_prob(predictions[t]);
    loss -= labels[t] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return loss;
}

Vec get_params(const ScorerModel& model) {
  Vec params;
  params.reserve(static_cast<std::size_t>(model.param_count()));
  for (const DenseLayer& layer : model.layers) {
    params.insert(params.end(), layer.w.begin(), layer.w.end());
    params.insert(params.end(), layer.b.begin(), layer.b.end());
  }
  return params;
}

void set_params(ScorerModel& model, std::span<const double> params) {
  if (static_cast<int>(params.size()) != model.param_count()) {
    raise(ErrorKind::DimensionMismatch, "parameter vector length mismatch");
  }
  std::size_t pos = 0;
  for (DenseLayer& layer : model.layers) {
    std::copy_n(params.begin() + pos, layer.w.size(), layer.w.begin());
    pos += layer.w.size();
    std::copy_n(params.begin() + pos, layer.b.size(), layer.b.begin());
    pos += layer.b.size();
  }
}

namespace {

// Gradient of the summed-task BCE for one example, written into grad (flat
// layout, same order as get_params).
double example_gradient(const ScorerModel& model, const Vec& row,
                        const std::vector<int>& labels, double* grad) {
  ForwardScratch s;
  forward_into(model, row, s);
  if (static_cast<int>(labels.size()) != model.task_count) {
    raise(ErrorKind::DimensionMismatch, "label vector length mismatch");
  }

  const std::size_t L = model.layers.size();
  // delta for the head: d loss / d logit = p - y (clamp is inactive for any
  // reachable logit magnitude)
  std::vector<Vec> deltas(L);
  deltas[L - 1].resize(s.probs.size());
  double loss = 0.0;
  for (std::size_t t = 0; t < s.probs.size(); ++t) {
    const double p = s.probs[t];
    loss -= labels[t] == 1 ? std::log(p) : std::log(1.0 - p);
    deltas[L - 1][t] = p - static_cast<double>(labels[t]);
  }

  for (std::size_t l = L - 1; l > 0; --l) {
    const DenseLayer& layer = model.layers[l];
    Vec& prev = deltas[l - 1];
    prev.assign(static_cast<std::size_t>(layer.in), 0.0);
    for (int o = 0; o < layer.out; ++o) {
      const double d = deltas[l][static_cast<std::size_t>(o)];
      const double* w = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) prev[static_cast<std::size_t>(i)] += d * w[i];
    }
    // ReLU mask of the hidden activation feeding layer l
    const Vec& act = s.activations[l];
    for (std::size_t i = 0; i < prev.size(); ++i) {
      if (act[i] <= 0.0) prev[i] = 0.0;
    }
  }

  std::size_t pos = 0;
  for (std::size_t l = 0; l < L; ++l) {
    const DenseLayer& layer = model.layers[l];
    const Vec& input = s.activations[l];
    const Vec& delta = deltas[l];
    for (int o = 0; o < layer.out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      double* g = grad + pos + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) g[i] = d * input[static_cast<std::size_t>(i)];
    }
    pos += layer.w.size();
    for (int o = 0; o < layer.out; ++o) grad[pos + static_cast<std::size_t>(o)] = delta[static_cast<std::size_t>(o)];
    pos += layer.b.size();
  }
  return loss;
}

}  // namespace

double loss_and_gradient(const ScorerModel& model, const std::vector<Vec>& rows,
                         const std::vector<std::vector<int>>& labels, Vec& grad,
                         ExecMode mode) {
  if (rows.empty()) raise(ErrorKind::EmptyLog, "empty batch");
  if (rows.size() != labels.size()) {
    raise(ErrorKind::DimensionMismatch, "batch row / label count mismatch");
  }
  const std::size_t P = static_cast<std::size_t>(model.param_count());
  const std::size_t B = rows.size();

  Vec arena(P * B);
  Vec losses(B);
  parallel_for(B, mode, [&](std::size_t e) {
    losses[e] = example_gradient(model, rows[e], labels[e], arena.data() + e * P);
  });

  grad.assign(P, 0.0);
  const double inv = 1.0 / static_cast<double>(B);
  parallel_for(P, mode, [&](std::size_t p) {
    double acc = 0.0;
    for (std::size_t e = 0; e < B; ++e) acc += arena[e * P + p];
    grad[p] = acc * inv;
  });

  CompensatedSum loss;
  for (double l : losses) loss.add(l);
  return loss.value() * inv;
}

namespace {

struct DayPartition {
  int day;
  std::vector<std::size_t> indices;  // log order within the day
};

std::vector<DayPartition> partition_by_day(const SessionLog& log) {
  std::vector<std::size_t> order(log.impressions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return log.impressions[a].day < log.impressions[b].day;
  });

  std::vector<DayPartition> days;
  for (std::size_t idx : order) {
    const int day = log.impressions[idx].day;
    if (days.empty() || days.back().day != day) days.push_back({day, {}});
    days.back().indices.push_back(idx);
  }
  return days;
}

class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t params, const TrainConfig& cfg, long total_steps)
      : cfg_(cfg), total_steps_(std::max<long>(1, total_steps)),
        m_(params, 0.0), v_(params, 0.0) {
    if (cfg.lr_schedule != "constant" && cfg.lr_schedule != "linear") {
      raise(ErrorKind::InvalidConfig,
            "unknown lr_schedule '" + cfg.lr_schedule + "'");
    }
  }

  void step(Vec& params, const Vec& grad, ExecMode mode) {
    double lr = cfg_.learning_rate;
    if (cfg_.lr_schedule == "linear") {
      lr *= 1.0 - static_cast<double>(t_) / static_cast<double>(total_steps_);
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    parallel_for(params.size(), mode, [&](std::size_t i) {
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
      const double mhat = m_[i] / bc1;
      const double vhat = v_[i] / bc2;
      params[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    });
  }

 private:
  TrainConfig cfg_;
  long total_steps_;
  long t_ = 0;
  Vec m_, v_;
};

}  // namespace

Vec model_input_row(const Impression& imp, FeatureMode mode) {
  Vec row = imp.pointwise;
  if (mode == FeatureMode::contextual) {
    row.insert(row.end(), imp.contextual.begin(), imp.contextual.end());
  }
  return row;
}

TrainResult train(const SessionLog& log, const TrainConfig& cfg,
                  FeatureMode mode, ExecMode exec) {
  if (log.impressions.empty()) raise(ErrorKind::EmptyLog, "no impressions");
  if (cfg.learning_rate < 0.0 || cfg.batch_size < 1) {
    raise(ErrorKind::InvalidConfig, "bad learning rate or batch size");
  }

  const std::size_t pointwise_dim = log.impressions.front().pointwise.size();
  const std::size_t task_count = log.impressions.front().labels.size();
  if (task_count == 0) raise(ErrorKind::DegenerateLabels, "no label tasks");
  for (const Impression& imp : log.impressions) {
    if (imp.pointwise.size() != pointwise_dim ||
        imp.labels.size() != task_count) {
      raise(ErrorKind::DimensionMismatch,
            "inconsistent feature or label widths in log");
    }
  }

  const int input_dim =
      static_cast<int>(pointwise_dim) +
      (mode == FeatureMode::contextual ? kContextualFeatureCount : 0);
  ScorerModel model = init_model(input_dim, cfg.hidden_dims,
                                 static_cast<int>(task_count), mode, cfg.seed);

  const std::vector<DayPartition> days = partition_by_day(log);
  const std::size_t window =
      std::min<std::size_t>(days.size(),
                            static_cast<std::size_t>(std::max(1, cfg.initial_window_days)));

  const int passes = cfg.single_pass ? 1 : std::max(1, cfg.passes);
  const auto batches_of = [&](std::size_t n) -> long {
    return static_cast<long>((n + static_cast<std::size_t>(cfg.batch_size) - 1) /
                             static_cast<std::size_t>(cfg.batch_size));
  };
  long total_steps = 0;
  {
    std::size_t initial_size = 0;
    for (std::size_t d = 0; d < window; ++d) initial_size += days[d].indices.size();
    total_steps += batches_of(initial_size) * passes;
    for (std::size_t d = window; d < days.size(); ++d) {
      total_steps += batches_of(days[d].indices.size()) * passes;
    }
  }

  Vec params = get_params(model);
  AdamOptimizer adam(params.size(), cfg, total_steps);
  Vec grad;
  std::vector<Vec> rows;
  std::vector<std::vector<int>> labels;
  auto train_on = [&](const std::vector<std::size_t>& indices) {
    for (int pass = 0; pass < passes; ++pass) {
      for (std::size_t start = 0; start < indices.size();
           start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t end = std::min(
            indices.size(), start + static_cast<std::size_t>(cfg.batch_size));
        rows.clear();
        labels.clear();
        for (std::size_t i = start; i < end; ++i) {
          const Impression& imp = log.impressions[indices[i]];
          rows.push_back(model_input_row(imp, mode));
          labels.push_back(imp.labels);
        }
        loss_and_gradient(model, rows, labels, grad, exec);
        adam.step(params, grad, exec);
        set_params(model, params);
      }
    }
  };

  auto progressive_ne = [&](const std::vector<std::size_t>& indices)
      -> std::optional<double> {
    std::vector<Vec> day_rows;
    day_rows.reserve(indices.size());
    for (std::size_t idx : indices) {
      day_rows.push_back(model_input_row(log.impressions[idx], mode));
    }
    std::vector<Vec> probs;
    forward_batch(model, day_rows, probs, exec);
    Vec preds(indices.size());
    std::vector<int> ys(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      preds[i] = probs[i][static_cast<std::size_t>(cfg.objective_task)];
      ys[i] = log.impressions[indices[i]].labels[static_cast<std::size_t>(
          cfg.objective_task)];
    }
    try {
      return normalized_entropy(preds, ys, exec);
    } catch (const Error&) {
      return std::nullopt;  // single-class day, no NE point
    }
  };

  TrainResult result;
  std::vector<std::size_t> initial;
  for (std::size_t d = 0; d < window; ++d) {
    initial.insert(initial.end(), days[d].indices.begin(),
                   days[d].indices.end());
  }
  train_on(initial);

  for (std::size_t d = window; d < days.size(); ++d) {
    if (std::optional<double> ne = progressive_ne(days[d].indices)) {
      result.day_ne.emplace_back(days[d].day, *ne);
    }
    train_on(days[d].indices);
  }

  result.model = std::move(model);
  return result;
}

void save_model(const ScorerModel& model, const std::string& path) {
  json dims;
  dims["input"] = model.input_dim;
  dims["hidden"] = model.hidden_dims;
  dims["tasks"] = model.task_count;

  json layers = json::array();
  for (const DenseLayer& layer : model.layers) {
    json rows = json::array();
    for (int o = 0; o < layer.out; ++o) {
      rows.push_back(Vec(layer.w.begin() + static_cast<std::size_t>(o) * layer.in,
                         layer.w.begin() + static_cast<std::size_t>(o + 1) * layer.in));
    }
    layers.push_back({{"w", std::move(rows)}, {"b", layer.b}});
  }

  json doc;
  doc["version"] = model.version;
  doc["feature_mode"] = feature_mode_name(model.mode);
  doc["dims"] = std::move(dims);
  doc["layers"] = std::move(layers);

  std::ofstream out(path);
  if (!out) raise(ErrorKind::IoError, "cannot write '" + path + "'");
  out << doc.dump() << '\n';
}

ScorerModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::IoError, "cannot read '" + path + "'");
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    raise(ErrorKind::CorruptModel, "unparseable model file '" + path + "'");
  }

  ScorerModel model;
  try {
    model.version = doc.at("version").get<int>();
    if (model.version != 1) {
      raise(ErrorKind::VersionMismatch,
            "model version " + std::to_string(model.version));
    }
    model.mode = feature_mode_from_name(doc.at("feature_mode").get<std::string>());
    model.input_dim = doc.at("dims").at("input").get<int>();
    model.hidden_dims = doc.at("dims").at("hidden").get<std::vector<int>>();
    model.task_count = doc.at("dims").at("tasks").get<int>();
    for (const json& jl : doc.at("layers")) {
      DenseLayer layer;
      const json& rows = jl.at("w");
      layer.out = static_cast<int>(rows.size());
      for (const json& row : rows) {
        if (layer.in == 0) layer.in = static_cast<int>(row.size());
        if (static_cast<int>(row.size()) != layer.in) {
          raise(ErrorKind::CorruptModel, "ragged weight matrix");
        }
        for (const json& v : row) layer.w.push_back(v.get<double>());
      }
      layer.b = jl.at("b").get<Vec>();
      if (static_cast<int>(layer.b.size()) != layer.out) {
        raise(ErrorKind::CorruptModel, "bias length mismatch");
      }
      model.layers.push_back(std::move(layer));
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(ErrorKind::CorruptModel, std::string("bad model document: ") + e.what());
  }

  // Shape chain: input -> hidden... -> tasks.
  std::vector<int> expected = {model.input_dim};
  for (int h : model.hidden_dims) expected.push_back(h);
  expected.push_back(model.task_count);
  if (model.layers.size() + 1 != expected.size()) {
    raise(ErrorKind::CorruptModel, "layer count does not match dims");
  }
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (model.layers[l].in != expected[l] ||
        model.layers[l].out != expected[l + 1]) {
      raise(ErrorKind::CorruptModel, "shape chain broken at layer " +
                                         std::to_string(l));
    }
  }
  for (const DenseLayer& layer : model.layers) {
    for (double w : layer.w) {
      if (!std::isfinite(w)) raise(ErrorKind::CorruptModel, "non-finite weight");
    }
    for (double b : layer.b) {
      if (!std::isfinite(b)) raise(ErrorKind::CorruptModel, "non-finite bias");
    }
  }
  return model;
}

}  // namespace feedrank
