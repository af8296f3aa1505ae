#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "feedrank/domain.hpp"
#include "feedrank/parallel.hpp"

namespace feedrank {

enum class FeatureMode { baseline, contextual };

const char* feature_mode_name(FeatureMode mode);
FeatureMode feature_mode_from_name(const std::string& name);

struct DenseLayer {
  int in = 0;
  int out = 0;
  Vec w;  // row-major [out][in]
  Vec b;  // [out]
};

// Multi-task feed-forward scorer: ReLU hidden layers, one sigmoid head per
// task. In contextual mode the final 10 inputs are the ContextualFeatureVector
// in serving order, appended after the point-wise block.
struct ScorerModel {
  int version = 1;
  FeatureMode mode = FeatureMode::baseline;
  int input_dim = 0;
  std::vector<int> hidden_dims;
  int task_count = 1;
  std::vector<DenseLayer> layers;  // hidden layers, then the task head

  int param_count() const;
};

// Glorot-uniform init, fully seeded.
ScorerModel init_model(int input_dim, std::vector<int> hidden_dims,
                       int task_count, FeatureMode mode, std::uint64_t seed);

// Per-task probabilities, clamped into (0, 1).
Vec forward(const ScorerModel& model, std::span<const double> features);

void forward_batch(const ScorerModel& model, const std::vector<Vec>& rows,
                   std::vector<Vec>& out, ExecMode mode = ExecMode::parallel);

// Sum over tasks of binary cross entropy, probabilities clamped before logs.
double bce_loss(std::span<const double> predictions,
                std::span<const int> labels);

// Flat parameter views in layer order, weights then biases per layer. Used by
// the optimizer and the finite-difference checks.
Vec get_params(const ScorerModel& model);
void set_params(ScorerModel& model, std::span<const double> params);

// Mean per-example loss over the batch plus its gradient in the flat layout.
// Per-example gradients land in disjoint arena slots, so parallel and serial
// mode reduce to identical bits.
double loss_and_gradient(const ScorerModel& model, const std::vector<Vec>& rows,
                         const std::vector<std::vector<int>>& labels, Vec& grad,
                         ExecMode mode = ExecMode::parallel);

struct TrainConfig {
  double learning_rate = 0.005;  // initial rate
  int batch_size = 128;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // "constant" or "linear" (decay to ~0 across the total step budget; the
  // final iterate then sits much closer to the optimum).
  std::string lr_schedule = "constant";
  int initial_window_days = 21;
  bool single_pass = true;
  int passes = 1;  // per-partition passes when single_pass is off
  std::vector<int> hidden_dims = {64, 32};
  int objective_task = 0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ScorerModel model;
  // Progressive validation: NE of the current model on each recurrent day,
  // measured before training on that day.
  std::vector<std::pair<int, double>> day_ne;
};

// Mini-batch Adam over the initial day window, then one pass per subsequent
// day in chronological order. Deterministic for a fixed seed and data order.
TrainResult train(const SessionLog& log, const TrainConfig& cfg,
                  FeatureMode mode, ExecMode exec = ExecMode::parallel);

// Single JSON document {version, feature_mode, dims, layers:[{w, b}]}.
// Round-trips weights bit-for-bit.
void save_model(const ScorerModel& model, const std::string& path);
ScorerModel load_model(const std::string& path);

// Input row for one logged impression under the given mode.
Vec model_input_row(const Impression& imp, FeatureMode mode);

}  // namespace feedrank
