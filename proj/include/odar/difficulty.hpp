// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "odar/features.hpp"

namespace odar {

enum class PathKind { Simple, Medium, Hard };

const char* to_string(PathKind p);
PathKind path_from_string(const std::string& s);

// Sigmoid-linear difficulty estimator d(x) = sigmoid(W . z(phi(x)) + b),
// where z applies the stored per-feature standardization. A default model
// has zero weights, identity standardization and thresholds (0.3, 0.7).
struct DifficultyModel {
  std::array<double, 24> weights{};
  double bias = 0.0;
  double tau1 = 0.3;
  double tau2 = 0.7;
  std::array<double, 24> feat_mean{};
  std::array<double, 24> feat_std{};  // filled with 1.0 by default ctor
  std::string feature_pack_version;
  std::string trained_on;  // dataset fingerprint
  std::uint64_t seed = 0;

  DifficultyModel() { feat_std.fill(1.0); }

  void validate() const;
};

struct TrainingExample {
  FeatureVector features{};
  double t_human_norm = 0.0;  // normalized human-time proxy, [0, 1]
  int acc_fast = 0;           // Fast-Agent correctness, {0, 1}
};

struct TrainingConfig {
  double alpha = 0.5;    // target mixing
  double lr = 1e-3;
  int batch_size = 32;
  int epochs = 50;
  double l2_lambda = 0.01;
  std::uint64_t seed = 42;

  void validate() const;
};

struct TrainingReport {
  std::vector<double> epoch_losses;
  double holdout_mse = 0.0;
  double holdout_pearson_r = 0.0;
  bool pearson_defined = false;
  std::size_t n_train = 0;
  std::size_t n_holdout = 0;
  std::uint64_t seed = 0;
};

// d(x) strictly in (0, 1). Throws on non-finite features.
double predict(const DifficultyModel& model, const FeatureVector& phi);

// Simple iff d < tau1; Medium iff tau1 <= d < tau2; Hard iff d >= tau2.
PathKind select_path(const DifficultyModel& model, double d);

// d* = alpha * t_human_norm + (1 - alpha) * (1 - acc_fast)
double make_target(const TrainingExample& ex, double alpha);

// Minimizes mean squared error plus l2_lambda * |W|^2 with mini-batch Adam
// (beta1 0.9, beta2 0.999, eps 1e-8). Deterministic given the seed; the last
// 10% of a seeded shuffle is held out for the report. Aborts with
// TrainingError if the loss goes non-finite.
std::pair<DifficultyModel, TrainingReport> train(
    const std::vector<TrainingExample>& data, const TrainingConfig& cfg);

// Full-batch loss and analytic gradient on standardized features; exposed so
// the gradient can be checked against finite differences.
double training_loss_gradient(const std::vector<std::array<double, 24>>& x,
                              const std::vector<double>& targets,
                              const std::array<double, 24>& w, double b,
                              double l2_lambda, std::array<double, 24>* grad_w,
                              double* grad_b);

// ---- threshold calibration ----

// Per-query outcome under each path, plus the predicted difficulty.
struct ThresholdEvalItem {
  double d = 0.0;
  std::map<PathKind, double> accuracy;  // observed/simulated per path
};

struct GridCell {
  double tau1 = 0.0;
  double tau2 = 0.0;
  double accuracy = 0.0;
  double avg_cost = 0.0;
  double objective = 0.0;  // accuracy / avg_cost
};

struct GridSearchResult {
  double tau1 = 0.0;
  double tau2 = 0.0;
  std::vector<GridCell> table;  // one row per evaluated grid point
};

// Maximizes accuracy / average-cost over grid1 x grid2 (pairs with
// tau1 >= tau2 are skipped). Ties break toward lower average cost, then
// lower tau1, then lower tau2. The result is invariant to eval-set order.
GridSearchResult grid_search_thresholds(
    const std::vector<ThresholdEvalItem>& eval_set,
    const std::vector<double>& grid1, const std::vector<double>& grid2,
    const std::map<PathKind, double>& cost_model);

// Model file round-trip (JSON with weights, bias, thresholds,
// standardization vectors, pack version, seed and schema version).
std::string model_to_json_text(const DifficultyModel& model);
DifficultyModel model_from_json_text(const std::string& json_text);
void save_model(const DifficultyModel& model, const std::string& path);
DifficultyModel load_model(const std::string& path);

}  // namespace odar
