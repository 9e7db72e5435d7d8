// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "odar/difficulty.hpp"
#include "odar/errors.hpp"

using namespace odar;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

FeatureVector random_features(std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  FeatureVector f{};
  for (auto& v : f) v = n01(rng);
  return f;
}

// examples whose targets come from a known sigmoid-linear model
std::vector<TrainingExample> planted_set(std::size_t n, std::uint64_t seed,
                                         double noise_sigma,
                                         std::array<double, 24>* w_out = nullptr) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> wdist(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, noise_sigma);
  std::array<double, 24> w_true{};
  for (auto& w : w_true) w = wdist(rng);
  double b_true = wdist(rng) * 0.5;

  std::vector<TrainingExample> data;
  data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    TrainingExample ex;
    ex.features = random_features(rng);
    double z = b_true;
    for (std::size_t k = 0; k < 24; ++k) z += w_true[k] * ex.features[k];
    double target = std::clamp(sigmoid(z) + noise(rng), 0.0, 1.0);
    // encode the target through the (t_human, acc_fast) channel: acc = 0
    // makes d* = alpha*t + (1-alpha), so use alpha = 1 semantics instead
    ex.t_human_norm = target;
    ex.acc_fast = 1;  // second term drops out at alpha = 1
    data.push_back(ex);
  }
  if (w_out) *w_out = w_true;
  return data;
}

TrainingConfig planted_config() {
  TrainingConfig cfg;
  cfg.alpha = 1.0;  // target = t_human_norm directly
  cfg.l2_lambda = 0.0;
  cfg.seed = 42;
  return cfg;
}

}  // namespace

TEST_CASE("predict: zero model gives one half; bias shifts it") {
  DifficultyModel model;
  FeatureVector phi{};
  phi.fill(3.7);
  CHECK(predict(model, phi) == 0.5);
  model.bias = std::log(3.0);
  CHECK(predict(model, phi) == doctest::Approx(0.75).epsilon(1e-12));
  model.bias = -std::log(3.0);
  CHECK(predict(model, phi) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("predict rejects non-finite features") {
  DifficultyModel model;
  FeatureVector phi{};
  phi[5] = std::nan("");
  CHECK_THROWS_AS(predict(model, phi), ValidationError);
}

TEST_CASE("predict ignores features with zero weight") {
  DifficultyModel model;
  model.weights[0] = 1.0;
  FeatureVector a{};
  a[0] = 0.4;
  a[7] = 1.0;
  FeatureVector b = a;
  b[7] = 500.0;  // weight 0
  CHECK(predict(model, a) == predict(model, b));
}

TEST_CASE("select_path: published examples and boundary inclusion") {
  DifficultyModel model;  // thresholds 0.3 / 0.7
  CHECK(select_path(model, 0.12) == PathKind::Simple);
  CHECK(select_path(model, 0.58) == PathKind::Medium);
  CHECK(select_path(model, 0.94) == PathKind::Hard);
  CHECK(select_path(model, 0.3) == PathKind::Medium);
  CHECK(select_path(model, 0.7) == PathKind::Hard);
}

TEST_CASE("select_path partitions [0,1]") {
  DifficultyModel model;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    double d = dist(rng);
    PathKind p = select_path(model, d);
    int matches = 0;
    if (d < model.tau1) matches += (p == PathKind::Simple);
    if (d >= model.tau1 && d < model.tau2) matches += (p == PathKind::Medium);
    if (d >= model.tau2) matches += (p == PathKind::Hard);
    CHECK(matches == 1);
  }
}

TEST_CASE("make_target: extremes, hand value, bounds") {
  CHECK(make_target({{}, 1.0, 0}, 0.5) == 1.0);
  CHECK(make_target({{}, 0.0, 1}, 0.5) == 0.0);
  CHECK(make_target({{}, 0.6, 1}, 0.5) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS(make_target({{}, 0.5, 0}, 1.5), ValidationError);

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    double t = dist(rng);
    double alpha = dist(rng);
    int acc = rng() % 2;
    double d = make_target({{}, t, acc}, alpha);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n01(0.0, 0.5);
  const double h = 1e-5;
  for (int probe = 0; probe < 30; ++probe) {
    std::vector<std::array<double, 24>> x;
    std::vector<double> t;
    std::uniform_real_distribution<double> tdist(0.0, 1.0);
    for (int i = 0; i < 16; ++i) {
      std::array<double, 24> row;
      for (auto& v : row) v = n01(rng);
      x.push_back(row);
      t.push_back(tdist(rng));
    }
    std::array<double, 24> w;
    for (auto& v : w) v = n01(rng);
    double b = n01(rng);
    double l2 = 0.01;

    std::array<double, 24> gw{};
    double gb = 0.0;
    training_loss_gradient(x, t, w, b, l2, &gw, &gb);

    std::array<double, 25> analytic{};
    std::array<double, 25> fd{};
    for (int k = 0; k < 24; ++k) analytic[k] = gw[k];
    analytic[24] = gb;
    for (int k = 0; k < 25; ++k) {
      auto perturbed = [&](double delta) {
        std::array<double, 24> wp = w;
        double bp = b;
        if (k < 24) wp[k] += delta; else bp += delta;
        return training_loss_gradient(x, t, wp, bp, l2, nullptr, nullptr);
      };
      fd[k] = (perturbed(h) - perturbed(-h)) / (2.0 * h);
    }
    double num = 0.0, den = 0.0;
    for (int k = 0; k < 25; ++k) {
      num += (analytic[k] - fd[k]) * (analytic[k] - fd[k]);
      den = std::max(den, std::abs(analytic[k]));
    }
    CHECK(std::sqrt(num) / std::max(den, 1e-12) < 1e-4);
  }
}

TEST_CASE("training recovers a planted model (small run)") {
  auto data = planted_set(600, 7, 0.0);
  TrainingConfig cfg = planted_config();
  cfg.lr = 3e-3;  // fewer steps than the full-size run, take larger ones
  auto [model, report] = train(data, cfg);
  CHECK(report.n_holdout == 60);
  CHECK(report.pearson_defined);
  CHECK(report.holdout_pearson_r > 0.98);
  CHECK(report.holdout_mse < 2e-3);
  // loss decreases overall
  CHECK(report.epoch_losses.back() < report.epoch_losses.front());
}

TEST_CASE("noisy targets still correlate on the held-out split") {
  auto data = planted_set(2000, 19, 0.1);
  TrainingConfig cfg = planted_config();
  auto [model, report] = train(data, cfg);
  CHECK(report.pearson_defined);
  CHECK(report.holdout_pearson_r >= 0.7);
}

TEST_CASE("training is reproducible given the seed") {
  auto data = planted_set(200, 21, 0.05);
  TrainingConfig cfg = planted_config();
  auto [m1, r1] = train(data, cfg);
  auto [m2, r2] = train(data, cfg);
  CHECK(m1.weights == m2.weights);
  CHECK(m1.bias == m2.bias);
  CHECK(r1.epoch_losses == r2.epoch_losses);
}

TEST_CASE("constant targets converge to the constant") {
  std::mt19937_64 rng(29);
  std::vector<TrainingExample> data;
  for (int i = 0; i < 400; ++i) {
    TrainingExample ex;
    ex.features = random_features(rng);
    ex.t_human_norm = 0.42;
    ex.acc_fast = 1;
    data.push_back(ex);
  }
  TrainingConfig cfg;
  cfg.alpha = 1.0;
  auto [model, report] = train(data, cfg);
  for (int i = 0; i < 50; ++i) {
    double d = predict(model, random_features(rng));
    CHECK(std::abs(d - 0.42) <= 0.02);
  }
  double norm = 0.0;
  for (double w : model.weights) norm += w * w;
  CHECK(std::sqrt(norm) < 0.2);
}

TEST_CASE("huge l2 drives the weights to zero") {
  auto data = planted_set(300, 31, 0.0);
  TrainingConfig cfg = planted_config();
  cfg.l2_lambda = 1e3;
  auto [model, report] = train(data, cfg);
  double norm = 0.0;
  for (double w : model.weights) norm += w * w;
  CHECK(std::sqrt(norm) < 1e-2);
}

TEST_CASE("training aborts on non-finite features") {
  auto data = planted_set(100, 37, 0.0);
  data[5].features[3] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(train(data, planted_config()), TrainingError);
}

TEST_CASE("training requires at least one batch of data") {
  auto data = planted_set(10, 41, 0.0);
  TrainingConfig cfg = planted_config();  // batch 32
  CHECK_THROWS_AS(train(data, cfg), TrainingError);
  CHECK_THROWS_AS(train({}, cfg), TrainingError);
}

// ---- grid search ----

namespace {

std::map<PathKind, double> call_costs() {
  return {{PathKind::Simple, 1.0}, {PathKind::Medium, 2.0}, {PathKind::Hard, 6.0}};
}

ThresholdEvalItem item(double d, double s, double m, double h) {
  ThresholdEvalItem it;
  it.d = d;
  it.accuracy = {{PathKind::Simple, s}, {PathKind::Medium, m}, {PathKind::Hard, h}};
  return it;
}

}  // namespace

TEST_CASE("grid search: singleton grids return the only candidate") {
  std::vector<ThresholdEvalItem> eval = {item(0.5, 1, 1, 1)};
  auto res = grid_search_thresholds(eval, {0.3}, {0.7}, call_costs());
  CHECK(res.tau1 == 0.3);
  CHECK(res.tau2 == 0.7);
  CHECK(res.table.size() == 1);
}

TEST_CASE("grid search: flat accuracy prefers the cheapest thresholds") {
  // every item succeeds on every path, so the objective is 1 / avg_cost;
  // (0.4, 0.8) routes the most items to cheap paths
  std::vector<ThresholdEvalItem> eval;
  for (double d : {0.25, 0.35, 0.65, 0.75}) eval.push_back(item(d, 1, 1, 1));
  auto res = grid_search_thresholds(eval, {0.2, 0.3, 0.4}, {0.6, 0.7, 0.8},
                                    call_costs());
  CHECK(res.tau1 == 0.4);
  CHECK(res.tau2 == 0.8);
  CHECK(res.table.size() == 9);
}

// Each boundary band punishes exactly one wrong threshold: an easy item in
// [0.2, 0.3) makes tau1 = 0.2 overpay, a Medium-only item in [0.3, 0.4)
// makes tau1 = 0.4 fail it, a Medium-capable item in [0.6, 0.7) makes
// tau2 = 0.6 overpay, a Hard-only item in [0.7, 0.8) makes tau2 = 0.8 fail
// it; ballast Hard items keep the accuracy term dominant.
std::vector<ThresholdEvalItem> paper_regime_eval() {
  std::vector<ThresholdEvalItem> eval;
  eval.push_back(item(0.25, 1, 1, 1));
  eval.push_back(item(0.35, 0, 1, 1));
  eval.push_back(item(0.65, 0, 1, 1));
  eval.push_back(item(0.75, 0, 0, 1));
  for (int i = 0; i < 3; ++i) eval.push_back(item(0.9, 0, 0, 1));
  return eval;
}

TEST_CASE("grid search: hard items that fail off-Hard peak at (0.3, 0.7)") {
  std::vector<ThresholdEvalItem> eval = paper_regime_eval();
  auto res = grid_search_thresholds(eval, {0.2, 0.3, 0.4}, {0.6, 0.7, 0.8},
                                    call_costs());
  CHECK(res.tau1 == 0.3);
  CHECK(res.tau2 == 0.7);

  // brute-force recomputation of the whole objective table
  for (const auto& cell : res.table) {
    double acc = 0.0, cost = 0.0;
    for (const auto& it : eval) {
      PathKind p = it.d < cell.tau1   ? PathKind::Simple
                   : it.d < cell.tau2 ? PathKind::Medium
                                      : PathKind::Hard;
      acc += it.accuracy.at(p);
      cost += call_costs().at(p);
    }
    acc /= eval.size();
    cost /= eval.size();
    CHECK(cell.accuracy == acc);
    CHECK(cell.avg_cost == cost);
    CHECK(cell.objective == acc / cost);
  }
}

TEST_CASE("grid search output is invariant to eval-set order") {
  std::vector<ThresholdEvalItem> eval;
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int i = 0; i < 60; ++i) {
    eval.push_back(item(dist(rng), rng() % 2, rng() % 2, rng() % 2));
  }
  auto a = grid_search_thresholds(eval, {0.2, 0.3, 0.4}, {0.6, 0.7, 0.8},
                                  call_costs());
  std::shuffle(eval.begin(), eval.end(), rng);
  auto b = grid_search_thresholds(eval, {0.2, 0.3, 0.4}, {0.6, 0.7, 0.8},
                                  call_costs());
  CHECK(a.tau1 == b.tau1);
  CHECK(a.tau2 == b.tau2);
  REQUIRE(a.table.size() == b.table.size());
  for (std::size_t i = 0; i < a.table.size(); ++i) {
    CHECK(a.table[i].objective == b.table[i].objective);
  }
}

TEST_CASE("grid search rejects empty inputs") {
  CHECK_THROWS_AS(grid_search_thresholds({}, {0.3}, {0.7}, call_costs()),
                  ValidationError);
  CHECK_THROWS_AS(
      grid_search_thresholds({item(0.5, 1, 1, 1)}, {}, {0.7}, call_costs()),
      ValidationError);
}

TEST_CASE("model file round-trip preserves every field") {
  DifficultyModel model;
  std::mt19937_64 rng(47);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (auto& w : model.weights) w = n01(rng);
  model.bias = n01(rng);
  model.tau1 = 0.25;
  model.tau2 = 0.75;
  for (auto& m : model.feat_mean) m = n01(rng);
  for (auto& s : model.feat_std) s = std::abs(n01(rng)) + 0.1;
  model.feature_pack_version = "1";
  model.trained_on = "fp123";
  model.seed = 99;

  DifficultyModel loaded = model_from_json_text(model_to_json_text(model));
  CHECK(loaded.weights == model.weights);
  CHECK(loaded.bias == model.bias);
  CHECK(loaded.tau1 == model.tau1);
  CHECK(loaded.tau2 == model.tau2);
  CHECK(loaded.feat_mean == model.feat_mean);
  CHECK(loaded.feat_std == model.feat_std);
  CHECK(loaded.feature_pack_version == model.feature_pack_version);
  CHECK(loaded.trained_on == model.trained_on);
  CHECK(loaded.seed == model.seed);
}

TEST_CASE("model validation rejects bad thresholds") {
  DifficultyModel model;
  model.tau1 = 0.7;
  model.tau2 = 0.3;
  CHECK_THROWS_AS(model.validate(), ConfigError);
}
