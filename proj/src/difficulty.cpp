// SPDX-License-Identifier: Apache-2.0
#include "odar/difficulty.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "odar/errors.hpp"

namespace odar {

const char* to_string(PathKind p) {
  switch (p) {
    case PathKind::Simple: return "Simple";
    case PathKind::Medium: return "Medium";
    case PathKind::Hard: return "Hard";
  }
  return "Simple";
}

PathKind path_from_string(const std::string& s) {
  std::string folded;
  for (char c : s) folded.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (folded == "simple") return PathKind::Simple;
  if (folded == "medium") return PathKind::Medium;
  if (folded == "hard") return PathKind::Hard;
  throw ValidationError("unknown path kind: " + s);
}

void DifficultyModel::validate() const {
  if (!(tau1 > 0.0 && tau1 < tau2 && tau2 < 1.0)) {
    throw ConfigError("thresholds must satisfy 0 < tau1 < tau2 < 1");
  }
  for (double w : weights) {
    if (!std::isfinite(w)) throw ConfigError("model weight is not finite");
  }
  if (!std::isfinite(bias)) throw ConfigError("model bias is not finite");
  for (double s : feat_std) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ConfigError("feature std must be positive and finite");
    }
  }
}

void TrainingConfig::validate() const {
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must be in [0, 1]");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (l2_lambda < 0.0) throw ConfigError("l2_lambda must be >= 0");
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double predict(const DifficultyModel& model, const FeatureVector& phi) {
  model.validate();
  double z = model.bias;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (!std::isfinite(phi[i])) {
      throw ValidationError("feature " + std::to_string(i + 1) + " is not finite");
    }
    z += model.weights[i] * (phi[i] - model.feat_mean[i]) / model.feat_std[i];
  }
  return sigmoid(z);
}

PathKind select_path(const DifficultyModel& model, double d) {
  if (d < model.tau1) return PathKind::Simple;
  if (d < model.tau2) return PathKind::Medium;
  return PathKind::Hard;
}

double make_target(const TrainingExample& ex, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw ValidationError("alpha must be in [0, 1]");
  if (ex.t_human_norm < 0.0 || ex.t_human_norm > 1.0) {
    throw ValidationError("t_human_norm must be in [0, 1]");
  }
  if (ex.acc_fast != 0 && ex.acc_fast != 1) {
    throw ValidationError("acc_fast must be 0 or 1");
  }
  return alpha * ex.t_human_norm + (1.0 - alpha) * (1.0 - ex.acc_fast);
}

double training_loss_gradient(const std::vector<std::array<double, 24>>& x,
                              const std::vector<double>& targets,
                              const std::array<double, 24>& w, double b,
                              double l2_lambda, std::array<double, 24>* grad_w,
                              double* grad_b) {
  if (x.size() != targets.size() || x.empty()) {
    throw ValidationError("loss needs matching non-empty inputs and targets");
  }
  const double n = static_cast<double>(x.size());
  std::array<double, 24> gw{};
  double gb = 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = b;
    for (std::size_t k = 0; k < 24; ++k) z += w[k] * x[i][k];
    double d = sigmoid(z);
    double err = d - targets[i];
    loss += err * err;
    double dz = 2.0 * err * d * (1.0 - d) / n;
    for (std::size_t k = 0; k < 24; ++k) gw[k] += dz * x[i][k];
    gb += dz;
  }
  loss /= n;
  for (std::size_t k = 0; k < 24; ++k) {
    loss += l2_lambda * w[k] * w[k];
    gw[k] += 2.0 * l2_lambda * w[k];
  }
  if (grad_w) *grad_w = gw;
  if (grad_b) *grad_b = gb;
  return loss;
}

namespace {

struct Standardizer {
  std::array<double, 24> mean{};
  std::array<double, 24> std{};

  static Standardizer fit(const std::vector<TrainingExample>& data,
                          const std::vector<std::size_t>& idx) {
    Standardizer s;
    const double n = static_cast<double>(idx.size());
    for (std::size_t i : idx) {
      for (std::size_t k = 0; k < 24; ++k) s.mean[k] += data[i].features[k];
    }
    for (std::size_t k = 0; k < 24; ++k) s.mean[k] /= n;
    for (std::size_t i : idx) {
      for (std::size_t k = 0; k < 24; ++k) {
        double d = data[i].features[k] - s.mean[k];
        s.std[k] += d * d;
      }
    }
    for (std::size_t k = 0; k < 24; ++k) {
      s.std[k] = std::sqrt(s.std[k] / n);
      if (s.std[k] == 0.0) s.std[k] = 1.0;  // constant feature
    }
    return s;
  }

  std::array<double, 24> apply(const FeatureVector& f) const {
    std::array<double, 24> out;
    for (std::size_t k = 0; k < 24; ++k) out[k] = (f[k] - mean[k]) / std[k];
    return out;
  }
};

double pearson(const std::vector<double>& a, const std::vector<double>& b,
               bool* defined) {
  *defined = false;
  if (a.size() != b.size() || a.size() < 2) return 0.0;
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
  double sa = 0.0, sb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += (a[i] - ma) * (a[i] - ma);
    sb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  if (sa == 0.0 || sb == 0.0) return 0.0;
  *defined = true;
  return sab / std::sqrt(sa * sb);
}

}  // namespace

std::pair<DifficultyModel, TrainingReport> train(
    const std::vector<TrainingExample>& data, const TrainingConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw TrainingError("training data is empty");
  if (data.size() < static_cast<std::size_t>(cfg.batch_size)) {
    throw TrainingError("need at least batch_size examples");
  }
  for (const auto& ex : data) {
    for (double f : ex.features) {
      if (!std::isfinite(f)) throw TrainingError("non-finite feature in data");
    }
  }

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::size_t n_holdout = std::max<std::size_t>(data.size() / 10, 1);
  if (n_holdout >= data.size()) n_holdout = 0;
  std::vector<std::size_t> train_idx(order.begin(), order.end() - n_holdout);
  std::vector<std::size_t> holdout_idx(order.end() - n_holdout, order.end());

  Standardizer stdz = Standardizer::fit(data, train_idx);
  std::vector<std::array<double, 24>> x_train;
  std::vector<double> t_train;
  x_train.reserve(train_idx.size());
  for (std::size_t i : train_idx) {
    x_train.push_back(stdz.apply(data[i].features));
    t_train.push_back(make_target(data[i], cfg.alpha));
  }

  std::array<double, 24> w{};
  double b = 0.0;
  std::array<double, 24> m_w{}, v_w{};
  double m_b = 0.0, v_b = 0.0;
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::uint64_t step = 0;

  TrainingReport report;
  report.seed = cfg.seed;
  report.n_train = train_idx.size();
  report.n_holdout = holdout_idx.size();

  std::vector<std::size_t> batch_order(x_train.size());
  std::iota(batch_order.begin(), batch_order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937_64 epoch_rng(cfg.seed + 0x9E3779B97F4A7C15ULL * (epoch + 1));
    std::shuffle(batch_order.begin(), batch_order.end(), epoch_rng);

    for (std::size_t begin = 0; begin < batch_order.size();
         begin += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end = std::min(batch_order.size(),
                                 begin + static_cast<std::size_t>(cfg.batch_size));
      std::vector<std::array<double, 24>> xb;
      std::vector<double> tb;
      xb.reserve(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        xb.push_back(x_train[batch_order[k]]);
        tb.push_back(t_train[batch_order[k]]);
      }
      std::array<double, 24> gw{};
      double gb = 0.0;
      training_loss_gradient(xb, tb, w, b, cfg.l2_lambda, &gw, &gb);

      ++step;
      double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t k = 0; k < 24; ++k) {
        m_w[k] = kBeta1 * m_w[k] + (1.0 - kBeta1) * gw[k];
        v_w[k] = kBeta2 * v_w[k] + (1.0 - kBeta2) * gw[k] * gw[k];
        w[k] -= cfg.lr * (m_w[k] / bc1) / (std::sqrt(v_w[k] / bc2) + kEps);
      }
      m_b = kBeta1 * m_b + (1.0 - kBeta1) * gb;
      v_b = kBeta2 * v_b + (1.0 - kBeta2) * gb * gb;
      b -= cfg.lr * (m_b / bc1) / (std::sqrt(v_b / bc2) + kEps);
    }

    double epoch_loss = training_loss_gradient(x_train, t_train, w, b,
                                               cfg.l2_lambda, nullptr, nullptr);
    if (!std::isfinite(epoch_loss)) {
      throw TrainingError("loss became non-finite at epoch " +
                          std::to_string(epoch + 1));
    }
    report.epoch_losses.push_back(epoch_loss);
  }

  DifficultyModel model;
  model.weights = w;
  model.bias = b;
  model.feat_mean = stdz.mean;
  model.feat_std = stdz.std;
  model.seed = cfg.seed;

  // held-out evaluation
  std::vector<double> pred, truth;
  pred.reserve(holdout_idx.size());
  double mse = 0.0;
  for (std::size_t i : holdout_idx) {
    double d = predict(model, data[i].features);
    double t = make_target(data[i], cfg.alpha);
    pred.push_back(d);
    truth.push_back(t);
    mse += (d - t) * (d - t);
  }
  if (!holdout_idx.empty()) mse /= static_cast<double>(holdout_idx.size());
  report.holdout_mse = mse;
  report.holdout_pearson_r = pearson(pred, truth, &report.pearson_defined);

  return {model, report};
}

GridSearchResult grid_search_thresholds(
    const std::vector<ThresholdEvalItem>& eval_set,
    const std::vector<double>& grid1, const std::vector<double>& grid2,
    const std::map<PathKind, double>& cost_model) {
  if (eval_set.empty()) throw ValidationError("eval set is empty");
  if (grid1.empty() || grid2.empty()) throw ValidationError("grids must be non-empty");
  for (PathKind p : {PathKind::Simple, PathKind::Medium, PathKind::Hard}) {
    if (!cost_model.count(p)) {
      throw ValidationError(std::string("cost model missing path ") + to_string(p));
    }
  }

  // canonical item order makes the aggregation independent of input order
  std::vector<ThresholdEvalItem> items = eval_set;
  std::sort(items.begin(), items.end(),
            [](const ThresholdEvalItem& a, const ThresholdEvalItem& b) {
              if (a.d != b.d) return a.d < b.d;
              auto key = [](const ThresholdEvalItem& it) {
                auto get = [&](PathKind p) {
                  auto found = it.accuracy.find(p);
                  return found == it.accuracy.end() ? 0.0 : found->second;
                };
                return std::array<double, 3>{get(PathKind::Simple),
                                             get(PathKind::Medium),
                                             get(PathKind::Hard)};
              };
              return key(a) < key(b);
            });

  std::vector<double> g1 = grid1, g2 = grid2;
  std::sort(g1.begin(), g1.end());
  std::sort(g2.begin(), g2.end());

  GridSearchResult result;
  bool have_best = false;
  GridCell best;

  for (double tau1 : g1) {
    for (double tau2 : g2) {
      if (!(tau1 < tau2)) continue;
      double acc_sum = 0.0;
      double cost_sum = 0.0;
      for (const auto& item : items) {
        PathKind p = item.d < tau1   ? PathKind::Simple
                     : item.d < tau2 ? PathKind::Medium
                                     : PathKind::Hard;
        auto found = item.accuracy.find(p);
        if (found == item.accuracy.end()) {
          throw ValidationError("eval item lacks accuracy for path " +
                                std::string(to_string(p)));
        }
        acc_sum += found->second;
        cost_sum += cost_model.at(p);
      }
      GridCell cell;
      cell.tau1 = tau1;
      cell.tau2 = tau2;
      cell.accuracy = acc_sum / static_cast<double>(items.size());
      cell.avg_cost = cost_sum / static_cast<double>(items.size());
      if (!(cell.avg_cost > 0.0)) {
        throw ValidationError("average cost must be positive");
      }
      cell.objective = cell.accuracy / cell.avg_cost;
      result.table.push_back(cell);

      bool better = false;
      if (!have_best) {
        better = true;
      } else if (cell.objective != best.objective) {
        better = cell.objective > best.objective;
      } else if (cell.avg_cost != best.avg_cost) {
        better = cell.avg_cost < best.avg_cost;
      } else if (cell.tau1 != best.tau1) {
        better = cell.tau1 < best.tau1;
      } else {
        better = cell.tau2 < best.tau2;
      }
      if (better) {
        best = cell;
        have_best = true;
      }
    }
  }
  if (!have_best) throw ValidationError("no grid point satisfies tau1 < tau2");
  result.tau1 = best.tau1;
  result.tau2 = best.tau2;
  return result;
}

std::string model_to_json_text(const DifficultyModel& model) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["tau1"] = model.tau1;
  j["tau2"] = model.tau2;
  j["feat_mean"] = model.feat_mean;
  j["feat_std"] = model.feat_std;
  j["feature_pack_version"] = model.feature_pack_version;
  j["trained_on"] = model.trained_on;
  j["seed"] = model.seed;
  return j.dump(2) + "\n";
}

DifficultyModel model_from_json_text(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid model JSON: ") + e.what());
  }
  DifficultyModel model;
  try {
    auto read_arr = [&](const char* key, std::array<double, 24>& out) {
      const auto& arr = j.at(key);
      if (!arr.is_array() || arr.size() != 24) {
        throw ConfigError(std::string(key) + " must be an array of 24 numbers");
      }
      for (std::size_t i = 0; i < 24; ++i) out[i] = arr.at(i).get<double>();
    };
    read_arr("weights", model.weights);
    read_arr("feat_mean", model.feat_mean);
    read_arr("feat_std", model.feat_std);
    model.bias = j.at("bias").get<double>();
    model.tau1 = j.at("tau1").get<double>();
    model.tau2 = j.at("tau2").get<double>();
    model.feature_pack_version = j.value("feature_pack_version", std::string());
    model.trained_on = j.value("trained_on", std::string());
    model.seed = j.value("seed", 0ULL);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model JSON missing fields: ") + e.what());
  }
  model.validate();
  return model;
}

void save_model(const DifficultyModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model file: " + path);
  out << model_to_json_text(model);
}

DifficultyModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json_text(buf.str());
}

}  // namespace odar
