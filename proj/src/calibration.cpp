// SPDX-License-Identifier: Apache-2.0
#include "odar/calibration.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "odar/errors.hpp"

namespace odar {

CalibrationStats estimate_stats(
    const std::map<std::string, std::vector<double>>& samples_by_model,
    double min_sigma) {
  if (!(min_sigma > 0.0)) throw ConfigError("min_sigma must be positive");
  CalibrationStats stats;
  for (const auto& [model_id, samples] : samples_by_model) {
    if (samples.size() < 2) {
      throw CalibrationError("model '" + model_id + "' has fewer than 2 samples");
    }
    double sum = 0.0;
    for (double v : samples) {
      if (!std::isfinite(v)) {
        throw CalibrationError("non-finite sample for model '" + model_id + "'");
      }
      sum += v;
    }
    double mu = sum / static_cast<double>(samples.size());
    double acc = 0.0;
    for (double v : samples) acc += (v - mu) * (v - mu);
    double sigma = std::sqrt(acc / static_cast<double>(samples.size()));
    ModelStats m;
    m.mu = mu;
    m.n = static_cast<std::int64_t>(samples.size());
    if (sigma < min_sigma) {
      m.sigma = min_sigma;
      m.degenerate = true;
    } else {
      m.sigma = sigma;
    }
    stats.per_model[model_id] = m;
  }
  return stats;
}

CalibrationRunReport run_calibration(const std::vector<QueryInput>& corpus,
                                     const std::vector<CalibrationTarget>& targets,
                                     const FusionConfig& cfg, int parallelism) {
  cfg.validate();
  if (corpus.empty()) throw ValidationError("calibration corpus is empty");
  if (targets.empty()) throw ValidationError("no backends given");
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");

  CalibrationRunReport report;
  std::map<std::string, std::vector<double>> samples;
  std::string fingerprint_payload;
  for (const auto& q : corpus) {
    fingerprint_payload += q.text;
    fingerprint_payload.push_back('\x1e');
  }

  for (const CalibrationTarget& target : targets) {
    AgentBackend* backend = target.backend;
    if (!backend) throw ValidationError("null backend in calibration targets");
    std::function<Prompt(const std::string&)> make_prompt = target.make_prompt;
    if (!make_prompt) {
      make_prompt = [](const std::string& q) { return prompts::fast_solve(q); };
    }
    const std::string model_id = backend->config().model_id;
    fingerprint_payload += model_id;
    fingerprint_payload.push_back('\x1f');
    std::vector<double> energies(corpus.size(),
                                 std::numeric_limits<double>::quiet_NaN());
    std::vector<uint8_t> skipped(corpus.size(), 0);
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::string first_error;

    auto worker = [&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= corpus.size()) return;
        try {
          GenerationResult r = backend->generate(make_prompt(corpus[i].text));
          if (r.finish_reason == FinishReason::Timeout ||
              r.answer_text.empty()) {
            skipped[i] = 1;
            continue;
          }
          Candidate cand;
          cand.answer_text = r.answer_text;
          cand.generator = model_id;
          cand.logprobs = r.logprobs;
          EnergyScore s = score_candidate(
              cand, CalibrationStats::identity({model_id}, cfg.lambda), cfg);
          if (!s.scorable) {
            skipped[i] = 1;
            continue;
          }
          energies[i] = s.raw_free_energy;
        } catch (const Error& e) {
          std::lock_guard lock(err_mu);
          if (first_error.empty()) first_error = e.what();
          skipped[i] = 1;
        }
      }
    };

    std::vector<std::thread> threads;
    int n_threads = std::min<std::size_t>(parallelism, corpus.size());
    threads.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    std::vector<double> ok;
    int n_skipped = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (skipped[i]) {
        ++n_skipped;
      } else {
        ok.push_back(energies[i]);
      }
    }
    report.skipped_by_model[model_id] = n_skipped;
    if (ok.size() < 2) {
      std::string detail = first_error.empty() ? "" : " (" + first_error + ")";
      throw CalibrationError("backend '" + model_id +
                             "' produced fewer than 2 scorable samples" + detail);
    }
    samples[model_id] = std::move(ok);
  }

  report.stats = estimate_stats(samples, cfg.min_sigma);
  report.stats.lambda_used = cfg.lambda;
  report.stats.corpus_fingerprint = fingerprint_hex(fingerprint_payload);
  std::time_t now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  report.stats.created_at = buf;
  return report;
}

std::string fingerprint_hex(const std::string& payload) {
  // FNV-1a 64-bit
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : payload) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

std::string stats_to_json_text(const CalibrationStats& stats) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["lambda_used"] = stats.lambda_used;
  j["corpus_fingerprint"] = stats.corpus_fingerprint;
  j["created_at"] = stats.created_at;
  nlohmann::ordered_json models;
  for (const auto& [id, m] : stats.per_model) {
    models[id] = {{"mu", m.mu},
                  {"sigma", m.sigma},
                  {"n", m.n},
                  {"degenerate", m.degenerate}};
  }
  j["per_model"] = std::move(models);
  return j.dump(2) + "\n";
}

CalibrationStats stats_from_json_text(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw CalibrationError(std::string("invalid stats JSON: ") + e.what());
  }
  CalibrationStats stats;
  if (!j.contains("per_model") || !j.at("per_model").is_object()) {
    throw CalibrationError("stats file missing per_model");
  }
  stats.lambda_used = j.value("lambda_used", 0.1);
  stats.corpus_fingerprint = j.value("corpus_fingerprint", std::string());
  stats.created_at = j.value("created_at", std::string());
  for (const auto& [id, m] : j.at("per_model").items()) {
    ModelStats ms;
    ms.mu = m.at("mu").get<double>();
    ms.sigma = m.at("sigma").get<double>();
    ms.n = m.value("n", 0);
    ms.degenerate = m.value("degenerate", false);
    if (ms.n < 2) {
      throw CalibrationError("stats for model '" + id + "' have n < 2");
    }
    if (!std::isfinite(ms.mu) || !std::isfinite(ms.sigma) || ms.sigma <= 0.0) {
      throw CalibrationError("stats for model '" + id + "' are not finite");
    }
    stats.per_model[id] = ms;
  }
  return stats;
}

void save_stats(const CalibrationStats& stats, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write stats file: " + path);
  out << stats_to_json_text(stats);
}

CalibrationStats load_stats(const std::string& path, const FusionConfig& active) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open stats file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  CalibrationStats stats = stats_from_json_text(buf.str());
  if (stats.lambda_used != active.lambda) {
    throw CalibrationError(
        "stats were calibrated under lambda=" + std::to_string(stats.lambda_used) +
        " but the active fusion lambda is " + std::to_string(active.lambda));
  }
  return stats;
}

}  // namespace odar
