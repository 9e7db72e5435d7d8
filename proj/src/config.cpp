// SPDX-License-Identifier: Apache-2.0
#include "odar/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "odar/calibration.hpp"
#include "odar/errors.hpp"

namespace odar {

void GatewayConfig::validate() const {
  if (max_concurrent_requests < 1) {
    throw ConfigError("max_concurrent_requests must be >= 1");
  }
  if (listen_addr.find(':') == std::string::npos) {
    throw ConfigError("listen_addr must be host:port");
  }
}

namespace {

AgentConfig parse_agent(const nlohmann::json& j, const std::string& which,
                        const std::filesystem::path& base_dir) {
  AgentConfig cfg;
  if (!j.is_object()) throw ConfigError(which + " agent config must be an object");
  cfg.model_id = j.value("model_id", std::string());
  cfg.endpoint = j.value("endpoint", std::string());
  cfg.api_key_env = j.value("api_key_env", std::string());
  cfg.temperature = j.value("temperature", cfg.temperature);
  cfg.top_p = j.value("top_p", cfg.top_p);
  cfg.max_tokens = j.value("max_tokens", cfg.max_tokens);
  cfg.timeout_s = j.value("timeout_s", cfg.timeout_s);
  cfg.max_in_flight = j.value("max_in_flight", cfg.max_in_flight);
  if (j.contains("stop_tokens")) {
    cfg.stop_tokens = j.at("stop_tokens").get<std::vector<std::string>>();
  }
  if (j.contains("special_token_texts")) {
    for (const auto& t : j.at("special_token_texts")) {
      cfg.special_token_texts.insert(t.get<std::string>());
    }
  }
  if (j.contains("mock_script")) {
    cfg.mock_script_path =
        (base_dir / j.at("mock_script").get<std::string>()).string();
  }
  return cfg;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

AppConfig load_app_config(const std::string& path) {
  std::filesystem::path cfg_path(path);
  if (cfg_path.extension() == ".toml") {
    throw ConfigError("TOML configs are not supported; use the JSON form");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(cfg_path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config JSON: ") + e.what());
  }
  std::filesystem::path base_dir = cfg_path.parent_path();

  AppConfig app;
  OrchestratorConfig& oc = app.orchestrator;
  if (!j.contains("fast") || !j.contains("slow")) {
    throw ConfigError("config requires fast and slow agent sections");
  }
  oc.fast = parse_agent(j.at("fast"), "fast", base_dir);
  oc.slow = parse_agent(j.at("slow"), "slow", base_dir);

  if (j.contains("defaults")) {
    const auto& d = j.at("defaults");
    // Table-1 style defaults: fast 0.2/512/0.9, slow 0.3/1024/0.95
    if (d.value("agent_presets", false)) {
      oc.fast.temperature = 0.2;
      oc.fast.max_tokens = 512;
      oc.fast.top_p = 0.9;
      oc.slow.temperature = 0.3;
      oc.slow.max_tokens = 1024;
      oc.slow.top_p = 0.95;
    }
  }

  if (j.contains("model")) {
    oc.model = model_from_json_text(j.at("model").dump());
  } else if (j.contains("model_path")) {
    oc.model = load_model((base_dir / j.at("model_path").get<std::string>()).string());
  }

  if (j.contains("fusion")) {
    const auto& f = j.at("fusion");
    oc.fusion.lambda = f.value("lambda", oc.fusion.lambda);
    oc.fusion.missing_logprob_fallback_threshold =
        f.value("missing_logprob_fallback_threshold",
                oc.fusion.missing_logprob_fallback_threshold);
    oc.fusion.min_sigma = f.value("min_sigma", oc.fusion.min_sigma);
  }

  if (j.contains("stats")) {
    oc.stats = stats_from_json_text(j.at("stats").dump());
  } else if (j.contains("stats_path")) {
    oc.stats = load_stats(
        (base_dir / j.at("stats_path").get<std::string>()).string(), oc.fusion);
  } else {
    // identity alignment; fine for single-model or mock stacks
    oc.stats = CalibrationStats::identity(
        {oc.fast.model_id, oc.slow.model_id}, oc.fusion.lambda);
  }
  if (oc.stats.lambda_used != oc.fusion.lambda) {
    throw CalibrationError("stats lambda does not match fusion lambda");
  }

  if (j.contains("vocab_path")) {
    oc.vocab = VocabularyPack::load(
        (base_dir / j.at("vocab_path").get<std::string>()).string());
  } else if (j.contains("vocab")) {
    oc.vocab = VocabularyPack::from_json_text(j.at("vocab").dump());
  } else {
    throw ConfigError("config requires vocab_path or an inline vocab pack");
  }

  oc.n_hard = j.value("n_hard", oc.n_hard);
  oc.hard_parallel = j.value("hard_parallel", oc.hard_parallel);
  if (j.contains("timeouts")) {
    const auto& t = j.at("timeouts");
    oc.timeouts.fast_s = t.value("fast_s", oc.timeouts.fast_s);
    oc.timeouts.slow_s = t.value("slow_s", oc.timeouts.slow_s);
    oc.timeouts.global_s = t.value("global_s", oc.timeouts.global_s);
  }
  if (j.contains("cost_preset")) {
    std::string preset = j.at("cost_preset").get<std::string>();
    if (preset == "calls") {
      oc.cost_weights = {{PathKind::Simple, 1.0},
                         {PathKind::Medium, 2.0},
                         {PathKind::Hard, 6.0}};
    } else if (preset == "table17") {
      // token-cost multipliers instead of call counts
      oc.cost_weights = {{PathKind::Simple, 1.0},
                         {PathKind::Medium, 4.2},
                         {PathKind::Hard, 16.0}};
    } else {
      throw ConfigError("unknown cost_preset: " + preset);
    }
  }
  if (j.contains("cost_weights")) {
    const auto& w = j.at("cost_weights");
    oc.cost_weights[PathKind::Simple] = w.value("simple", 1.0);
    oc.cost_weights[PathKind::Medium] = w.value("medium", 2.0);
    oc.cost_weights[PathKind::Hard] = w.value("hard", 6.0);
  }
  if (j.contains("generation_seed")) {
    oc.generation_seed = j.at("generation_seed").get<std::uint64_t>();
  }
  oc.batch_concurrency = j.value("batch_concurrency", oc.batch_concurrency);

  if (j.contains("gateway")) {
    const auto& g = j.at("gateway");
    app.gateway.listen_addr = g.value("listen_addr", app.gateway.listen_addr);
    app.gateway.max_concurrent_requests =
        g.value("max_concurrent_requests", app.gateway.max_concurrent_requests);
    if (g.contains("trace_path")) {
      app.gateway.trace_path =
          (base_dir / g.at("trace_path").get<std::string>()).string();
    }
  }

  oc.validate();
  app.gateway.validate();
  return app;
}

std::string config_fingerprint(const AppConfig& cfg) {
  nlohmann::ordered_json j;
  j["fast"] = cfg.orchestrator.fast.model_id + "@" + cfg.orchestrator.fast.endpoint;
  j["slow"] = cfg.orchestrator.slow.model_id + "@" + cfg.orchestrator.slow.endpoint;
  j["tau1"] = cfg.orchestrator.model.tau1;
  j["tau2"] = cfg.orchestrator.model.tau2;
  j["lambda"] = cfg.orchestrator.fusion.lambda;
  j["n_hard"] = cfg.orchestrator.n_hard;
  j["hard_parallel"] = cfg.orchestrator.hard_parallel;
  j["listen_addr"] = cfg.gateway.listen_addr;
  return fingerprint_hex(j.dump());
}

}  // namespace odar
