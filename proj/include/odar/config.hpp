// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include "odar/orchestrator.hpp"

namespace odar {

struct GatewayConfig {
  std::string listen_addr = "127.0.0.1:8080";
  int max_concurrent_requests = 16;
  std::string trace_path;  // empty: tracing off

  void validate() const;
};

struct AppConfig {
  OrchestratorConfig orchestrator;
  GatewayConfig gateway;
};

// Loads a single JSON config document mirroring OrchestratorConfig plus
// gateway fields. model/stats/vocab can be inline objects or *_path
// references resolved relative to the config file. API keys come from the
// environment (api_key_env), never from the file.
AppConfig load_app_config(const std::string& path);

// Config fingerprint reported by /healthz: hash of the canonicalized
// orchestrator + gateway settings.
std::string config_fingerprint(const AppConfig& cfg);

}  // namespace odar
