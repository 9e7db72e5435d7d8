// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <thread>

#include "odar/config.hpp"
#include "odar/json_io.hpp"
#include "odar/orchestrator.hpp"

namespace odar {

// HTTP surface over one orchestrator:
//   POST /v1/route  {query, has_image?, overrides?} -> RoutingDecision JSON
//   POST /v1/score  {candidates, lambda?, stats?}   -> fusion score report
//   GET  /healthz                                   -> ok + config fingerprint
// Requests beyond max_concurrent_requests get 503; backend failures map to
// 502 with the error kind. Route responses are byte-identical to serializing
// a direct Orchestrator::route call.
class Gateway {
 public:
  Gateway(GatewayConfig cfg, std::shared_ptr<Orchestrator> orchestrator,
          std::string fingerprint);
  ~Gateway();

  // Binds and serves on cfg.listen_addr. Blocks until stop().
  void run();

  // Binds an OS-assigned port on the configured host and serves in a
  // background thread; returns the bound port. Used by tests and returned
  // for logs.
  int start_background();

  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace odar
