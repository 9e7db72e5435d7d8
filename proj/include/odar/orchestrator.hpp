// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "odar/backends.hpp"
#include "odar/difficulty.hpp"
#include "odar/features.hpp"
#include "odar/fusion.hpp"

namespace odar {

struct PathTimeouts {
  double fast_s = 10.0;
  double slow_s = 60.0;
  double global_s = 120.0;

  void validate() const;
};

struct OrchestratorConfig {
  AgentConfig fast;
  AgentConfig slow;
  DifficultyModel model;
  CalibrationStats stats;
  FusionConfig fusion;
  VocabularyPack vocab;
  int n_hard = 5;
  bool hard_parallel = true;
  PathTimeouts timeouts;
  std::map<PathKind, double> cost_weights = {
      {PathKind::Simple, 1.0}, {PathKind::Medium, 2.0}, {PathKind::Hard, 6.0}};
  std::optional<std::uint64_t> generation_seed;
  int batch_concurrency = 8;

  void validate() const;
};

struct CallRecord {
  std::string backend;  // model id
  std::string role;     // "fast_solve", "slow_verify", "slow_solve"
  double latency_s = 0.0;
  FinishReason finish_reason = FinishReason::Stop;
};

struct RoutingDecision {
  std::string query_id;
  double difficulty = 0.0;
  PathKind path = PathKind::Simple;
  bool forced_path = false;
  std::vector<CallRecord> calls;
  std::vector<Candidate> candidates;
  std::vector<EnergyScore> scores;
  std::optional<Judgment> verification;  // Medium path only
  std::string winner;
  bool fallback_used = false;
  int total_calls = 0;
  double total_cost = 0.0;
  // critical-path latency: sequential calls add, parallel groups take the
  // max. Deterministic on the mock stack.
  double wall_latency_s = 0.0;
  std::vector<std::string> warnings;
};

struct RouteOptions {
  std::string query_id;
  std::optional<PathKind> force_path;
  std::optional<int> n_hard;
};

// Chooses the winner once scoring is done. Candidates are winner-eligible
// when scorable and their usable-token fraction is at least
// 1 - missing_logprob_fallback_threshold; if none qualifies the first Slow
// candidate's answer wins with fallback_used set (Fast answer plus a warning
// when no Slow candidate exists).
struct FallbackOutcome {
  std::optional<std::size_t> winner_index;  // nullopt: nothing to return
  bool fallback_used = false;
  std::optional<std::string> warning;
};
FallbackOutcome apply_fallback(const std::vector<Candidate>& cands,
                               const std::vector<EnergyScore>& scores,
                               const FusionConfig& cfg);

// Sum over paths of probability * cost. Probabilities must sum to 1 within
// 1e-9.
double expected_calls(const std::map<PathKind, double>& distribution,
                      const std::map<PathKind, double>& cost_weights);

struct BatchItem {
  std::string id;
  QueryInput query;
};

struct BatchFailure {
  std::string id;
  std::string kind;
  std::string message;
};

struct BatchReport {
  std::size_t n = 0;
  std::map<PathKind, std::size_t> path_counts;
  double expected_calls = 0.0;   // from realized distribution and weights
  double empirical_calls = 0.0;  // mean observed total_calls
  double fallback_rate = 0.0;
  double latency_p50_s = 0.0;
  double latency_p95_s = 0.0;
  std::vector<BatchFailure> failures;
};

class Orchestrator {
 public:
  explicit Orchestrator(OrchestratorConfig cfg);

  // Executes one query end to end: estimate difficulty, pick the path, run
  // the call budget (1 / 2 / 1 + n_hard), fuse candidates, account cost.
  // Safe to call concurrently for distinct queries.
  RoutingDecision route(const QueryInput& q, const RouteOptions& opts = {});

  // Routes every query with bounded concurrency; per-query failures land in
  // the report instead of aborting the batch. Decisions are returned in
  // input order when `decisions` is non-null.
  BatchReport run_batch(const std::vector<BatchItem>& items,
                        std::vector<std::optional<RoutingDecision>>* decisions = nullptr);

  const OrchestratorConfig& config() const { return cfg_; }

 private:
  RoutingDecision route_impl(const QueryInput& q, const RouteOptions& opts);

  OrchestratorConfig cfg_;
  std::unique_ptr<AgentBackend> fast_;
  std::unique_ptr<AgentBackend> slow_;
};

}  // namespace odar
