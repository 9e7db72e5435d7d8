// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "odar/fusion.hpp"

namespace odar {

struct AgentConfig {
  std::string model_id;
  std::string endpoint;     // http(s) URL, or "mock"
  std::string api_key_env;  // env var holding the bearer token; empty = none
  double temperature = 0.2;
  double top_p = 0.9;
  int max_tokens = 512;
  std::vector<std::string> stop_tokens;
  bool request_logprobs = true;
  std::set<std::string> special_token_texts;
  double timeout_s = 10.0;
  int max_in_flight = 8;
  std::string mock_script_path;  // only for endpoint == "mock"

  void validate() const;
};

enum class FinishReason { Stop, Length, Timeout, Error };

const char* to_string(FinishReason r);

struct GenerationResult {
  std::string answer_text;
  TokenLogProbs logprobs;
  double latency_s = 0.0;
  std::string model_id;
  FinishReason finish_reason = FinishReason::Stop;
};

struct Prompt {
  std::string system;
  std::string user;
};

// Shareable handle over one model endpoint. generate() is safe to call
// concurrently; in-flight requests are capped at config().max_in_flight.
class AgentBackend {
 public:
  virtual ~AgentBackend() = default;

  // Returns the sampled answer with per-token logprobs. Runs for at most
  // min(config timeout, timeout_override) seconds; on expiry the result
  // carries FinishReason::Timeout with whatever arrived. Network, auth and
  // response-shape failures throw their typed errors instead.
  virtual GenerationResult generate(const Prompt& prompt,
                                    std::optional<std::uint64_t> seed = {},
                                    std::optional<double> timeout_override = {}) = 0;

  const AgentConfig& config() const { return cfg_; }

 protected:
  explicit AgentBackend(AgentConfig cfg) : cfg_(std::move(cfg)) {}
  double effective_timeout(std::optional<double> override_s) const;

  AgentConfig cfg_;
};

// Builds a mock or HTTP backend from the endpoint field.
std::unique_ptr<AgentBackend> make_backend(const AgentConfig& cfg);

enum class Judgment { Correct, Incorrect, Unparseable };

const char* to_string(Judgment j);

struct VerifyResult {
  GenerationResult generation;
  Judgment judgment = Judgment::Unparseable;
  std::string answer_text;  // remainder after "Answer:", or the full text
  // byte offset into generation.answer_text where the parsed answer begins;
  // 0 when the output was unparseable
  std::size_t answer_offset = 0;
};

// Issues the verification prompt for (query, proposed) and parses the
// "Judgment: <CORRECT|INCORRECT>" header case-insensitively. Unparseable
// output keeps the full generation text as the answer.
VerifyResult verify(AgentBackend& backend, const std::string& query,
                    const std::string& proposed_answer,
                    std::optional<std::uint64_t> seed = {},
                    std::optional<double> timeout_override = {});

// Default prompt templates for the two agent roles.
namespace prompts {
Prompt fast_solve(const std::string& query);
Prompt slow_solve(const std::string& query);
Prompt slow_verify(const std::string& query, const std::string& proposed);
}  // namespace prompts

// Marks tokens with text in `special` as is_special and recomputes nothing
// else; used by backends after token assembly.
void mark_special_tokens(TokenLogProbs& lp, const std::set<std::string>& special);

// Trims the assembled answer at the first occurrence of any stop token.
std::string trim_at_stop(const std::string& answer,
                         const std::vector<std::string>& stop_tokens);

}  // namespace odar
