// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "odar/backends.hpp"
#include "odar/detail/semaphore.hpp"

namespace odar {

// Client for OpenAI-compatible chat-completion endpoints
// (POST <endpoint>/v1/chat/completions with logprobs enabled). Only the
// sampled token's logprob is consumed; top-k alternatives are ignored.
class HttpBackend : public AgentBackend {
 public:
  explicit HttpBackend(AgentConfig cfg);

  GenerationResult generate(const Prompt& prompt,
                            std::optional<std::uint64_t> seed = {},
                            std::optional<double> timeout_override = {}) override;

  // Parses a chat-completions response body into a result. Exposed so
  // recorded fixtures can be contract-tested without a socket.
  static GenerationResult parse_response_body(const std::string& body,
                                              const AgentConfig& cfg);

  static std::string build_request_body(const Prompt& prompt,
                                        const AgentConfig& cfg,
                                        std::optional<std::uint64_t> seed);

 private:
  struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;  // request path, default /v1/chat/completions
  };
  Endpoint endpoint_;
  detail::Semaphore in_flight_;
};

}  // namespace odar
