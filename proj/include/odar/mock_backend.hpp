// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "odar/backends.hpp"

namespace odar {

// One scripted response: fires when `match` is a substring of the assembled
// prompt (system + "\n" + user). An empty match string matches everything.
struct MockTurn {
  std::string match;
  std::vector<TokenLogProb> tokens;
  double delay_s = 0.0;
};

struct MockScript {
  std::vector<MockTurn> turns;

  // Script file: JSON array of
  //   {"match": "...", "tokens": [[text, logprob, is_special?, has_logprob?],
  //    ...], "delay_s": 0.0}
  // A null logprob means has_logprob = false.
  static MockScript from_json_text(const std::string& json_text);
  static MockScript load(const std::string& path);
};

// Deterministic test backend: identical (script, seed, prompt) give an
// identical GenerationResult. delay_s is slept for real so timeout behaviour
// is observable, but the reported latency is the scripted value.
class MockBackend : public AgentBackend {
 public:
  MockBackend(AgentConfig cfg, MockScript script);

  GenerationResult generate(const Prompt& prompt,
                            std::optional<std::uint64_t> seed = {},
                            std::optional<double> timeout_override = {}) override;

 private:
  MockScript script_;
};

}  // namespace odar
