// SPDX-License-Identifier: Apache-2.0
#include "odar/backends.hpp"

#include <algorithm>
#include <cmath>

#include "odar/errors.hpp"
#include "odar/http_backend.hpp"
#include "odar/mock_backend.hpp"
#include "odar/text.hpp"

namespace odar {

void AgentConfig::validate() const {
  if (model_id.empty()) throw ConfigError("agent model_id is empty");
  if (endpoint.empty()) throw ConfigError("agent endpoint is empty");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (!(top_p > 0.0) || top_p > 1.0) throw ConfigError("top_p must be in (0, 1]");
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (!(timeout_s > 0.0)) throw ConfigError("timeout_s must be positive");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (endpoint == "mock" && mock_script_path.empty()) {
    throw ConfigError("mock endpoint requires mock_script_path");
  }
}

const char* to_string(FinishReason r) {
  switch (r) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Timeout: return "timeout";
    case FinishReason::Error: return "error";
  }
  return "error";
}

const char* to_string(Judgment j) {
  switch (j) {
    case Judgment::Correct: return "CORRECT";
    case Judgment::Incorrect: return "INCORRECT";
    case Judgment::Unparseable: return "UNPARSEABLE";
  }
  return "UNPARSEABLE";
}

double AgentBackend::effective_timeout(std::optional<double> override_s) const {
  double t = cfg_.timeout_s;
  if (override_s) t = std::min(t, *override_s);
  return std::max(t, 0.0);
}

std::unique_ptr<AgentBackend> make_backend(const AgentConfig& cfg) {
  cfg.validate();
  if (cfg.endpoint == "mock") {
    return std::make_unique<MockBackend>(cfg, MockScript::load(cfg.mock_script_path));
  }
  return std::make_unique<HttpBackend>(cfg);
}

void mark_special_tokens(TokenLogProbs& lp, const std::set<std::string>& special) {
  if (special.empty()) return;
  for (auto& tok : lp.entries) {
    if (special.count(tok.text)) tok.is_special = true;
  }
}

std::string trim_at_stop(const std::string& answer,
                         const std::vector<std::string>& stop_tokens) {
  std::size_t cut = std::string::npos;
  for (const auto& stop : stop_tokens) {
    if (stop.empty()) continue;
    std::size_t pos = answer.find(stop);
    if (pos != std::string::npos) cut = std::min(cut, pos);
  }
  if (cut == std::string::npos) return answer;
  return answer.substr(0, cut);
}

namespace prompts {

namespace {

constexpr const char* kFastSystem =
    "You are a rapid reasoning assistant optimized for speed and pattern "
    "recognition.\n"
    "Behavioral constraints:\n"
    "1. Limit reasoning to at most 3 intermediate steps.\n"
    "2. Prioritize retrieval and pattern matching over deliberation.\n"
    "3. Avoid excessive justification or self-correction.\n"
    "Output format: Answer: <response>";

constexpr const char* kSlowSolveSystem =
    "You are a thorough reasoning assistant. Solve the problem using "
    "rigorous, step-by-step analysis.\n"
    "Solution protocol:\n"
    "1. Analyze: identify key concepts, constraints, and edge cases.\n"
    "2. Strategize: select an appropriate solution approach.\n"
    "3. Execute: implement the solution with explicit intermediate steps.\n"
    "4. Verify: perform a self-check before finalizing.\n"
    "Output format: Answer: <response>";

constexpr const char* kSlowVerifySystem =
    "You are a careful verification assistant. Your task is to rigorously "
    "validate a proposed solution.\n"
    "Verification protocol:\n"
    "1. Restate: summarize the proposed answer and key reasoning steps.\n"
    "2. Validate: check each logical step for correctness.\n"
    "3. Judge: output CORRECT or INCORRECT.\n"
    "4. Correct: if incorrect, provide the corrected solution with "
    "justification.\n"
    "Output format: Judgment: <CORRECT|INCORRECT> followed by Answer: "
    "<response>";

}  // namespace

Prompt fast_solve(const std::string& query) {
  return Prompt{kFastSystem, query};
}

Prompt slow_solve(const std::string& query) {
  return Prompt{kSlowSolveSystem, query};
}

Prompt slow_verify(const std::string& query, const std::string& proposed) {
  return Prompt{kSlowVerifySystem,
                query + "\n\nProposed Answer: " + proposed};
}

}  // namespace prompts

namespace {

std::string fold_ascii(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

// byte offset just past the first boundary occurrence of `label` at or after
// `from` (folded comparison), or npos
std::size_t find_label_end(const std::string& folded, const std::string& label,
                           std::size_t from = 0) {
  std::size_t pos = folded.find(label, from);
  while (pos != std::string::npos) {
    bool head_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(folded[pos - 1]));
    if (head_ok) return pos + label.size();
    pos = folded.find(label, pos + 1);
  }
  return std::string::npos;
}

}  // namespace

VerifyResult verify(AgentBackend& backend, const std::string& query,
                    const std::string& proposed_answer,
                    std::optional<std::uint64_t> seed,
                    std::optional<double> timeout_override) {
  Prompt prompt = prompts::slow_verify(query, proposed_answer);
  VerifyResult result;
  result.generation = backend.generate(prompt, seed, timeout_override);
  const std::string& raw = result.generation.answer_text;
  std::string folded = fold_ascii(raw);

  std::size_t verdict_at = find_label_end(folded, "judgment:");
  if (verdict_at == std::string::npos) {
    result.judgment = Judgment::Unparseable;
    result.answer_text = raw;
    return result;
  }
  std::size_t line_end = folded.find('\n', verdict_at);
  std::string verdict = folded.substr(
      verdict_at, line_end == std::string::npos ? std::string::npos
                                                : line_end - verdict_at);
  if (verdict.find("incorrect") != std::string::npos) {
    result.judgment = Judgment::Incorrect;
  } else if (verdict.find("correct") != std::string::npos) {
    result.judgment = Judgment::Correct;
  } else {
    result.judgment = Judgment::Unparseable;
    result.answer_text = raw;
    return result;
  }

  std::size_t answer_at = find_label_end(folded, "answer:", verdict_at);
  if (answer_at == std::string::npos) {
    result.judgment = Judgment::Unparseable;
    result.answer_text = raw;
    return result;
  }
  while (answer_at < raw.size() &&
         std::isspace(static_cast<unsigned char>(raw[answer_at]))) {
    ++answer_at;
  }
  result.answer_offset = answer_at;
  result.answer_text = text::trim(raw.substr(answer_at));
  return result;
}

}  // namespace odar
