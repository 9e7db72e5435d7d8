// SPDX-License-Identifier: Apache-2.0
#include "odar/mock_backend.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "odar/errors.hpp"
#include "odar/text.hpp"

namespace odar {

MockScript MockScript::from_json_text(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid mock script JSON: ") + e.what());
  }
  if (!j.is_array()) throw ConfigError("mock script must be a JSON array");
  MockScript script;
  for (const auto& entry : j) {
    MockTurn turn;
    turn.match = entry.value("match", std::string());
    turn.delay_s = entry.value("delay_s", 0.0);
    if (!entry.contains("tokens") || !entry.at("tokens").is_array()) {
      throw ConfigError("mock script entry missing tokens array");
    }
    for (const auto& tok : entry.at("tokens")) {
      if (!tok.is_array() || tok.size() < 2 || !tok.at(0).is_string()) {
        throw ConfigError("mock token must be [text, logprob, ...]");
      }
      TokenLogProb t;
      t.text = tok.at(0).get<std::string>();
      if (tok.at(1).is_null()) {
        t.has_logprob = false;
        t.logprob = 0.0;
      } else {
        t.logprob = tok.at(1).get<double>();
      }
      if (tok.size() > 2) t.is_special = tok.at(2).get<bool>();
      if (tok.size() > 3) t.has_logprob = tok.at(3).get<bool>();
      turn.tokens.push_back(std::move(t));
    }
    script.turns.push_back(std::move(turn));
  }
  return script;
}

MockScript MockScript::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open mock script: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

MockBackend::MockBackend(AgentConfig cfg, MockScript script)
    : AgentBackend(std::move(cfg)), script_(std::move(script)) {}

GenerationResult MockBackend::generate(const Prompt& prompt,
                                       std::optional<std::uint64_t> /*seed*/,
                                       std::optional<double> timeout_override) {
  const std::string haystack = prompt.system + "\n" + prompt.user;
  const MockTurn* turn = nullptr;
  for (const auto& t : script_.turns) {
    if (t.match.empty() || haystack.find(t.match) != std::string::npos) {
      turn = &t;
      break;
    }
  }
  if (!turn) {
    throw MalformedResponseError("no mock script entry matches prompt");
  }

  double timeout = effective_timeout(timeout_override);
  double wait = std::min(turn->delay_s, timeout);
  if (wait > 0.0) {
    std::this_thread::sleep_for(std::chrono::duration<double>(wait));
  }

  GenerationResult result;
  result.model_id = cfg_.model_id;
  if (turn->delay_s > timeout) {
    // nothing arrived before the deadline
    result.finish_reason = FinishReason::Timeout;
    result.latency_s = timeout;
    return result;
  }
  result.latency_s = turn->delay_s;
  result.finish_reason = FinishReason::Stop;

  TokenLogProbs lp;
  lp.entries = turn->tokens;
  mark_special_tokens(lp, cfg_.special_token_texts);

  std::string assembled;
  for (const auto& tok : lp.entries) {
    if (!tok.is_special) assembled += tok.text;
  }
  result.answer_text = trim_at_stop(assembled, cfg_.stop_tokens);
  // drop tokens that fall wholly beyond the stop cut so text and tokens agree
  if (result.answer_text.size() < assembled.size()) {
    std::size_t covered = 0;
    std::vector<TokenLogProb> kept;
    for (const auto& tok : lp.entries) {
      if (tok.is_special) {
        kept.push_back(tok);
        continue;
      }
      if (covered >= result.answer_text.size()) break;
      kept.push_back(tok);
      covered += tok.text.size();
    }
    lp.entries = std::move(kept);
  }
  lp.char_len = static_cast<std::int64_t>(
      text::count_codepoints(text::nfc(result.answer_text)));
  result.logprobs = std::move(lp);
  return result;
}

}  // namespace odar
