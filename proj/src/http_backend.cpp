// SPDX-License-Identifier: Apache-2.0
#include "odar/http_backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "odar/errors.hpp"
#include "odar/text.hpp"

namespace odar {

namespace {

constexpr const char* kCompletionsPath = "/v1/chat/completions";

}  // namespace

HttpBackend::HttpBackend(AgentConfig cfg)
    : AgentBackend(std::move(cfg)), in_flight_(cfg_.max_in_flight) {
  std::string url = cfg_.endpoint;
  // split scheme://host[:port] from an optional path prefix
  std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint must be an http(s) URL or 'mock': " + url);
  }
  std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    endpoint_.base = url;
    endpoint_.path = kCompletionsPath;
  } else {
    endpoint_.base = url.substr(0, path_start);
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    endpoint_.path = prefix.find("/chat/completions") != std::string::npos
                         ? prefix
                         : prefix + kCompletionsPath;
  }
}

std::string HttpBackend::build_request_body(const Prompt& prompt,
                                            const AgentConfig& cfg,
                                            std::optional<std::uint64_t> seed) {
  nlohmann::ordered_json body;
  body["model"] = cfg.model_id;
  body["messages"] = nlohmann::ordered_json::array();
  if (!prompt.system.empty()) {
    body["messages"].push_back({{"role", "system"}, {"content", prompt.system}});
  }
  body["messages"].push_back({{"role", "user"}, {"content", prompt.user}});
  body["temperature"] = cfg.temperature;
  body["top_p"] = cfg.top_p;
  body["max_tokens"] = cfg.max_tokens;
  body["logprobs"] = cfg.request_logprobs;
  if (!cfg.stop_tokens.empty()) body["stop"] = cfg.stop_tokens;
  if (seed) body["seed"] = *seed;
  return body.dump();
}

GenerationResult HttpBackend::parse_response_body(const std::string& body,
                                                  const AgentConfig& cfg) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponseError(std::string("response is not JSON: ") + e.what());
  }
  if (!j.contains("choices") || !j.at("choices").is_array() ||
      j.at("choices").empty()) {
    throw MalformedResponseError("response has no choices");
  }
  const auto& choice = j.at("choices").at(0);
  if (!choice.contains("message") || !choice.at("message").contains("content")) {
    throw MalformedResponseError("choice has no message content");
  }

  GenerationResult result;
  result.model_id = cfg.model_id;
  result.answer_text =
      trim_at_stop(choice.at("message").at("content").get<std::string>(),
                   cfg.stop_tokens);

  std::string finish = choice.value("finish_reason", "stop");
  result.finish_reason =
      finish == "length" ? FinishReason::Length : FinishReason::Stop;

  TokenLogProbs lp;
  if (choice.contains("logprobs") && choice.at("logprobs").is_object() &&
      choice.at("logprobs").contains("content") &&
      choice.at("logprobs").at("content").is_array()) {
    for (const auto& tok : choice.at("logprobs").at("content")) {
      TokenLogProb t;
      t.text = tok.value("token", std::string());
      if (tok.contains("logprob") && tok.at("logprob").is_number()) {
        t.logprob = tok.at("logprob").get<double>();
      } else {
        t.has_logprob = false;
      }
      lp.entries.push_back(std::move(t));
    }
  } else {
    // no logprobs in the response: keep the text, defer the fallback
    // decision to the orchestrator
    TokenLogProb t;
    t.text = result.answer_text;
    t.has_logprob = false;
    lp.entries.push_back(std::move(t));
  }
  mark_special_tokens(lp, cfg.special_token_texts);
  lp.char_len = static_cast<std::int64_t>(
      text::count_codepoints(text::nfc(result.answer_text)));
  result.logprobs = std::move(lp);
  return result;
}

GenerationResult HttpBackend::generate(const Prompt& prompt,
                                       std::optional<std::uint64_t> seed,
                                       std::optional<double> timeout_override) {
  detail::SemaphoreGuard guard(in_flight_);
  double timeout = effective_timeout(timeout_override);
  if (timeout <= 0.0) {
    GenerationResult result;
    result.model_id = cfg_.model_id;
    result.finish_reason = FinishReason::Timeout;
    return result;
  }

  httplib::Client client(endpoint_.base);
  client.set_connection_timeout(std::chrono::duration<double>(timeout));
  client.set_read_timeout(std::chrono::duration<double>(timeout));
  client.set_write_timeout(std::chrono::duration<double>(timeout));

  httplib::Headers headers;
  if (!cfg_.api_key_env.empty()) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (!key || !*key) {
      throw AuthError("environment variable " + cfg_.api_key_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string body = build_request_body(prompt, cfg_, seed);
  auto start = std::chrono::steady_clock::now();
  httplib::Result res =
      client.Post(endpoint_.path, headers, body, "application/json");
  double elapsed = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();

  if (!res) {
    // httplib folds timeouts into generic read/connect errors; use the
    // elapsed wall time to tell them apart
    if (elapsed >= timeout * 0.95) {
      GenerationResult result;
      result.model_id = cfg_.model_id;
      result.finish_reason = FinishReason::Timeout;
      result.latency_s = elapsed;
      return result;
    }
    throw NetworkError("request to " + endpoint_.base +
                       " failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 401 || res->status == 403) {
    throw AuthError("endpoint returned HTTP " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw NetworkError("endpoint returned HTTP " + std::to_string(res->status) +
                       ": " + res->body.substr(0, 200));
  }

  GenerationResult result = parse_response_body(res->body, cfg_);
  result.latency_s = elapsed;
  return result;
}

}  // namespace odar
