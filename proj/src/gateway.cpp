// SPDX-License-Identifier: Apache-2.0
#include "odar/gateway.hpp"

#include <httplib.h>

#include "odar/detail/semaphore.hpp"
#include "odar/errors.hpp"

namespace odar {

namespace {

// Score-endpoint payload: candidates with inline token lists.
//   {"candidates": [{"id"?, "generator", "origin"?, "sample_index"?,
//     "tokens": [[text, logprob, is_special?, has_logprob?], ...],
//     "char_len": N, "answer_text"?}, ...],
//    "lambda"?: 0.1,
//    "stats"?: {"<model>": {"mu": .., "sigma": ..}}}
std::vector<Candidate> parse_score_candidates(const nlohmann::json& j) {
  if (!j.contains("candidates") || !j.at("candidates").is_array() ||
      j.at("candidates").empty()) {
    throw ValidationError("score request needs a non-empty candidates array");
  }
  std::vector<Candidate> cands;
  int fallback_index = 0;
  for (const auto& cj : j.at("candidates")) {
    Candidate c;
    c.generator = cj.value("generator", std::string("unknown"));
    c.answer_text = cj.value("answer_text", std::string("<inline>"));
    c.origin = cj.value("origin", std::string("Slow")) == "Fast" ? Origin::Fast
                                                                 : Origin::Slow;
    c.sample_index = cj.value("sample_index", fallback_index);
    ++fallback_index;
    if (!cj.contains("tokens") || !cj.at("tokens").is_array()) {
      throw ValidationError("candidate lacks a tokens array");
    }
    for (const auto& t : cj.at("tokens")) {
      if (!t.is_array() || t.size() < 2) {
        throw ValidationError("token must be [text, logprob, ...]");
      }
      TokenLogProb tok;
      tok.text = t.at(0).get<std::string>();
      if (t.at(1).is_null()) {
        tok.has_logprob = false;
      } else {
        tok.logprob = t.at(1).get<double>();
      }
      if (t.size() > 2) tok.is_special = t.at(2).get<bool>();
      if (t.size() > 3) tok.has_logprob = t.at(3).get<bool>();
      c.logprobs.entries.push_back(std::move(tok));
    }
    if (!cj.contains("char_len")) {
      throw ValidationError("candidate lacks char_len");
    }
    c.logprobs.char_len = cj.at("char_len").get<std::int64_t>();
    cands.push_back(std::move(c));
  }
  return cands;
}

CalibrationStats parse_score_stats(const nlohmann::json& j, double lambda,
                                   const std::vector<Candidate>& cands) {
  if (j.contains("stats") && j.at("stats").is_object()) {
    CalibrationStats stats;
    stats.lambda_used = lambda;
    stats.corpus_fingerprint = "inline";
    for (const auto& [id, m] : j.at("stats").items()) {
      ModelStats ms;
      ms.mu = m.at("mu").get<double>();
      ms.sigma = m.at("sigma").get<double>();
      ms.n = m.value("n", 2);
      stats.per_model[id] = ms;
    }
    return stats;
  }
  std::vector<std::string> ids;
  for (const auto& c : cands) ids.push_back(c.generator);
  return CalibrationStats::identity(ids, lambda);
}

}  // namespace

struct Gateway::Impl {
  GatewayConfig cfg;
  std::shared_ptr<Orchestrator> orchestrator;
  std::string fingerprint;
  httplib::Server server;
  detail::Semaphore capacity;
  std::unique_ptr<TraceWriter> trace;
  std::thread serve_thread;
  std::string host;
  int port = 0;

  Impl(GatewayConfig c, std::shared_ptr<Orchestrator> orch, std::string fp)
      : cfg(std::move(c)),
        orchestrator(std::move(orch)),
        fingerprint(std::move(fp)),
        capacity(cfg.max_concurrent_requests) {
    cfg.validate();
    if (!cfg.trace_path.empty()) {
      trace = std::make_unique<TraceWriter>(cfg.trace_path);
    }
    auto colon = cfg.listen_addr.rfind(':');
    host = cfg.listen_addr.substr(0, colon);
    port = std::stoi(cfg.listen_addr.substr(colon + 1));
    install_routes();
  }

  static void reply_error(httplib::Response& res, int status,
                          const std::string& kind, const std::string& message) {
    res.status = status;
    res.set_content(ojson{{"error", kind}, {"message", message}}.dump(),
                    "application/json");
  }

  void install_routes() {
    server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(
          ojson{{"status", "ok"}, {"config_fingerprint", fingerprint}}.dump(),
          "application/json");
    });

    server.Post("/v1/route", [this](const httplib::Request& req,
                                    httplib::Response& res) {
      if (!capacity.try_acquire()) {
        reply_error(res, 503, "over_capacity", "too many concurrent requests");
        return;
      }
      struct Release {
        detail::Semaphore& s;
        ~Release() { s.release(); }
      } release{capacity};

      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::exception& e) {
        reply_error(res, 400, "bad_request", e.what());
        return;
      }
      if (!body.contains("query") || !body.at("query").is_string()) {
        reply_error(res, 400, "bad_request", "body needs a string 'query'");
        return;
      }
      QueryInput q;
      q.text = body.at("query").get<std::string>();
      q.has_image = body.value("has_image", false);
      RouteOptions opts;
      opts.query_id = body.value("query_id", std::string());
      if (body.contains("overrides") && body.at("overrides").is_object()) {
        const auto& ov = body.at("overrides");
        if (ov.contains("force_path")) {
          try {
            opts.force_path = path_from_string(ov.at("force_path").get<std::string>());
          } catch (const Error& e) {
            reply_error(res, 400, "bad_request", e.what());
            return;
          }
        }
        if (ov.contains("n_hard")) opts.n_hard = ov.at("n_hard").get<int>();
      }

      try {
        RoutingDecision dec = orchestrator->route(q, opts);
        if (trace) trace->append(dec);
        res.set_content(decision_to_json(dec).dump(), "application/json");
      } catch (const ValidationError& e) {
        reply_error(res, 400, e.kind(), e.what());
      } catch (const Error& e) {
        reply_error(res, 502, e.kind(), e.what());
      }
    });

    server.Post("/v1/score", [this](const httplib::Request& req,
                                    httplib::Response& res) {
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::exception& e) {
        reply_error(res, 400, "bad_request", e.what());
        return;
      }
      try {
        FusionConfig fusion = orchestrator->config().fusion;
        if (body.contains("lambda")) fusion.lambda = body.at("lambda").get<double>();
        fusion.validate();
        std::vector<Candidate> cands = parse_score_candidates(body);
        CalibrationStats stats = parse_score_stats(body, fusion.lambda, cands);
        auto [winner, scores] = select_best(cands, stats, fusion);
        ojson out;
        out["scores"] = score_report_to_json(cands, scores, winner);
        out["winner"] = winner;
        res.set_content(out.dump(), "application/json");
      } catch (const ValidationError& e) {
        reply_error(res, 400, e.kind(), e.what());
      } catch (const nlohmann::json::exception& e) {
        reply_error(res, 400, "bad_request", e.what());
      } catch (const Error& e) {
        reply_error(res, 502, e.kind(), e.what());
      }
    });
  }
};

Gateway::Gateway(GatewayConfig cfg, std::shared_ptr<Orchestrator> orchestrator,
                 std::string fingerprint)
    : impl_(std::make_unique<Impl>(std::move(cfg), std::move(orchestrator),
                                   std::move(fingerprint))) {}

Gateway::~Gateway() { stop(); }

void Gateway::run() {
  if (!impl_->server.listen(impl_->host, impl_->port)) {
    throw IoError("cannot listen on " + impl_->cfg.listen_addr);
  }
}

int Gateway::start_background() {
  int port = impl_->server.bind_to_any_port(impl_->host);
  if (port <= 0) throw IoError("cannot bind on " + impl_->host);
  impl_->serve_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void Gateway::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->serve_thread.joinable()) impl_->serve_thread.join();
}

}  // namespace odar
