// SPDX-License-Identifier: Apache-2.0
#include "odar/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <thread>

#include "odar/calibration.hpp"
#include "odar/errors.hpp"
#include "odar/text.hpp"

namespace odar {

void PathTimeouts::validate() const {
  if (!(fast_s > 0.0) || !(slow_s > 0.0) || !(global_s > 0.0)) {
    throw ConfigError("timeouts must be positive");
  }
  if (fast_s > global_s || slow_s > global_s) {
    throw ConfigError("per-call timeouts must not exceed global_s");
  }
}

void OrchestratorConfig::validate() const {
  fast.validate();
  slow.validate();
  model.validate();
  fusion.validate();
  vocab.validate();
  timeouts.validate();
  if (n_hard < 1) throw ConfigError("n_hard must be >= 1");
  if (batch_concurrency < 1) throw ConfigError("batch_concurrency must be >= 1");
  for (PathKind p : {PathKind::Simple, PathKind::Medium, PathKind::Hard}) {
    if (!cost_weights.count(p)) {
      throw ConfigError(std::string("cost_weights missing path ") + to_string(p));
    }
  }
}

double expected_calls(const std::map<PathKind, double>& distribution,
                      const std::map<PathKind, double>& cost_weights) {
  double total_p = 0.0;
  for (const auto& [path, p] : distribution) {
    if (p < 0.0 || !std::isfinite(p)) {
      throw ValidationError("path probabilities must be finite and >= 0");
    }
    total_p += p;
  }
  if (std::abs(total_p - 1.0) > 1e-9) {
    throw ValidationError("path probabilities must sum to 1");
  }
  double out = 0.0;
  for (const auto& [path, p] : distribution) {
    auto w = cost_weights.find(path);
    if (w == cost_weights.end()) {
      throw ValidationError(std::string("cost weight missing for path ") +
                            to_string(path));
    }
    out += p * w->second;
  }
  return out;
}

namespace {

// byte offset where the substantive answer starts, skipping an optional
// leading "Answer:" template label
std::size_t answer_start_offset(const std::string& raw) {
  std::size_t i = 0;
  while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
  static constexpr const char* kLabel = "answer:";
  static constexpr std::size_t kLabelLen = 7;
  if (raw.size() - i < kLabelLen) return 0;
  for (std::size_t k = 0; k < kLabelLen; ++k) {
    if (std::tolower(static_cast<unsigned char>(raw[i + k])) != kLabel[k]) return 0;
  }
  i += kLabelLen;
  while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
  return i;
}

// Builds a scoring candidate from a generation. Tokens that belong to the
// template prefix (anything before answer_offset in the assembled text) are
// excluded from scoring as structured tokens; char_len covers the answer
// text only.
std::optional<Candidate> make_candidate(const GenerationResult& r,
                                        std::size_t answer_offset,
                                        std::string answer_text, Origin origin,
                                        int sample_index) {
  answer_text = text::trim(answer_text);
  if (answer_text.empty()) return std::nullopt;
  Candidate cand;
  cand.answer_text = answer_text;
  cand.generator = r.model_id;
  cand.origin = origin;
  cand.sample_index = sample_index;
  cand.logprobs = r.logprobs;
  if (answer_offset > 0) {
    std::size_t covered = 0;
    for (auto& tok : cand.logprobs.entries) {
      if (tok.is_special) continue;
      if (covered + tok.text.size() <= answer_offset) tok.is_special = true;
      covered += tok.text.size();
      if (covered >= answer_offset) break;
    }
  }
  cand.logprobs.char_len =
      static_cast<std::int64_t>(text::count_codepoints(text::nfc(answer_text)));
  return cand;
}

std::optional<Candidate> candidate_from_generation(const GenerationResult& r,
                                                   Origin origin,
                                                   int sample_index) {
  std::size_t offset = answer_start_offset(r.answer_text);
  return make_candidate(r, offset, r.answer_text.substr(offset), origin,
                        sample_index);
}

// structural critical-path budget for one route() invocation
struct Budget {
  double global_s;
  double elapsed = 0.0;
  double remaining() const { return std::max(global_s - elapsed, 0.0); }
};

}  // namespace

FallbackOutcome apply_fallback(const std::vector<Candidate>& cands,
                               const std::vector<EnergyScore>& scores,
                               const FusionConfig& cfg) {
  const double min_fraction = 1.0 - cfg.missing_logprob_fallback_threshold;
  auto beats = [&](std::size_t a, std::size_t b) {
    double fa = *scores[a].standardized;
    double fb = *scores[b].standardized;
    if (fa != fb) return fa < fb;
    if (cands[a].origin != cands[b].origin) return cands[a].origin == Origin::Slow;
    return cands[a].sample_index < cands[b].sample_index;
  };

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (!scores[i].scorable) continue;
    if (scores[i].usable_token_fraction < min_fraction) continue;
    if (!best || beats(i, *best)) best = i;
  }
  if (best) return FallbackOutcome{best, false, std::nullopt};

  // nothing winner-eligible: hand the decision to the Slow agent
  std::optional<std::size_t> slow;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (cands[i].origin != Origin::Slow) continue;
    if (!slow || cands[i].sample_index < cands[*slow].sample_index) slow = i;
  }
  if (slow) return FallbackOutcome{slow, true, std::nullopt};

  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (cands[i].origin == Origin::Fast) {
      return FallbackOutcome{i, true,
                             "no Slow candidate available; falling back to the "
                             "Fast answer"};
    }
  }
  return FallbackOutcome{std::nullopt, true, "no candidates available"};
}

Orchestrator::Orchestrator(OrchestratorConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.stats.lambda_used != cfg_.fusion.lambda) {
    throw CalibrationError("calibration stats lambda does not match fusion lambda");
  }
  cfg_.stats.for_model(cfg_.fast.model_id);
  cfg_.stats.for_model(cfg_.slow.model_id);
  fast_ = make_backend(cfg_.fast);
  slow_ = make_backend(cfg_.slow);
}

RoutingDecision Orchestrator::route(const QueryInput& q, const RouteOptions& opts) {
  return route_impl(q, opts);
}

RoutingDecision Orchestrator::route_impl(const QueryInput& q,
                                         const RouteOptions& opts) {
  RoutingDecision dec;
  dec.query_id = opts.query_id.empty() ? fingerprint_hex(q.text) : opts.query_id;

  FeatureVector phi = extract_features(q, cfg_.vocab);
  dec.difficulty = predict(cfg_.model, phi);
  if (opts.force_path) {
    dec.path = *opts.force_path;
    dec.forced_path = true;
  } else {
    dec.path = select_path(cfg_.model, dec.difficulty);
  }

  const int n_hard = std::max(opts.n_hard.value_or(cfg_.n_hard), 1);
  Budget budget{cfg_.timeouts.global_s};

  // issues one call against the current budget; a spent budget yields a
  // synthesized timeout record (the call still counts as issued)
  auto run_call = [&](AgentBackend& backend, const Prompt& prompt,
                      const char* role,
                      double role_timeout) -> std::optional<GenerationResult> {
    if (budget.remaining() <= 0.0) {
      dec.calls.push_back(
          {backend.config().model_id, role, 0.0, FinishReason::Timeout});
      return std::nullopt;
    }
    double effective = std::min(role_timeout, budget.remaining());
    auto start = std::chrono::steady_clock::now();
    try {
      GenerationResult r =
          backend.generate(prompt, cfg_.generation_seed, effective);
      budget.elapsed += r.latency_s;
      dec.calls.push_back(
          {backend.config().model_id, role, r.latency_s, r.finish_reason});
      return r;
    } catch (const Error& e) {
      // charge the real time the failed call burned, at millisecond grain so
      // instant failures stay deterministic
      double real = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count();
      double charged =
          std::round(std::min(real, effective) * 1000.0) / 1000.0;
      budget.elapsed += charged;
      dec.calls.push_back(
          {backend.config().model_id, role, charged, FinishReason::Error});
      dec.warnings.push_back(std::string(role) + " failed: " + e.what());
      return std::nullopt;
    }
  };

  std::optional<GenerationResult> fast_res =
      run_call(*fast_, prompts::fast_solve(q.text), "fast_solve",
               cfg_.timeouts.fast_s);
  std::optional<Candidate> fast_cand;
  if (fast_res && fast_res->finish_reason != FinishReason::Error) {
    fast_cand = candidate_from_generation(*fast_res, Origin::Fast, 0);
  }

  if (dec.path == PathKind::Simple) {
    // the Fast answer wins unconditionally
    if (fast_cand) {
      dec.candidates.push_back(*fast_cand);
      dec.scores.push_back(
          score_candidate(*fast_cand, cfg_.stats, cfg_.fusion));
      dec.winner = fast_cand->answer_text;
    } else if (fast_res && fast_res->finish_reason == FinishReason::Timeout) {
      dec.warnings.push_back("fast call timed out with no usable answer");
    } else if (!fast_res) {
      throw RoutingError("fast backend failed on the Simple path: " +
                         (dec.warnings.empty() ? "unknown" : dec.warnings.back()));
    }
  } else if (dec.path == PathKind::Medium) {
    std::string proposed = fast_cand ? fast_cand->answer_text : "";
    std::optional<VerifyResult> vres;
    if (budget.remaining() <= 0.0) {
      dec.calls.push_back(
          {cfg_.slow.model_id, "slow_verify", 0.0, FinishReason::Timeout});
    } else {
      double effective = std::min(cfg_.timeouts.slow_s, budget.remaining());
      try {
        VerifyResult v =
            verify(*slow_, q.text, proposed, cfg_.generation_seed, effective);
        budget.elapsed += v.generation.latency_s;
        dec.calls.push_back({cfg_.slow.model_id, "slow_verify",
                             v.generation.latency_s,
                             v.generation.finish_reason});
        if (v.generation.finish_reason != FinishReason::Timeout) {
          vres = std::move(v);
        }
      } catch (const Error& e) {
        budget.elapsed += effective;
        dec.calls.push_back(
            {cfg_.slow.model_id, "slow_verify", effective, FinishReason::Error});
        dec.warnings.push_back(std::string("slow_verify failed: ") + e.what());
      }
    }

    std::optional<Candidate> slow_cand;
    if (vres) {
      dec.verification = vres->judgment;
      slow_cand = make_candidate(vres->generation, vres->answer_offset,
                                 vres->answer_text, Origin::Slow, 1);
    }

    if (fast_cand) dec.candidates.push_back(*fast_cand);
    if (slow_cand) dec.candidates.push_back(*slow_cand);
    if (dec.candidates.empty()) {
      if (std::all_of(dec.calls.begin(), dec.calls.end(), [](const CallRecord& c) {
            return c.finish_reason == FinishReason::Error;
          })) {
        throw RoutingError("both backends failed on the Medium path");
      }
      dec.fallback_used = true;
      dec.warnings.push_back("no candidates produced; empty decision");
    } else {
      dec.scores = score_candidates(dec.candidates, cfg_.stats, cfg_.fusion);
      bool agreed = fast_cand && slow_cand && vres &&
                    vres->judgment == Judgment::Correct &&
                    text::normalize_answer(fast_cand->answer_text) ==
                        text::normalize_answer(slow_cand->answer_text);
      if (agreed) {
        // verification confirms the Fast hypothesis; keep the cheap answer
        dec.winner = fast_cand->answer_text;
      } else {
        FallbackOutcome out = apply_fallback(dec.candidates, dec.scores, cfg_.fusion);
        dec.fallback_used = out.fallback_used;
        if (out.warning) dec.warnings.push_back(*out.warning);
        const double min_fraction =
            1.0 - cfg_.fusion.missing_logprob_fallback_threshold;
        auto eligible = [&](std::size_t i) {
          return dec.scores[i].scorable &&
                 dec.scores[i].usable_token_fraction >= min_fraction;
        };
        if (!out.fallback_used && dec.candidates.size() == 2 && eligible(0) &&
            eligible(1)) {
          // both candidates live: decide via Boltzmann pair weights
          // (argmax weight == argmin energy)
          bool first_is_fast = dec.candidates[0].origin == Origin::Fast;
          double f_fast = *dec.scores[first_is_fast ? 0 : 1].standardized;
          double f_slow = *dec.scores[first_is_fast ? 1 : 0].standardized;
          auto [w_fast, w_slow] = pair_weights(f_fast, f_slow);
          dec.winner = w_fast > w_slow
                           ? dec.candidates[first_is_fast ? 0 : 1].answer_text
                           : dec.candidates[first_is_fast ? 1 : 0].answer_text;
        } else if (out.winner_index) {
          dec.winner = dec.candidates[*out.winner_index].answer_text;
        }
      }
    }
  } else {  // Hard
    std::vector<std::optional<GenerationResult>> slow_results(n_hard);
    Prompt prompt = prompts::slow_solve(q.text);
    if (cfg_.hard_parallel) {
      double remaining = budget.remaining();
      if (remaining <= 0.0) {
        for (int i = 0; i < n_hard; ++i) {
          dec.calls.push_back(
              {cfg_.slow.model_id, "slow_solve", 0.0, FinishReason::Timeout});
        }
      } else {
        double effective = std::min(cfg_.timeouts.slow_s, remaining);
        std::vector<std::future<GenerationResult>> futures;
        futures.reserve(n_hard);
        for (int i = 0; i < n_hard; ++i) {
          futures.push_back(std::async(std::launch::async, [&, effective] {
            return slow_->generate(prompt, cfg_.generation_seed, effective);
          }));
        }
        double group_latency = 0.0;
        for (int i = 0; i < n_hard; ++i) {
          try {
            GenerationResult r = futures[static_cast<std::size_t>(i)].get();
            group_latency = std::max(group_latency, r.latency_s);
            dec.calls.push_back({cfg_.slow.model_id, "slow_solve", r.latency_s,
                                 r.finish_reason});
            slow_results[static_cast<std::size_t>(i)] = std::move(r);
          } catch (const Error& e) {
            group_latency = std::max(group_latency, effective);
            dec.calls.push_back({cfg_.slow.model_id, "slow_solve", effective,
                                 FinishReason::Error});
            dec.warnings.push_back(std::string("slow_solve failed: ") + e.what());
          }
        }
        budget.elapsed += group_latency;
      }
    } else {
      for (int i = 0; i < n_hard; ++i) {
        slow_results[static_cast<std::size_t>(i)] =
            run_call(*slow_, prompt, "slow_solve", cfg_.timeouts.slow_s);
      }
    }

    if (fast_cand) dec.candidates.push_back(*fast_cand);
    for (int i = 0; i < n_hard; ++i) {
      const auto& r = slow_results[static_cast<std::size_t>(i)];
      if (!r || r->finish_reason == FinishReason::Error) continue;
      if (auto cand = candidate_from_generation(*r, Origin::Slow, i + 1)) {
        dec.candidates.push_back(*cand);
      }
    }

    if (dec.candidates.empty()) {
      if (std::all_of(dec.calls.begin(), dec.calls.end(), [](const CallRecord& c) {
            return c.finish_reason == FinishReason::Error;
          })) {
        throw RoutingError("both backends failed on the Hard path");
      }
      dec.fallback_used = true;
      dec.warnings.push_back("no candidates produced; empty decision");
    } else {
      dec.scores = score_candidates(dec.candidates, cfg_.stats, cfg_.fusion);
      FallbackOutcome out = apply_fallback(dec.candidates, dec.scores, cfg_.fusion);
      dec.fallback_used = out.fallback_used;
      if (out.warning) dec.warnings.push_back(*out.warning);
      if (out.winner_index) dec.winner = dec.candidates[*out.winner_index].answer_text;
    }
  }

  dec.total_calls = static_cast<int>(dec.calls.size());
  dec.total_cost = cfg_.cost_weights.at(dec.path);
  dec.wall_latency_s = budget.elapsed;
  return dec;
}

BatchReport Orchestrator::run_batch(
    const std::vector<BatchItem>& items,
    std::vector<std::optional<RoutingDecision>>* decisions) {
  if (items.empty()) throw ValidationError("batch is empty");

  std::vector<std::optional<RoutingDecision>> results(items.size());
  std::vector<std::optional<BatchFailure>> failures(items.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= items.size()) return;
      RouteOptions opts;
      opts.query_id = items[i].id;
      try {
        results[i] = route(items[i].query, opts);
      } catch (const Error& e) {
        failures[i] = BatchFailure{items[i].id, e.kind(), e.what()};
      } catch (const std::exception& e) {
        failures[i] = BatchFailure{items[i].id, "internal", e.what()};
      }
    }
  };

  std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(cfg_.batch_concurrency),
                            items.size());
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  BatchReport report;
  report.n = items.size();
  std::vector<double> latencies;
  std::size_t n_ok = 0;
  std::size_t n_fallback = 0;
  double call_sum = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (failures[i]) {
      report.failures.push_back(*failures[i]);
      continue;
    }
    const RoutingDecision& d = *results[i];
    ++n_ok;
    report.path_counts[d.path] += 1;
    call_sum += d.total_calls;
    if (d.fallback_used) ++n_fallback;
    latencies.push_back(d.wall_latency_s);
  }

  if (n_ok > 0) {
    std::map<PathKind, double> dist;
    for (const auto& [path, count] : report.path_counts) {
      dist[path] = static_cast<double>(count) / static_cast<double>(n_ok);
    }
    // fill missing paths with zero probability
    for (PathKind p : {PathKind::Simple, PathKind::Medium, PathKind::Hard}) {
      dist.emplace(p, 0.0);
    }
    report.expected_calls = expected_calls(dist, cfg_.cost_weights);
    report.empirical_calls = call_sum / static_cast<double>(n_ok);
    report.fallback_rate =
        static_cast<double>(n_fallback) / static_cast<double>(n_ok);
    std::sort(latencies.begin(), latencies.end());
    auto rank = [&](double q) {
      std::size_t r = static_cast<std::size_t>(
          std::ceil(q * static_cast<double>(latencies.size())));
      if (r == 0) r = 1;
      return latencies[std::min(r - 1, latencies.size() - 1)];
    };
    report.latency_p50_s = rank(0.50);
    report.latency_p95_s = rank(0.95);
  }

  if (decisions) *decisions = std::move(results);
  return report;
}

}  // namespace odar
