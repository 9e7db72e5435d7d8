// SPDX-License-Identifier: Apache-2.0
#include "odar/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "odar/errors.hpp"

namespace odar {

void FusionConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("fusion lambda must be finite and >= 0");
  }
  if (!(missing_logprob_fallback_threshold > 0.0) ||
      missing_logprob_fallback_threshold > 1.0) {
    throw ConfigError("missing_logprob_fallback_threshold must be in (0, 1]");
  }
  if (!(min_sigma > 0.0)) throw ConfigError("min_sigma must be positive");
}

const ModelStats& CalibrationStats::for_model(const std::string& model_id) const {
  auto it = per_model.find(model_id);
  if (it == per_model.end()) {
    throw CalibrationError("no calibration stats for model '" + model_id + "'");
  }
  return it->second;
}

CalibrationStats CalibrationStats::identity(
    const std::vector<std::string>& model_ids, double lambda) {
  CalibrationStats stats;
  stats.lambda_used = lambda;
  stats.corpus_fingerprint = "identity";
  for (const auto& id : model_ids) {
    stats.per_model[id] = ModelStats{0.0, 1.0, 0, false};
  }
  return stats;
}

namespace {

std::vector<double> usable_surprisals(const TokenLogProbs& lp) {
  std::vector<double> out;
  out.reserve(lp.entries.size());
  for (const auto& tok : lp.entries) {
    if (!tok.is_special && tok.has_logprob) out.push_back(-tok.logprob);
  }
  return out;
}

}  // namespace

double usable_token_fraction(const TokenLogProbs& lp) {
  std::size_t non_special = 0;
  std::size_t usable = 0;
  for (const auto& tok : lp.entries) {
    if (tok.is_special) continue;
    ++non_special;
    if (tok.has_logprob) ++usable;
  }
  if (non_special == 0) return 0.0;
  return static_cast<double>(usable) / static_cast<double>(non_special);
}

double energy_density(const TokenLogProbs& lp) {
  if (lp.char_len < 1) throw ValidationError("char_len must be >= 1");
  double sum = 0.0;
  std::size_t usable = 0;
  for (const auto& tok : lp.entries) {
    if (tok.is_special || !tok.has_logprob) continue;
    sum += tok.logprob;
    ++usable;
  }
  if (usable == 0) throw NotScorableError("no usable tokens for energy density");
  return -sum / static_cast<double>(lp.char_len);
}

double varentropy(const TokenLogProbs& lp) {
  std::vector<double> s = usable_surprisals(lp);
  if (s.empty()) throw NotScorableError("no usable tokens for varentropy");
  if (s.size() == 1) return 0.0;
  // constant sequences must score exactly 0, not rounding dust
  if (std::all_of(s.begin(), s.end(), [&](double v) { return v == s.front(); })) {
    return 0.0;
  }
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= static_cast<double>(s.size());
  double acc = 0.0;
  for (double v : s) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(s.size());
}

double raw_free_energy(double ell, double var, double lambda) {
  if (var < 0.0) throw ValidationError("varentropy must be >= 0");
  if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
  return ell + lambda * var;
}

double standardize(double f_raw, const CalibrationStats& stats,
                   const std::string& model_id, double min_sigma) {
  const ModelStats& m = stats.for_model(model_id);
  if (m.sigma < min_sigma) {
    throw CalibrationError("sigma for model '" + model_id + "' is below floor");
  }
  return (f_raw - m.mu) / m.sigma;
}

EnergyScore score_candidate(const Candidate& cand, const CalibrationStats& stats,
                            const FusionConfig& cfg) {
  EnergyScore score;
  score.usable_token_fraction = usable_token_fraction(cand.logprobs);
  bool any_usable = std::any_of(
      cand.logprobs.entries.begin(), cand.logprobs.entries.end(),
      [](const TokenLogProb& t) { return !t.is_special && t.has_logprob; });
  if (!any_usable || cand.logprobs.char_len < 1) {
    score.scorable = false;
    return score;
  }
  score.scorable = true;
  score.energy_density = energy_density(cand.logprobs);
  score.varentropy = varentropy(cand.logprobs);
  score.raw_free_energy =
      raw_free_energy(score.energy_density, score.varentropy, cfg.lambda);
  const ModelStats& m = stats.for_model(cand.generator);
  score.sigma_floored = m.degenerate;
  score.standardized =
      standardize(score.raw_free_energy, stats, cand.generator, cfg.min_sigma);
  return score;
}

std::vector<EnergyScore> score_candidates(const std::vector<Candidate>& cands,
                                          const CalibrationStats& stats,
                                          const FusionConfig& cfg) {
  std::vector<EnergyScore> scores;
  scores.reserve(cands.size());
  for (const auto& c : cands) scores.push_back(score_candidate(c, stats, cfg));
  return scores;
}

namespace {

// true if candidate a beats candidate b on the tie-break ladder
bool wins_tie(const Candidate& a, const Candidate& b) {
  if (a.origin != b.origin) return a.origin == Origin::Slow;
  return a.sample_index < b.sample_index;
}

}  // namespace

std::pair<std::size_t, std::vector<EnergyScore>> select_best(
    const std::vector<Candidate>& cands, const CalibrationStats& stats,
    const FusionConfig& cfg) {
  if (cands.empty()) throw ValidationError("select_best on empty candidate set");
  cfg.validate();
  std::vector<EnergyScore> scores = score_candidates(cands, stats, cfg);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (!scores[i].scorable) continue;
    if (!best) {
      best = i;
      continue;
    }
    double fi = *scores[i].standardized;
    double fb = *scores[*best].standardized;
    if (fi < fb || (fi == fb && wins_tie(cands[i], cands[*best]))) best = i;
  }
  if (!best) throw NotScorableError("all candidates lack usable logprobs");
  return {*best, std::move(scores)};
}

std::pair<double, double> pair_weights(double f_fast, double f_slow) {
  if (!std::isfinite(f_fast) || !std::isfinite(f_slow)) {
    throw ValidationError("pair_weights requires finite energies");
  }
  // softmax over negated energies; subtract the min energy for stability
  double m = std::min(f_fast, f_slow);
  double ef = std::exp(-(f_fast - m));
  double es = std::exp(-(f_slow - m));
  double z = ef + es;
  return {ef / z, es / z};
}

}  // namespace odar
