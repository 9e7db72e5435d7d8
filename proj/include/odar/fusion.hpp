// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace odar {

struct TokenLogProb {
  std::string text;
  double logprob = 0.0;     // valid only when has_logprob
  bool is_special = false;  // control/template token, excluded from scoring
  bool has_logprob = true;
};

struct TokenLogProbs {
  std::vector<TokenLogProb> entries;
  std::int64_t char_len = 0;  // Unicode scalar count of the assembled answer
};

enum class Origin { Fast, Slow };

struct Candidate {
  std::string answer_text;
  std::string generator;  // backend model id
  TokenLogProbs logprobs;
  Origin origin = Origin::Fast;
  int sample_index = 0;
};

struct EnergyScore {
  bool scorable = false;
  double energy_density = 0.0;   // surprisal per character
  double varentropy = 0.0;       // variance of token surprisal
  double raw_free_energy = 0.0;  // energy_density + lambda * varentropy
  std::optional<double> standardized;
  double usable_token_fraction = 0.0;
  bool sigma_floored = false;  // standardized against a floored sigma
};

struct FusionConfig {
  double lambda = 0.1;
  double missing_logprob_fallback_threshold = 0.2;  // fraction in (0, 1]
  double min_sigma = 1e-6;

  void validate() const;
};

struct ModelStats {
  double mu = 0.0;
  double sigma = 1.0;
  std::int64_t n = 0;
  bool degenerate = false;  // sigma was floored at estimation time
};

struct CalibrationStats {
  std::map<std::string, ModelStats> per_model;
  std::string corpus_fingerprint;
  double lambda_used = 0.1;
  std::string created_at;

  const ModelStats& for_model(const std::string& model_id) const;

  // Identity stats (mu 0, sigma 1) for the given model ids; useful when
  // scoring candidates from a single model or in fusion-only tooling.
  static CalibrationStats identity(const std::vector<std::string>& model_ids,
                                   double lambda);
};

// Fraction of non-special tokens carrying a logprob. Special tokens are
// excluded from both numerator and denominator: they are dropped from
// scoring by design, not "missing".
double usable_token_fraction(const TokenLogProbs& lp);

// -(sum of usable logprobs) / char_len. char_len stays the full answer
// length even though special/missing tokens drop out of the sum. Throws
// NotScorableError when no token is usable.
double energy_density(const TokenLogProbs& lp);

// Population variance of per-token surprisal (-logprob) over usable tokens.
// A single usable token scores 0; constant sequences score exactly 0.
double varentropy(const TokenLogProbs& lp);

double raw_free_energy(double ell, double var, double lambda);

// (f_raw - mu_m) / sigma_m. Throws on unknown model or sigma below floor.
double standardize(double f_raw, const CalibrationStats& stats,
                   const std::string& model_id, double min_sigma);

EnergyScore score_candidate(const Candidate& cand, const CalibrationStats& stats,
                            const FusionConfig& cfg);

std::vector<EnergyScore> score_candidates(const std::vector<Candidate>& cands,
                                          const CalibrationStats& stats,
                                          const FusionConfig& cfg);

// Argmin of standardized free energy over scorable candidates; ties broken
// by Slow origin first, then lower sample_index. Returns the winner index
// plus all scores. Throws NotScorableError when nothing is scorable.
std::pair<std::size_t, std::vector<EnergyScore>> select_best(
    const std::vector<Candidate>& cands, const CalibrationStats& stats,
    const FusionConfig& cfg);

// Two-way softmax over negated standardized energies, temperature 1.
// Stabilized so arbitrarily large magnitudes stay finite.
std::pair<double, double> pair_weights(double f_fast, double f_slow);

}  // namespace odar
