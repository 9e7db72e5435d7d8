// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "odar/errors.hpp"
#include "odar/fusion.hpp"

using namespace odar;

namespace {

TokenLogProbs make_lp(std::vector<double> logprobs, std::int64_t char_len) {
  TokenLogProbs lp;
  lp.char_len = char_len;
  for (double v : logprobs) lp.entries.push_back({"t", v, false, true});
  return lp;
}

// two tokens with surprisals mean +- sqrt(var) reproduce (ell, var) exactly
// for char_len 2 when ell = mean
Candidate synth_candidate(double ell, double var, const std::string& model,
                          Origin origin, int sample_index) {
  double h = std::sqrt(var);
  Candidate c;
  c.answer_text = "x";
  c.generator = model;
  c.origin = origin;
  c.sample_index = sample_index;
  c.logprobs.char_len = 2;
  c.logprobs.entries.push_back({"a", -(ell - h), false, true});
  c.logprobs.entries.push_back({"b", -(ell + h), false, true});
  return c;
}

struct CaseRow {
  double ell;
  double var;
  double f_raw;
  Origin origin;
  int sample_index;
};

// six-candidate worked example: one Fast hypothesis plus five Slow samples
const std::vector<CaseRow>& case_study_rows() {
  static const std::vector<CaseRow> rows = {
      {0.18, 0.025, 0.1825, Origin::Fast, 0},
      {0.09, 0.012, 0.0912, Origin::Slow, 1},
      {0.06, 0.008, 0.0608, Origin::Slow, 2},
      {0.45, 0.120, 0.4620, Origin::Slow, 3},
      {0.08, 0.015, 0.0815, Origin::Slow, 4},
      {0.21, 0.032, 0.2132, Origin::Slow, 5},
  };
  return rows;
}

}  // namespace

TEST_CASE("energy density: hand-computed values") {
  CHECK(energy_density(make_lp({0.0}, 5)) == 0.0);
  CHECK(energy_density(make_lp({-1.0, -3.0}, 8)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("energy density: special tokens drop out of the sum") {
  TokenLogProbs lp = make_lp({-1.0, -3.0}, 8);
  lp.entries.push_back({"<eot>", -100.0, true, true});
  CHECK(energy_density(lp) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("energy density: zero usable tokens is not scorable") {
  TokenLogProbs lp;
  lp.char_len = 4;
  lp.entries.push_back({"x", 0.0, false, false});
  lp.entries.push_back({"<eot>", -1.0, true, true});
  CHECK_THROWS_AS(energy_density(lp), NotScorableError);
}

TEST_CASE("varentropy: constant, two-point and exclusion cases") {
  CHECK(varentropy(make_lp({-1.0, -1.0, -1.0}, 3)) == 0.0);
  CHECK(varentropy(make_lp({-1.0, -3.0}, 3)) == doctest::Approx(1.0).epsilon(1e-12));
  TokenLogProbs with_special = make_lp({-1.0, -3.0}, 3);
  with_special.entries.push_back({"<pad>", -9.0, true, true});
  CHECK(varentropy(with_special) == varentropy(make_lp({-1.0, -3.0}, 3)));
  CHECK(varentropy(make_lp({-2.5}, 4)) == 0.0);  // single token
}

TEST_CASE("varentropy: constant sequences are exactly zero, even awkward ones") {
  CHECK(varentropy(make_lp({-0.1, -0.1, -0.1}, 3)) == 0.0);
  CHECK(varentropy(make_lp(std::vector<double>(7, -1.0 / 3.0), 7)) == 0.0);
}

TEST_CASE("raw free energy reproduces the published case-study rows") {
  for (const auto& row : case_study_rows()) {
    CHECK(raw_free_energy(row.ell, row.var, 0.1) ==
          doctest::Approx(row.f_raw).epsilon(1e-12));
  }
  CHECK(raw_free_energy(0.37, 0.5, 0.0) == 0.37);  // risk-neutral limit
}

TEST_CASE("standardize: centering and hand arithmetic") {
  CalibrationStats stats;
  stats.per_model["m"] = {0.3, 0.1, 10, false};
  CHECK(standardize(0.3, stats, "m", 1e-6) == 0.0);
  CHECK(standardize(0.5, stats, "m", 1e-6) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(standardize(0.5, stats, "other", 1e-6), CalibrationError);
  stats.per_model["tiny"] = {0.0, 1e-9, 5, true};
  CHECK_THROWS_AS(standardize(0.5, stats, "tiny", 1e-6), CalibrationError);
}

TEST_CASE("standardize preserves within-model order") {
  CalibrationStats stats;
  stats.per_model["m"] = {0.42, 0.2, 8, false};
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    double a = dist(rng);
    double b = dist(rng);
    if (a == b) continue;
    bool raw_lt = a < b;
    bool std_lt = standardize(a, stats, "m", 1e-6) < standardize(b, stats, "m", 1e-6);
    CHECK(raw_lt == std_lt);
  }
}

TEST_CASE("select_best picks the minimum-energy candidate in the case study") {
  std::vector<Candidate> cands;
  for (const auto& row : case_study_rows()) {
    cands.push_back(synth_candidate(row.ell, row.var,
                                    row.origin == Origin::Fast ? "fast" : "slow",
                                    row.origin, row.sample_index));
  }
  CalibrationStats stats = CalibrationStats::identity({"fast", "slow"}, 0.1);
  FusionConfig cfg;
  auto [winner, scores] = select_best(cands, stats, cfg);
  CHECK(winner == 2);  // the 0.0608 row
  for (std::size_t i = 0; i < scores.size(); ++i) {
    CHECK(scores[i].scorable);
    CHECK(scores[i].raw_free_energy ==
          doctest::Approx(case_study_rows()[i].f_raw).epsilon(1e-9));
  }
}

TEST_CASE("select_best: single candidate and tie-breaks") {
  CalibrationStats stats = CalibrationStats::identity({"m"}, 0.1);
  FusionConfig cfg;
  std::vector<Candidate> single = {synth_candidate(0.2, 0.01, "m", Origin::Fast, 0)};
  CHECK(select_best(single, stats, cfg).first == 0);

  // identical scores from Slow samples 4 and 2: lower sample index wins
  std::vector<Candidate> dup = {
      synth_candidate(0.2, 0.01, "m", Origin::Slow, 4),
      synth_candidate(0.2, 0.01, "m", Origin::Slow, 2),
  };
  CHECK(select_best(dup, stats, cfg).first == 1);

  // equal scores across origins: Slow beats Fast
  std::vector<Candidate> cross = {
      synth_candidate(0.2, 0.01, "m", Origin::Fast, 0),
      synth_candidate(0.2, 0.01, "m", Origin::Slow, 1),
  };
  CHECK(select_best(cross, stats, cfg).first == 1);
}

TEST_CASE("select_best signals fallback when nothing is scorable") {
  Candidate c;
  c.answer_text = "x";
  c.generator = "m";
  c.logprobs.char_len = 1;
  c.logprobs.entries.push_back({"x", 0.0, false, false});
  CalibrationStats stats = CalibrationStats::identity({"m"}, 0.1);
  CHECK_THROWS_AS(select_best({c}, stats, FusionConfig{}), NotScorableError);
}

TEST_CASE("select_best agrees with brute-force scoring for small sets") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> ell_dist(0.01, 1.0);
  std::uniform_real_distribution<double> var_dist(0.0, 0.5);
  CalibrationStats stats;
  stats.per_model["fast"] = {0.25, 0.12, 50, false};
  stats.per_model["slow"] = {0.10, 0.05, 50, false};
  FusionConfig cfg;

  for (int trial = 0; trial < 300; ++trial) {
    int n = 1 + static_cast<int>(rng() % 6);
    std::vector<Candidate> cands;
    for (int i = 0; i < n; ++i) {
      bool fast = (rng() % 4) == 0;
      cands.push_back(synth_candidate(ell_dist(rng), var_dist(rng),
                                      fast ? "fast" : "slow",
                                      fast ? Origin::Fast : Origin::Slow, i));
    }
    auto [winner, scores] = select_best(cands, stats, cfg);

    // oracle: recompute every score from scratch and scan for the minimum
    std::size_t oracle = 0;
    double oracle_f = 0.0;
    bool first = true;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      double sum = 0.0;
      std::vector<double> surp;
      for (const auto& t : cands[i].logprobs.entries) {
        sum += t.logprob;
        surp.push_back(-t.logprob);
      }
      double ell = -sum / static_cast<double>(cands[i].logprobs.char_len);
      double mean = 0.0;
      for (double s : surp) mean += s;
      mean /= surp.size();
      double var = 0.0;
      for (double s : surp) var += (s - mean) * (s - mean);
      var /= surp.size();
      const ModelStats& m = stats.per_model.at(cands[i].generator);
      double f = (ell + cfg.lambda * var - m.mu) / m.sigma;
      auto better = [&](std::size_t a) {
        if (f != oracle_f) return f < oracle_f;
        if (cands[a].origin != cands[oracle].origin)
          return cands[a].origin == Origin::Slow;
        return cands[a].sample_index < cands[oracle].sample_index;
      };
      if (first || better(i)) {
        oracle = i;
        oracle_f = f;
        first = false;
      }
    }
    CHECK(winner == oracle);
    CHECK(*scores[winner].standardized == doctest::Approx(oracle_f).epsilon(1e-12));
  }
}

TEST_CASE("pair weights: symmetry, hand value, stability") {
  auto [wf0, ws0] = pair_weights(1.2, 1.2);
  CHECK(wf0 == doctest::Approx(0.5));
  CHECK(ws0 == doctest::Approx(0.5));

  auto [wf1, ws1] = pair_weights(1.0, 0.0);
  CHECK(ws1 == doctest::Approx(std::exp(1.0) / (1.0 + std::exp(1.0))).epsilon(1e-12));
  CHECK(wf1 + ws1 == doctest::Approx(1.0).epsilon(1e-12));

  auto [wf2, ws2] = pair_weights(1e5, -1e5);
  CHECK(std::isfinite(wf2));
  CHECK(std::isfinite(ws2));
  CHECK(ws2 > wf2);

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    double ff = dist(rng);
    double fs = dist(rng);
    auto [wf, ws] = pair_weights(ff, fs);
    CHECK(wf + ws == doctest::Approx(1.0).epsilon(1e-9));
    if (ff < fs) CHECK(wf > ws);
    if (fs < ff) CHECK(ws > wf);
  }
}

TEST_CASE("risk monotonicity: free energy non-decreasing in variance") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> dist(0.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    double ell = dist(rng);
    double v1 = dist(rng);
    double v2 = v1 + dist(rng);
    CHECK(raw_free_energy(ell, v2, 0.1) >= raw_free_energy(ell, v1, 0.1));
  }
}

TEST_CASE("tokenizer-split invariance of the energy term") {
  std::mt19937 rng(37);
  std::uniform_real_distribution<double> dist(0.05, 3.0);
  for (int i = 0; i < 500; ++i) {
    double p1 = -dist(rng);
    double p2 = -dist(rng);
    double merged = p1 + p2;
    TokenLogProbs one = make_lp({merged, -dist(rng)}, 9);
    TokenLogProbs two = make_lp({p1, p2, one.entries[1].logprob}, 9);
    CHECK(energy_density(two) ==
          doctest::Approx(energy_density(one)).epsilon(1e-12));
  }
}

TEST_CASE("exclusion soundness: toggling is_special equals deletion") {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> dist(0.05, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    int n = 2 + static_cast<int>(rng() % 8);
    TokenLogProbs full;
    full.char_len = 10;
    for (int i = 0; i < n; ++i) full.entries.push_back({"t", -dist(rng), false, true});
    std::size_t toggle = rng() % n;

    TokenLogProbs marked = full;
    marked.entries[toggle].is_special = true;
    TokenLogProbs erased = full;
    erased.entries.erase(erased.entries.begin() + static_cast<std::ptrdiff_t>(toggle));

    CHECK(energy_density(marked) == energy_density(erased));
    CHECK(varentropy(marked) == varentropy(erased));
  }
}

TEST_CASE("usable token fraction ignores specials in both terms") {
  TokenLogProbs lp;
  lp.char_len = 5;
  lp.entries.push_back({"a", -1.0, false, true});
  lp.entries.push_back({"b", 0.0, false, false});
  lp.entries.push_back({"<eot>", 0.0, true, false});
  CHECK(usable_token_fraction(lp) == doctest::Approx(0.5));
}

TEST_CASE("argmin invariance under a model's affine standardization") {
  std::mt19937 rng(53);
  std::uniform_real_distribution<double> ell_dist(0.01, 1.0);
  std::uniform_real_distribution<double> var_dist(0.0, 0.4);
  FusionConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Candidate> cands;
    for (int i = 0; i < 4; ++i) {
      cands.push_back(synth_candidate(ell_dist(rng), var_dist(rng), "m",
                                      Origin::Slow, i));
    }
    CalibrationStats identity = CalibrationStats::identity({"m"}, cfg.lambda);
    CalibrationStats shifted;
    shifted.per_model["m"] = {0.35, 0.07, 20, false};
    auto a = select_best(cands, identity, cfg).first;
    auto b = select_best(cands, shifted, cfg).first;
    CHECK(a == b);
  }
}
