// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "odar/backends.hpp"
#include "odar/features.hpp"
#include "odar/fusion.hpp"

namespace odar {

// mu = arithmetic mean, sigma = population standard deviation floored at
// min_sigma (flagged degenerate when the floor bites). Requires at least
// two finite samples per model.
CalibrationStats estimate_stats(
    const std::map<std::string, std::vector<double>>& samples_by_model,
    double min_sigma);

struct CalibrationRunReport {
  CalibrationStats stats;
  std::map<std::string, int> skipped_by_model;  // logprob extraction failures
};

// One backend plus the generation template it calibrates under. Each backend
// uses its own default template so calibration energies match what routing
// sees later.
struct CalibrationTarget {
  AgentBackend* backend = nullptr;
  std::function<Prompt(const std::string&)> make_prompt;  // default: fast_solve
};

// Generates one answer per backend per query, scores raw free energies under
// cfg.lambda and estimates per-model stats. Queries whose answers cannot be
// scored are skipped and counted. Backends fan out concurrently up to
// `parallelism` in-flight queries per backend.
CalibrationRunReport run_calibration(const std::vector<QueryInput>& corpus,
                                     const std::vector<CalibrationTarget>& targets,
                                     const FusionConfig& cfg,
                                     int parallelism = 4);

// File format: {schema_version, lambda_used, corpus_fingerprint, created_at,
// per_model: {<id>: {mu, sigma, n, degenerate}}}
std::string stats_to_json_text(const CalibrationStats& stats);
CalibrationStats stats_from_json_text(const std::string& json_text);
void save_stats(const CalibrationStats& stats, const std::string& path);

// Loads and cross-checks lambda_used against the active fusion config;
// stats computed under a different lambda are rejected.
CalibrationStats load_stats(const std::string& path, const FusionConfig& active);

// Stable FNV-1a fingerprint used for corpus and config identity.
std::string fingerprint_hex(const std::string& payload);

}  // namespace odar
