// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "odar/difficulty.hpp"
#include "odar/features.hpp"
#include "odar/fusion.hpp"
#include "odar/orchestrator.hpp"

namespace odar {

// All emitters use ordered_json with fixed key order so output is stable and
// diffable.
using ojson = nlohmann::ordered_json;

ojson feature_vector_to_json(const FeatureVector& f);

ojson score_to_json(const EnergyScore& s);

// Score report row set: one entry per candidate, `selected` marks the winner.
ojson score_report_to_json(const std::vector<Candidate>& cands,
                           const std::vector<EnergyScore>& scores,
                           std::optional<std::size_t> winner);

ojson decision_to_json(const RoutingDecision& d);

ojson batch_report_to_json(const BatchReport& r);

ojson training_report_to_json(const TrainingReport& r);

ojson grid_result_to_json(const GridSearchResult& r);

// Corpus JSONL line: {id, text, has_image?, t_human_norm?, acc_fast?, gold?}
struct CorpusItem {
  std::string id;
  QueryInput query;
  std::optional<double> t_human_norm;
  std::optional<double> t_human_raw;
  std::optional<int> acc_fast;
  std::optional<std::string> gold;
};

std::vector<CorpusItem> load_corpus_jsonl(const std::string& path);

// Threshold-calibration eval file: JSONL of
// {d, acc_simple, acc_medium, acc_hard}
std::vector<ThresholdEvalItem> load_eval_jsonl(const std::string& path);

// Serialized-line appender for decision traces: one JSON document per line,
// single write per decision, flushed immediately.
class TraceWriter {
 public:
  explicit TraceWriter(const std::string& path);
  void append(const RoutingDecision& d);

 private:
  std::string path_;
  std::mutex mu_;
};

}  // namespace odar
