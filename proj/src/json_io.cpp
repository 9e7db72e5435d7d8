// SPDX-License-Identifier: Apache-2.0
#include "odar/json_io.hpp"

#include <fstream>
#include <mutex>

#include "odar/errors.hpp"

namespace odar {

ojson feature_vector_to_json(const FeatureVector& f) {
  ojson values = ojson::array();
  for (double v : f) values.push_back(v);
  return ojson{{"values", values}};
}

ojson score_to_json(const EnergyScore& s) {
  ojson j;
  j["scorable"] = s.scorable;
  if (s.scorable) {
    j["energy_density"] = s.energy_density;
    j["varentropy"] = s.varentropy;
    j["raw_free_energy"] = s.raw_free_energy;
    if (s.standardized) {
      j["standardized"] = *s.standardized;
    } else {
      j["standardized"] = nullptr;
    }
    j["sigma_floored"] = s.sigma_floored;
  }
  j["usable_token_fraction"] = s.usable_token_fraction;
  return j;
}

ojson score_report_to_json(const std::vector<Candidate>& cands,
                           const std::vector<EnergyScore>& scores,
                           std::optional<std::size_t> winner) {
  ojson rows = ojson::array();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    ojson row;
    row["candidate_id"] = i;
    row["generator"] = cands[i].generator;
    row["origin"] = cands[i].origin == Origin::Slow ? "Slow" : "Fast";
    row["sample_index"] = cands[i].sample_index;
    if (i < scores.size()) {
      const EnergyScore& s = scores[i];
      row["energy_density"] = s.scorable ? ojson(s.energy_density) : ojson(nullptr);
      row["varentropy"] = s.scorable ? ojson(s.varentropy) : ojson(nullptr);
      row["raw_free_energy"] =
          s.scorable ? ojson(s.raw_free_energy) : ojson(nullptr);
      row["standardized"] =
          s.standardized ? ojson(*s.standardized) : ojson(nullptr);
      row["usable_token_fraction"] = s.usable_token_fraction;
    }
    row["selected"] = winner && *winner == i;
    rows.push_back(std::move(row));
  }
  return rows;
}

ojson decision_to_json(const RoutingDecision& d) {
  ojson j;
  j["query_id"] = d.query_id;
  j["difficulty"] = d.difficulty;
  j["path"] = to_string(d.path);
  j["forced_path"] = d.forced_path;

  ojson calls = ojson::array();
  for (const auto& c : d.calls) {
    calls.push_back(ojson{{"backend", c.backend},
                          {"role", c.role},
                          {"latency_s", c.latency_s},
                          {"finish_reason", to_string(c.finish_reason)}});
  }
  j["calls"] = std::move(calls);

  ojson cands = ojson::array();
  for (const auto& c : d.candidates) {
    cands.push_back(ojson{
        {"generator", c.generator},
        {"origin", c.origin == Origin::Slow ? "Slow" : "Fast"},
        {"sample_index", c.sample_index},
        {"answer_text", c.answer_text},
        {"n_tokens", c.logprobs.entries.size()},
        {"char_len", c.logprobs.char_len}});
  }
  j["candidates"] = std::move(cands);

  ojson scores = ojson::array();
  for (const auto& s : d.scores) scores.push_back(score_to_json(s));
  j["scores"] = std::move(scores);

  if (d.verification) {
    j["verification"] = to_string(*d.verification);
  }
  j["winner"] = d.winner;
  j["fallback_used"] = d.fallback_used;
  j["total_calls"] = d.total_calls;
  j["total_cost"] = d.total_cost;
  j["wall_latency_s"] = d.wall_latency_s;
  j["warnings"] = d.warnings;
  return j;
}

ojson batch_report_to_json(const BatchReport& r) {
  ojson j;
  j["n"] = r.n;
  ojson counts;
  for (PathKind p : {PathKind::Simple, PathKind::Medium, PathKind::Hard}) {
    auto it = r.path_counts.find(p);
    counts[to_string(p)] = it == r.path_counts.end() ? 0 : it->second;
  }
  j["path_counts"] = std::move(counts);
  j["expected_calls"] = r.expected_calls;
  j["empirical_calls"] = r.empirical_calls;
  j["fallback_rate"] = r.fallback_rate;
  j["latency_p50_s"] = r.latency_p50_s;
  j["latency_p95_s"] = r.latency_p95_s;
  ojson failures = ojson::array();
  for (const auto& f : r.failures) {
    failures.push_back(
        ojson{{"id", f.id}, {"kind", f.kind}, {"message", f.message}});
  }
  j["failures"] = std::move(failures);
  return j;
}

ojson training_report_to_json(const TrainingReport& r) {
  ojson j;
  j["epochs"] = r.epoch_losses.size();
  j["epoch_losses"] = r.epoch_losses;
  j["holdout_mse"] = r.holdout_mse;
  j["holdout_pearson_r"] = r.pearson_defined ? ojson(r.holdout_pearson_r) : ojson(nullptr);
  j["n_train"] = r.n_train;
  j["n_holdout"] = r.n_holdout;
  j["seed"] = r.seed;
  return j;
}

ojson grid_result_to_json(const GridSearchResult& r) {
  ojson j;
  j["tau1"] = r.tau1;
  j["tau2"] = r.tau2;
  ojson table = ojson::array();
  for (const auto& cell : r.table) {
    table.push_back(ojson{{"tau1", cell.tau1},
                          {"tau2", cell.tau2},
                          {"accuracy", cell.accuracy},
                          {"avg_cost", cell.avg_cost},
                          {"objective", cell.objective}});
  }
  j["table"] = std::move(table);
  return j;
}

std::vector<CorpusItem> load_corpus_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + path);
  std::vector<CorpusItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("corpus line " + std::to_string(line_no) +
                            " is not valid JSON: " + e.what());
    }
    CorpusItem item;
    item.id = j.contains("id")
                  ? (j.at("id").is_string() ? j.at("id").get<std::string>()
                                            : j.at("id").dump())
                  : "line-" + std::to_string(line_no);
    if (!j.contains("text") || !j.at("text").is_string()) {
      throw ValidationError("corpus line " + std::to_string(line_no) +
                            " lacks a text field");
    }
    item.query.text = j.at("text").get<std::string>();
    item.query.has_image = j.value("has_image", false);
    if (j.contains("t_human_norm")) {
      item.t_human_norm = j.at("t_human_norm").get<double>();
    }
    if (j.contains("t_human")) {
      item.t_human_raw = j.at("t_human").get<double>();
    }
    if (j.contains("acc_fast")) {
      item.acc_fast = j.at("acc_fast").is_boolean()
                          ? (j.at("acc_fast").get<bool>() ? 1 : 0)
                          : j.at("acc_fast").get<int>();
    }
    if (j.contains("gold") && j.at("gold").is_string()) {
      item.gold = j.at("gold").get<std::string>();
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<ThresholdEvalItem> load_eval_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open eval file: " + path);
  std::vector<ThresholdEvalItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("eval line " + std::to_string(line_no) +
                            " is not valid JSON: " + e.what());
    }
    ThresholdEvalItem item;
    try {
      item.d = j.at("d").get<double>();
      item.accuracy[PathKind::Simple] = j.at("acc_simple").get<double>();
      item.accuracy[PathKind::Medium] = j.at("acc_medium").get<double>();
      item.accuracy[PathKind::Hard] = j.at("acc_hard").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("eval line " + std::to_string(line_no) +
                            " missing fields: " + e.what());
    }
    items.push_back(item);
  }
  return items;
}

TraceWriter::TraceWriter(const std::string& path) : path_(path) {
  std::ofstream probe(path_, std::ios::binary | std::ios::app);
  if (!probe) throw IoError("cannot open trace file: " + path_);
}

void TraceWriter::append(const RoutingDecision& d) {
  std::string line = decision_to_json(d).dump();
  line.push_back('\n');
  std::lock_guard lock(mu_);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to trace file: " + path_);
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.flush();
}

}  // namespace odar
