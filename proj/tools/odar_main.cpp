// SPDX-License-Identifier: Apache-2.0
//
// odar: difficulty-routed inference gateway CLI.
//
// Subcommands: features, train-de, calibrate, calibrate-thresholds, route,
// eval, serve. All structured output is JSON on stdout; errors go to stderr
// as "<kind>: <message>" with a nonzero exit status.

#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "odar/calibration.hpp"
#include "odar/config.hpp"
#include "odar/errors.hpp"
#include "odar/gateway.hpp"
#include "odar/json_io.hpp"
#include "odar/orchestrator.hpp"

namespace {

using namespace odar;

constexpr const char* kDefaultVocab = "data/vocab_pack.json";

VocabularyPack load_vocab_or_default(const std::string& path) {
  return VocabularyPack::load(path.empty() ? kDefaultVocab : path);
}

// Builds a two-agent mock stack around one script file; identity calibration
// keeps the fusion scores comparable without a stats file.
OrchestratorConfig mock_stack_config(const std::string& script_path,
                                     const std::string& vocab_path) {
  OrchestratorConfig cfg;
  cfg.fast.model_id = "mock-fast";
  cfg.fast.endpoint = "mock";
  cfg.fast.mock_script_path = script_path;
  cfg.fast.temperature = 0.2;
  cfg.fast.max_tokens = 512;
  cfg.fast.top_p = 0.9;
  cfg.slow.model_id = "mock-slow";
  cfg.slow.endpoint = "mock";
  cfg.slow.mock_script_path = script_path;
  cfg.slow.temperature = 0.3;
  cfg.slow.max_tokens = 1024;
  cfg.slow.top_p = 0.95;
  cfg.stats = CalibrationStats::identity({"mock-fast", "mock-slow"},
                                         cfg.fusion.lambda);
  cfg.vocab = load_vocab_or_default(vocab_path);
  return cfg;
}

std::vector<TrainingExample> corpus_to_examples(
    const std::vector<CorpusItem>& corpus, const VocabularyPack& vocab) {
  // raw t_human values are normalized by the corpus maximum
  double t_max = 0.0;
  for (const auto& item : corpus) {
    if (item.t_human_raw) t_max = std::max(t_max, *item.t_human_raw);
  }
  std::vector<TrainingExample> out;
  out.reserve(corpus.size());
  for (const auto& item : corpus) {
    if (!item.acc_fast || (!item.t_human_norm && !item.t_human_raw)) {
      throw ValidationError("training item '" + item.id +
                            "' needs acc_fast and t_human_norm (or t_human)");
    }
    TrainingExample ex;
    ex.features = extract_features(item.query, vocab);
    ex.t_human_norm = item.t_human_norm
                          ? *item.t_human_norm
                          : (t_max > 0.0 ? *item.t_human_raw / t_max : 0.0);
    ex.acc_fast = *item.acc_fast;
    out.push_back(std::move(ex));
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"odar: difficulty-routed dual-agent inference gateway"};
  app.require_subcommand(1);

  // ---- features ----
  auto* cmd_features = app.add_subcommand("features", "print phi(x) for a query");
  std::string feat_text, feat_vocab;
  bool feat_image = false;
  cmd_features->add_option("--text", feat_text, "query text")->required();
  cmd_features->add_flag("--image", feat_image, "multimodal input present");
  cmd_features->add_option("--vocab", feat_vocab, "vocabulary pack path");

  // ---- train-de ----
  auto* cmd_train = app.add_subcommand("train-de", "train the difficulty estimator");
  std::string train_data, train_out, train_vocab;
  TrainingConfig tcfg;
  cmd_train->add_option("--data", train_data, "training corpus JSONL")->required();
  cmd_train->add_option("--out", train_out, "output model path")->required();
  cmd_train->add_option("--vocab", train_vocab, "vocabulary pack path");
  cmd_train->add_option("--alpha", tcfg.alpha, "target mixing weight");
  cmd_train->add_option("--lr", tcfg.lr, "learning rate");
  cmd_train->add_option("--epochs", tcfg.epochs, "training epochs");
  cmd_train->add_option("--batch", tcfg.batch_size, "batch size");
  cmd_train->add_option("--l2", tcfg.l2_lambda, "L2 weight penalty");
  cmd_train->add_option("--seed", tcfg.seed, "RNG seed");

  // ---- calibrate ----
  auto* cmd_cal = app.add_subcommand("calibrate", "estimate per-model energy stats");
  std::string cal_corpus, cal_out, cal_config;
  int cal_parallel = 4;
  cmd_cal->add_option("--corpus", cal_corpus, "calibration corpus JSONL")->required();
  cmd_cal->add_option("--out", cal_out, "output stats path")->required();
  cmd_cal->add_option("--config", cal_config, "app config JSON")->required();
  cmd_cal->add_option("--parallel", cal_parallel, "per-backend parallelism");

  // ---- calibrate-thresholds ----
  auto* cmd_grid = app.add_subcommand("calibrate-thresholds",
                                      "grid-search tau1/tau2 on an eval set");
  std::string grid_eval, grid_model, grid_out, grid_cost_preset = "calls";
  std::vector<double> grid1 = {0.2, 0.3, 0.4};
  std::vector<double> grid2 = {0.6, 0.7, 0.8};
  cmd_grid->add_option("--eval", grid_eval, "eval JSONL with per-path accuracy")
      ->required();
  cmd_grid->add_option("--model", grid_model, "model to read/update")->required();
  cmd_grid->add_option("--out", grid_out, "write updated model here");
  cmd_grid->add_option("--grid1", grid1, "tau1 grid");
  cmd_grid->add_option("--grid2", grid2, "tau2 grid");
  cmd_grid->add_option("--cost-preset", grid_cost_preset, "calls or table17");

  // ---- route ----
  auto* cmd_route = app.add_subcommand("route", "route one query");
  std::string route_text, route_config, route_mock, route_vocab, route_force;
  bool route_image = false;
  cmd_route->add_option("--text", route_text, "query text")->required();
  cmd_route->add_flag("--image", route_image, "multimodal input present");
  cmd_route->add_option("--config", route_config, "app config JSON");
  cmd_route->add_option("--mock", route_mock, "mock script for both agents");
  cmd_route->add_option("--vocab", route_vocab, "vocabulary pack (mock mode)");
  cmd_route->add_option("--force-path", route_force, "Simple|Medium|Hard");

  // ---- eval ----
  auto* cmd_eval = app.add_subcommand("eval", "route a corpus and report");
  std::string eval_corpus, eval_config, eval_mock, eval_vocab, eval_trace;
  cmd_eval->add_option("--corpus", eval_corpus, "corpus JSONL")->required();
  cmd_eval->add_option("--config", eval_config, "app config JSON");
  cmd_eval->add_option("--mock", eval_mock, "mock script for both agents");
  cmd_eval->add_option("--vocab", eval_vocab, "vocabulary pack (mock mode)");
  cmd_eval->add_option("--trace", eval_trace, "per-decision JSONL trace path");

  // ---- serve ----
  auto* cmd_serve = app.add_subcommand("serve", "run the HTTP gateway");
  std::string serve_config;
  cmd_serve->add_option("--config", serve_config, "app config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  if (*cmd_features) {
    VocabularyPack vocab = load_vocab_or_default(feat_vocab);
    FeatureVector f = extract_features({feat_text, feat_image}, vocab);
    std::cout << feature_vector_to_json(f).dump(2) << "\n";
    return 0;
  }

  if (*cmd_train) {
    VocabularyPack vocab = load_vocab_or_default(train_vocab);
    auto corpus = load_corpus_jsonl(train_data);
    auto examples = corpus_to_examples(corpus, vocab);
    auto [model, report] = train(examples, tcfg);
    model.feature_pack_version = vocab.schema_version;
    std::string payload;
    for (const auto& item : corpus) payload += item.id + "\x1e";
    model.trained_on = fingerprint_hex(payload);
    save_model(model, train_out);
    std::cout << training_report_to_json(report).dump(2) << "\n";
    return 0;
  }

  if (*cmd_cal) {
    AppConfig cfg = load_app_config(cal_config);
    auto corpus_items = load_corpus_jsonl(cal_corpus);
    std::vector<QueryInput> corpus;
    corpus.reserve(corpus_items.size());
    for (const auto& item : corpus_items) corpus.push_back(item.query);
    auto fast = make_backend(cfg.orchestrator.fast);
    auto slow = make_backend(cfg.orchestrator.slow);
    std::vector<CalibrationTarget> targets;
    targets.push_back({fast.get(), [](const std::string& q) {
                         return prompts::fast_solve(q);
                       }});
    targets.push_back({slow.get(), [](const std::string& q) {
                         return prompts::slow_solve(q);
                       }});
    CalibrationRunReport report =
        run_calibration(corpus, targets, cfg.orchestrator.fusion, cal_parallel);
    save_stats(report.stats, cal_out);
    ojson out;
    out["stats"] = nlohmann::ordered_json::parse(stats_to_json_text(report.stats));
    for (const auto& [model, skipped] : report.skipped_by_model) {
      out["skipped"][model] = skipped;
    }
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  if (*cmd_grid) {
    DifficultyModel model = load_model(grid_model);
    auto eval_set = load_eval_jsonl(grid_eval);
    std::map<PathKind, double> cost;
    if (grid_cost_preset == "calls") {
      cost = {{PathKind::Simple, 1.0}, {PathKind::Medium, 2.0}, {PathKind::Hard, 6.0}};
    } else if (grid_cost_preset == "table17") {
      cost = {{PathKind::Simple, 1.0}, {PathKind::Medium, 4.2}, {PathKind::Hard, 16.0}};
    } else {
      throw ConfigError("unknown cost preset: " + grid_cost_preset);
    }
    GridSearchResult result = grid_search_thresholds(eval_set, grid1, grid2, cost);
    std::cout << grid_result_to_json(result).dump(2) << "\n";
    if (!grid_out.empty()) {
      model.tau1 = result.tau1;
      model.tau2 = result.tau2;
      save_model(model, grid_out);
    }
    return 0;
  }

  if (*cmd_route) {
    OrchestratorConfig cfg;
    if (!route_config.empty()) {
      cfg = load_app_config(route_config).orchestrator;
    } else if (!route_mock.empty()) {
      cfg = mock_stack_config(route_mock, route_vocab);
    } else {
      throw ConfigError("route needs --config or --mock");
    }
    Orchestrator orch(std::move(cfg));
    RouteOptions opts;
    if (!route_force.empty()) opts.force_path = path_from_string(route_force);
    RoutingDecision dec = orch.route({route_text, route_image}, opts);
    std::cout << decision_to_json(dec).dump(2) << "\n";
    return 0;
  }

  if (*cmd_eval) {
    OrchestratorConfig cfg;
    if (!eval_config.empty()) {
      cfg = load_app_config(eval_config).orchestrator;
    } else if (!eval_mock.empty()) {
      cfg = mock_stack_config(eval_mock, eval_vocab);
    } else {
      throw ConfigError("eval needs --config or --mock");
    }
    Orchestrator orch(std::move(cfg));
    auto corpus = load_corpus_jsonl(eval_corpus);
    std::vector<BatchItem> items;
    items.reserve(corpus.size());
    for (const auto& c : corpus) items.push_back({c.id, c.query});
    std::vector<std::optional<RoutingDecision>> decisions;
    BatchReport report = orch.run_batch(items, &decisions);
    if (!eval_trace.empty()) {
      TraceWriter trace(eval_trace);
      for (const auto& d : decisions) {
        if (d) trace.append(*d);
      }
    }
    std::cout << batch_report_to_json(report).dump(2) << "\n";
    return 0;
  }

  if (*cmd_serve) {
    AppConfig cfg = load_app_config(serve_config);
    auto orch = std::make_shared<Orchestrator>(cfg.orchestrator);
    Gateway gateway(cfg.gateway, orch, config_fingerprint(cfg));
    std::cerr << "listening on " << cfg.gateway.listen_addr << "\n";
    gateway.run();
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const odar::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal: " << e.what() << "\n";
    return 1;
  }
}
