// Copyright 2026 The espd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Command-line entry points for the turn-level early risk detection
// workbench: corpus synthesis and validation, detection-head training
// (supervised and policy-gradient), the two-tier baseline, evaluation, and
// analysis exports.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "espd/baseline.hpp"
#include "espd/error.hpp"
#include "espd/rollout.hpp"
#include "espd/synthgen.hpp"
#include "espd/training.hpp"
#include "json.hpp"
#include "run_config.hpp"

namespace espd::cli {
namespace {

namespace fs = std::filesystem;

std::string default_out_dir() {
  if (const char* env = std::getenv("ESPD_OUT_DIR")) return env;
  return "out";
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void ensure_parent_dir(const fs::path& path) {
  const fs::path parent = path.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void write_manifest(const fs::path& path, const std::string& command,
                    const RunConfig& config,
                    const std::map<std::string, std::string>& extras) {
  nlohmann::json manifest;
  manifest["command"] = command;
  manifest["version"] = "1.0.0";
  manifest["formats"] = {{"corpus", 1}, {"policy", 1}, {"report", 1}};
  manifest["config_digest"] = config_digest(config);
  manifest["config"] = config_items(config);
  for (const auto& [key, value] : extras) manifest[key] = value;
  manifest["timestamp"] = utc_timestamp();
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << manifest.dump(2) << "\n";
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(
                    fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
  fs::path out = path;
  out.replace_extension();
  out += suffix;
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

struct CommonArgs {
  std::string config_path;
  RunConfig config() const { return load_run_config(config_path); }
};

int cmd_synth(const std::string& config_path, const std::string& out,
              std::int64_t seed_override) {
  RunConfig config = load_run_config(config_path);
  if (seed_override >= 0) {
    config.gen.seed = static_cast<std::uint64_t>(seed_override);
  }
  const Corpus corpus = generate(config.gen);
  const fs::path out_path(out);
  ensure_parent_dir(out_path);
  save_corpus(corpus, out_path.string());
  const CorpusStats stats = corpus_stats(corpus);
  std::cout << "wrote " << corpus.chats.size() << " chats ("
            << stats.n_positive << " positive, " << stats.n_negative
            << " negative) to " << out << "\n";
  write_manifest(sibling(out_path, ".manifest.json"), "synth", config,
                 {{"output", out_path.filename().string()},
                  {"output_digest", file_digest(out_path)}});
  return 0;
}

int cmd_validate(const std::string& in, bool relaxed) {
  const Corpus corpus =
      load_corpus(in, relaxed ? LabelMode::kRelaxed : LabelMode::kStrict);
  const CorpusStats stats = corpus_stats(corpus);
  std::cout << "corpus ok: " << corpus.chats.size() << " chats\n"
            << "  positive: " << stats.n_positive << " (length mean "
            << stats.positive_length_mean << ", std "
            << stats.positive_length_std << ")\n"
            << "  negative: " << stats.n_negative << " (length mean "
            << stats.negative_length_mean << ", std "
            << stats.negative_length_std << ", median "
            << stats.median_negative_length << ")\n";
  return 0;
}

int cmd_train_sft(const std::string& config_path, const std::string& corpus_path,
                  const std::string& out, bool export_json) {
  const RunConfig config = load_run_config(config_path);
  const Corpus corpus = load_corpus(corpus_path);
  const Featurizer featurizer(config.featurizer);
  const SftResult result = sft_train(corpus, featurizer, config.sft);

  const fs::path out_path(out);
  ensure_parent_dir(out_path);
  save_policy(result.params, out_path.string());

  std::string trace = "epoch,loss\n";
  for (std::size_t i = 0; i < result.epoch_losses.size(); ++i) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", i, result.epoch_losses[i]);
    trace += buf;
  }
  write_text(sibling(out_path, ".losses.csv"), trace);
  if (export_json) {
    write_text(sibling(out_path, ".json"), policy_to_json(result.params));
  }
  std::cout << "sft: " << result.epoch_losses.size() - 1 << " epochs, loss "
            << result.epoch_losses.front() << " -> "
            << result.epoch_losses.back() << "\n";
  write_manifest(sibling(out_path, ".manifest.json"), "train-sft", config,
                 {{"corpus", corpus_path},
                  {"corpus_digest", file_digest(corpus_path)},
                  {"output", out_path.filename().string()},
                  {"output_digest", file_digest(out_path)}});
  return 0;
}

int cmd_train_rl(const std::string& config_path, const std::string& corpus_path,
                 const std::string& init_path, const std::string& out,
                 const std::string& scheme_override, bool export_json) {
  RunConfig config = load_run_config(config_path);
  if (scheme_override == "speed_control") {
    config.rl.scheme = RewardScheme::kSpeedControl;
  } else if (scheme_override == "constant") {
    config.rl.scheme = RewardScheme::kConstant;
  } else if (!scheme_override.empty()) {
    throw ValidationError("--scheme must be speed_control or constant");
  }
  const Corpus corpus = load_corpus(corpus_path);
  const PolicyParams init = load_policy(init_path);
  if (init.featurizer.digest() != config.featurizer.digest()) {
    throw ValidationError(
        "featurizer mismatch: parameter file was trained with a different "
        "featurizer configuration than [featurizer] in " + config_path);
  }
  const RlResult result = reinforce_train(corpus, init, config.rl);

  const fs::path out_path(out);
  ensure_parent_dir(out_path);
  save_policy(result.params, out_path.string());

  std::string trace = "epoch,mean_return\n";
  for (std::size_t i = 0; i < result.epoch_mean_returns.size(); ++i) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", i,
                  result.epoch_mean_returns[i]);
    trace += buf;
  }
  write_text(sibling(out_path, ".returns.csv"), trace);
  if (export_json) {
    write_text(sibling(out_path, ".json"), policy_to_json(result.params));
  }
  std::cout << "rl: " << result.epoch_mean_returns.size()
            << " epochs, mean return "
            << (result.epoch_mean_returns.empty()
                    ? 0.0
                    : result.epoch_mean_returns.back())
            << "\n";
  write_manifest(sibling(out_path, ".manifest.json"), "train-rl", config,
                 {{"corpus", corpus_path},
                  {"corpus_digest", file_digest(corpus_path)},
                  {"init", init_path},
                  {"output", out_path.filename().string()},
                  {"output_digest", file_digest(out_path)}});
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& corpus_path,
             const std::string& params_path, const std::string& out_dir,
             const std::string& mode_override, int jobs) {
  RunConfig config = load_run_config(config_path);
  if (mode_override == "turn") {
    config.eval_mode = EvalMode::kTurnLevel;
  } else if (mode_override == "chat") {
    config.eval_mode = EvalMode::kChatLevel;
  } else if (!mode_override.empty()) {
    throw ValidationError("--mode must be turn or chat");
  }
  const Corpus corpus = load_corpus(corpus_path);
  const PolicyParams params = load_policy(params_path);
  if (params.featurizer.digest() != config.featurizer.digest()) {
    throw ValidationError(
        "featurizer mismatch: parameter file was trained with a different "
        "featurizer configuration than [featurizer] in " + config_path);
  }
  const Featurizer featurizer(config.featurizer);
  const auto outcomes =
      run_policy(corpus, params, featurizer, config.rl.window, config.eval_act,
                 config.eval_seed, jobs);
  const EvalReport report =
      evaluate(outcomes, corpus, config.eval_mode, config.eval_options);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_report_json(report, (dir / "report.json").string());
  write_outcomes_csv(report, (dir / "outcomes.csv").string());
  std::cout << "eval (" << to_string(report.mode) << "): precision "
            << report.precision << ", recall " << report.recall << ", f1 "
            << report.f1 << ", speed " << report.speed << ", latency_f1 "
            << report.latency_f1 << ", fpr " << report.fpr << "\n";
  {
    // Plain per-window classification quality, independent of stopping.
    std::size_t tp = 0, fp = 0, fn = 0;
    const WindowFeatureCache cache =
        featurize_windows(corpus, featurizer, config.rl.window);
    for (std::size_t c = 0; c < corpus.chats.size(); ++c) {
      const Chat& chat = corpus.chats[c];
      for (int t = 1; t <= static_cast<int>(chat.size()); ++t) {
        const bool predicted =
            action_distribution(params, cache.at(c, t)).p_stop > 0.5;
        const bool actual =
            chat.turns[static_cast<std::size_t>(t - 1)].risk == 1;
        if (predicted && actual) ++tp;
        else if (predicted) ++fp;
        else if (actual) ++fn;
      }
    }
    const double precision = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0;
    const double recall = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0;
    const double turn_f1 = precision + recall
                               ? 2 * precision * recall / (precision + recall)
                               : 0;
    std::cout << "per-turn classification: precision " << precision
              << ", recall " << recall << ", f1 " << turn_f1 << "\n";
  }
  write_manifest(dir / "eval.manifest.json", "eval", config,
                 {{"corpus", corpus_path},
                  {"corpus_digest", file_digest(corpus_path)},
                  {"params", params_path},
                  {"params_digest", file_digest(params_path)},
                  {"report_digest", file_digest(dir / "report.json")}});
  return 0;
}

int cmd_baseline(const std::string& config_path, const std::string& train_path,
                 const std::string& eval_path, const std::string& out_dir,
                 int jobs) {
  const RunConfig config = load_run_config(config_path);
  const Corpus train = load_corpus(train_path);
  const Corpus eval_corpus = load_corpus(eval_path);
  const Featurizer featurizer(config.featurizer);
  const WindowClassifierModel model =
      train_window_classifier(train, featurizer, config.sft, config.two_tier);
  const auto outcomes =
      run_baseline(eval_corpus, model, featurizer, config.two_tier, jobs);
  const EvalReport report =
      evaluate(outcomes, eval_corpus, config.eval_mode, config.eval_options);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  save_policy(model.params, (dir / "baseline_params.bin").string());
  write_report_json(report, (dir / "baseline_report.json").string());
  write_outcomes_csv(report, (dir / "baseline_outcomes.csv").string());
  std::cout << "baseline (" << to_string(report.mode) << "): precision "
            << report.precision << ", recall " << report.recall << ", f1 "
            << report.f1 << ", speed " << report.speed << ", latency_f1 "
            << report.latency_f1 << ", fpr " << report.fpr << "\n";
  write_manifest(dir / "baseline.manifest.json", "baseline", config,
                 {{"train_corpus", train_path},
                  {"train_corpus_digest", file_digest(train_path)},
                  {"eval_corpus", eval_path},
                  {"eval_corpus_digest", file_digest(eval_path)}});
  return 0;
}

struct NamedOutcomes {
  std::string name;
  std::vector<DetectionOutcome> outcomes;
};

int cmd_analyze(const std::string& corpus_path,
                const std::vector<std::string>& outcome_specs,
                const std::string& out_dir) {
  if (outcome_specs.empty()) {
    throw ValidationError("analyze requires at least one --outcomes name=path");
  }
  const Corpus corpus = load_corpus(corpus_path);
  std::vector<NamedOutcomes> models;
  for (const std::string& spec : outcome_specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw ValidationError("--outcomes expects name=path, got \"" + spec + "\"");
    }
    models.push_back(
        {spec.substr(0, eq), read_outcomes_csv(spec.substr(eq + 1))});
  }

  const fs::path dir(out_dir);
  fs::create_directories(dir);

  // Cumulative stage counts per turn for every positive chat.
  {
    std::string csv = "chat_id,turn,cum_pi,cum_g,cum_a\n";
    for (const Chat& chat : corpus.chats) {
      if (chat.label != 1) continue;
      int pi = 0, g = 0, a = 0;
      for (std::size_t t = 0; t < chat.turns.size(); ++t) {
        switch (chat.turns[t].strategy) {
          case Strategy::kPI: ++pi; break;
          case Strategy::kG: ++g; break;
          case Strategy::kA: ++a; break;
          case Strategy::kOthers: break;
        }
        csv += chat.id + "," + std::to_string(t + 1) + "," +
               std::to_string(pi) + "," + std::to_string(g) + "," +
               std::to_string(a) + "\n";
      }
    }
    write_text(dir / "strategy_cumulative.csv", csv);
  }

  // Mean detection turn over detected positive chats, per model.
  {
    std::string csv = "model,mean_detection_turn,n_detections\n";
    for (const NamedOutcomes& model : models) {
      double sum = 0;
      std::size_t count = 0;
      for (const DetectionOutcome& o : model.outcomes) {
        if (o.chat_label == 1 && o.stopped) {
          sum += *o.stopped;
          ++count;
        }
      }
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6g",
                    count ? sum / static_cast<double>(count) : 0.0);
      csv += model.name + "," + buf + "," + std::to_string(count) + "\n";
    }
    write_text(dir / "detection_points.csv", csv);
  }

  // Distribution of strategy labels at the detected turns, per model.
  {
    std::unordered_map<std::string, const Chat*> by_id;
    for (const Chat& chat : corpus.chats) by_id[chat.id] = &chat;
    std::string csv = "model,strategy,count,fraction\n";
    for (const NamedOutcomes& model : models) {
      std::map<std::string, std::size_t> counts = {
          {"PI", 0}, {"G", 0}, {"A", 0}, {"Others", 0}};
      std::size_t total = 0;
      for (const DetectionOutcome& o : model.outcomes) {
        if (!o.stopped) continue;
        const auto it = by_id.find(o.chat_id);
        if (it == by_id.end()) {
          throw ValidationError("analyze: outcome for unknown chat \"" +
                                o.chat_id + "\"");
        }
        const Chat& chat = *it->second;
        const Turn& turn = chat.turns[static_cast<std::size_t>(*o.stopped - 1)];
        counts[to_string(turn.strategy)] += 1;
        ++total;
      }
      for (const char* strategy : {"PI", "G", "A", "Others"}) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g",
                      total ? static_cast<double>(counts[strategy]) /
                                  static_cast<double>(total)
                            : 0.0);
        csv += model.name + "," + strategy + "," +
               std::to_string(counts[strategy]) + "," + buf + "\n";
      }
    }
    write_text(dir / "strategy_at_detection.csv", csv);
  }

  // False positive rate over negative chats, per model.
  {
    std::string csv = "model,fpr,false_positives,true_negatives\n";
    for (const NamedOutcomes& model : models) {
      std::size_t fp = 0, tn = 0;
      for (const DetectionOutcome& o : model.outcomes) {
        if (o.chat_label != 0) continue;
        if (o.stopped) ++fp;
        else ++tn;
      }
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6g",
                    fp + tn ? static_cast<double>(fp) /
                                  static_cast<double>(fp + tn)
                            : 0.0);
      csv += model.name + "," + buf + "," + std::to_string(fp) + "," +
             std::to_string(tn) + "\n";
    }
    write_text(dir / "fpr.csv", csv);
  }
  std::cout << "analysis exports written to " << out_dir << "\n";
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{
      "espd: turn-level early risk detection on conversations - synthesis, "
      "training, evaluation, and analysis"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  std::string synth_config, synth_out = default_out_dir() + "/corpus.jsonl";
  std::int64_t synth_seed = -1;
  synth->add_option("--config", synth_config, "Run config file")->required();
  synth->add_option("--out", synth_out, "Output corpus path (JSONL)");
  synth->add_option("--seed", synth_seed, "Override [synth] seed");

  // validate
  auto* validate = app.add_subcommand("validate", "Validate a corpus file");
  std::string validate_in;
  bool validate_relaxed = false;
  validate->add_option("--in", validate_in, "Corpus path")->required();
  validate->add_flag("--relaxed", validate_relaxed,
                     "Allow risk labels decoupled from strategies");

  // train-sft
  auto* train_sft =
      app.add_subcommand("train-sft", "Supervised fine-tuning of the head");
  std::string sft_config, sft_corpus, sft_out;
  bool sft_export_json = false;
  train_sft->add_option("--config", sft_config, "Run config file")->required();
  train_sft->add_option("--corpus", sft_corpus, "Training corpus")->required();
  train_sft->add_option("--out", sft_out, "Output parameter file")->required();
  train_sft->add_flag("--export-json", sft_export_json,
                      "Also write a human-readable parameter dump");

  // train-rl
  auto* train_rl = app.add_subcommand(
      "train-rl", "Policy-gradient training with the speed-control reward");
  std::string rl_config, rl_corpus, rl_init, rl_out, rl_scheme;
  bool rl_export_json = false;
  train_rl->add_option("--config", rl_config, "Run config file")->required();
  train_rl->add_option("--corpus", rl_corpus, "Training corpus")->required();
  train_rl->add_option("--init", rl_init, "Initial (SFT) parameter file")
      ->required();
  train_rl->add_option("--out", rl_out, "Output parameter file")->required();
  train_rl->add_option("--scheme", rl_scheme,
                       "Override reward scheme: speed_control | constant");
  train_rl->add_flag("--export-json", rl_export_json,
                     "Also write a human-readable parameter dump");

  // eval
  auto* eval_cmd =
      app.add_subcommand("eval", "Run a trained policy over a corpus");
  std::string eval_config, eval_corpus, eval_params, eval_mode;
  std::string eval_out_dir = default_out_dir();
  int eval_jobs = 1;
  eval_cmd->add_option("--config", eval_config, "Run config file")->required();
  eval_cmd->add_option("--corpus", eval_corpus, "Evaluation corpus")->required();
  eval_cmd->add_option("--params", eval_params, "Parameter file")->required();
  eval_cmd->add_option("--out-dir", eval_out_dir, "Output directory");
  eval_cmd->add_option("--mode", eval_mode, "Override [eval] mode: turn | chat");
  eval_cmd->add_option("--jobs", eval_jobs, "Parallel chats")
      ->check(CLI::PositiveNumber);

  // baseline
  auto* baseline_cmd = app.add_subcommand(
      "baseline", "Train and run the two-tier sliding-window baseline");
  std::string bl_config, bl_train, bl_eval;
  std::string bl_out_dir = default_out_dir();
  int bl_jobs = 1;
  baseline_cmd->add_option("--config", bl_config, "Run config file")->required();
  baseline_cmd->add_option("--corpus", bl_train, "Training corpus")->required();
  baseline_cmd->add_option("--eval-corpus", bl_eval, "Evaluation corpus")
      ->required();
  baseline_cmd->add_option("--out-dir", bl_out_dir, "Output directory");
  baseline_cmd->add_option("--jobs", bl_jobs, "Parallel chats")
      ->check(CLI::PositiveNumber);

  // analyze
  auto* analyze_cmd = app.add_subcommand(
      "analyze", "Export plot-ready stage/earliness/FPR breakdowns");
  std::string an_corpus;
  std::string an_out_dir = default_out_dir();
  std::vector<std::string> an_outcomes;
  analyze_cmd->add_option("--corpus", an_corpus, "Corpus the outcomes refer to")
      ->required();
  analyze_cmd
      ->add_option("--outcomes", an_outcomes,
                   "Outcome CSVs as name=path (repeatable)")
      ->required();
  analyze_cmd->add_option("--out-dir", an_out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Prints help or the usage error; normalize failures to exit code 1.
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*synth) return cmd_synth(synth_config, synth_out, synth_seed);
  if (*validate) return cmd_validate(validate_in, validate_relaxed);
  if (*train_sft)
    return cmd_train_sft(sft_config, sft_corpus, sft_out, sft_export_json);
  if (*train_rl)
    return cmd_train_rl(rl_config, rl_corpus, rl_init, rl_out, rl_scheme,
                        rl_export_json);
  if (*eval_cmd)
    return cmd_eval(eval_config, eval_corpus, eval_params, eval_out_dir,
                    eval_mode, eval_jobs);
  if (*baseline_cmd)
    return cmd_baseline(bl_config, bl_train, bl_eval, bl_out_dir, bl_jobs);
  if (*analyze_cmd) return cmd_analyze(an_corpus, an_outcomes, an_out_dir);
  return 0;
}

}  // namespace
}  // namespace espd::cli

int main(int argc, char** argv) {
  try {
    return espd::cli::dispatch(argc, argv);
  } catch (const espd::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const espd::DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return 3;
  } catch (const espd::ParseError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const espd::ValidationError& e) {
    std::cerr << "validation failed: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
