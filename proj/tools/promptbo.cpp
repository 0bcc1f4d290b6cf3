// Copyright 2026 The promptbo Authors. All Rights Reserved.
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
// =============================================================================

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "promptbo/config.hpp"
#include "promptbo/error.hpp"
#include "promptbo/oracle_suite.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace promptbo;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfigError = 2, kBackendError = 3, kEarlyTermination = 4 };

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

std::string excerpt(const std::string& text, std::size_t width) {
  return text.size() <= width ? text : text.substr(0, width - 3) + "...";
}

void print_round(const json& r) {
  std::printf("round %2d  kappa %.3f", r["round"].get<int>(), r["kappa"].get<double>());
  for (const auto& s : r["selected"])
    std::printf("  selected mu %.3f +- %.3f  measured %.3f%s", s["mu"].get<double>(), s["sigma"].get<double>(),
                s["measured_accuracy"].get<double>(), s["flagged"].get<bool>() ? " (flagged)" : "");
  std::printf("  best %.3f\n", r["best_so_far"].get<double>());
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides, bool verbose) {
  const CliConfigFile cfg = load_config(config_path, overrides);
  const auto examples = load_dataset(cfg.dataset);
  const Partition part = partition_for(cfg.dataset, examples);
  RunHooks hooks;
  if (!cfg.role_templates.empty()) hooks.templates = RoleTemplates::load(cfg.role_templates);
  // Output locations differ between replays, so they stay out of the header.
  json snapshot = cfg.snapshot;
  snapshot.erase("output");
  hooks.config_snapshot = snapshot;

  fs::create_directories(cfg.output.run_dir);
  if (!fs::path(cfg.output.cache_path).parent_path().empty())
    fs::create_directories(fs::path(cfg.output.cache_path).parent_path());
  const fs::path dir(cfg.output.run_dir);
  {
    std::ofstream manifest(dir / "partition.json");
    manifest << partition_manifest(part) << "\n";
  }

  EvalCache cache;
  if (fs::exists(cfg.output.cache_path)) cache.load_file(cfg.output.cache_path);
  cache.attach(cfg.output.cache_path);

  BackendStack backends(cfg);
  std::ofstream traj(dir / "trajectory.jsonl", std::ios::trunc);
  std::ofstream surrogate(dir / "surrogate.jsonl", std::ios::trunc);
  hooks.on_record = [&](const json& rec) {
    traj << rec.dump() << "\n";
    traj.flush();
    if (rec["record"] == "round") print_round(rec);
    if (verbose && rec.contains("warnings"))
      for (const auto& w : rec["warnings"]) std::fprintf(stderr, "warning: %s\n", w.get<std::string>().c_str());
  };
  hooks.on_surrogate = [&](const json& diag) {
    surrogate << diag.dump() << "\n";
    if (verbose)
      std::fprintf(stderr, "surrogate round %d: R=%.4g noise=%.4g lml=%.4f jitter=%.1e\n", diag["round"].get<int>(),
                   diag["length_scale"].get<double>(), diag["noise_variance"].get<double>(),
                   diag["lml"].get<double>(), diag["jitter"].get<double>());
  };

  const std::string started = utc_now();
  const Trajectory t = run(cfg.run, part, backends.top(), cache, hooks);
  {
    std::ofstream meta(dir / "run_meta.json");
    meta << json{{"config_path", config_path},
                 {"overrides", overrides},
                 {"started_at", started},
                 {"finished_at", utc_now()},
                 {"partition_manifest_hash", t.partition_hash}}
                .dump(2)
         << "\n";
  }

  const auto& s = t.summary;
  std::printf("best %.3f  %s\n", s.best_eval_accuracy, s.best_prompt_text.c_str());
  if (s.test_accuracy) std::printf("test accuracy %.3f\n", *s.test_accuracy);
  switch (s.termination) {
    case Termination::completed: return kOk;
    case Termination::expansion_exhausted:
      std::fprintf(stderr, "early termination after round %d: %s\n", s.rounds_completed, s.reason.c_str());
      return kEarlyTermination;
    case Termination::backend_failure:
      std::fprintf(stderr, "backend failure after round %d: %s (classify calls %llu, completion calls %llu)\n",
                   s.rounds_completed, s.reason.c_str(), static_cast<unsigned long long>(s.calls.classify),
                   static_cast<unsigned long long>(s.calls.complete));
      return kBackendError;
  }
  return kOk;
}

int cmd_bench(int seed_count, std::optional<double> force_kappa) {
  bench::Options options;
  options.seed_count = seed_count;
  options.kappa_override = force_kappa;
  const auto checks = bench::matrix(options);
  bool ok = true;
  std::printf("%-22s %-6s %s\n", "property", "result", "detail");
  for (const auto& c : checks) {
    std::printf("%-22s %-6s %s\n", c.name.c_str(), c.pass ? "PASS" : "FAIL", c.detail.c_str());
    ok = ok && c.pass;
  }
  return ok ? kOk : kFailure;
}

int cmd_inspect(const std::string& run_dir) {
  const fs::path file = fs::path(run_dir) / "trajectory.jsonl";
  std::ifstream in(file);
  if (!in) {
    std::fprintf(stderr, "no trajectory file in %s\n", run_dir.c_str());
    return kFailure;
  }
  std::vector<json> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line));
      if (!records.back().is_object() || !records.back().contains("record")) throw std::runtime_error("no record kind");
    } catch (const std::exception& e) {
      std::fprintf(stderr, "corrupt trajectory record %zu: %s\n", records.size(), e.what());
      return kFailure;
    }
  }
  if (records.empty()) {
    std::fprintf(stderr, "empty trajectory in %s\n", run_dir.c_str());
    return kFailure;
  }

  std::vector<json> reversals;
  const json* summary = nullptr;
  std::printf("%-5s %-64s %-8s %s\n", "round", "prompt", "accuracy", "best");
  for (const auto& r : records) {
    const auto kind = r["record"].get<std::string>();
    if (kind == "bootstrap") {
      for (const auto& s : r["seeds"])
        std::printf("%-5d %-64s %-8.3f %.3f\n", 0, excerpt(s["text"], 64).c_str(), s["measured_accuracy"].get<double>(),
                    r["best_so_far"].get<double>());
    } else if (kind == "round") {
      for (const auto& s : r["selected"])
        std::printf("%-5d %-64s %-8.3f %.3f\n", r["round"].get<int>(), excerpt(s["text"], 64).c_str(),
                    s["measured_accuracy"].get<double>(), r["best_so_far"].get<double>());
    } else if (kind == "summary") {
      summary = &r;
    }
    if (r.contains("reversals"))
      for (const auto& e : r["reversals"]) reversals.push_back(e);
  }

  std::printf("\nreversal events: %zu\n", reversals.size());
  for (const auto& e : reversals)
    std::printf("  round %d  %s  accuracy %.3f  flipped %.3f  disagreement %.3f  %s\n", e["round"].get<int>(),
                e["prompt_id"].get<std::string>().c_str(), e["control_accuracy"].get<double>(),
                e["flipped_accuracy"].get<double>(), e["disagreement"].get<double>(),
                excerpt(e["text"], 60).c_str());

  if (!summary) {
    std::printf("\nno summary record (run incomplete)\n");
    return kFailure;
  }
  const auto& s = *summary;
  std::printf("\nbest prompt (%s): %s\n", s["best_prompt_id"].get<std::string>().c_str(),
              s["best_prompt_text"].get<std::string>().c_str());
  std::printf("eval accuracy %.3f", s["best_eval_accuracy"].get<double>());
  if (!s["test_accuracy"].is_null()) std::printf("  test accuracy %.3f", s["test_accuracy"].get<double>());
  std::printf("\ntermination %s  rounds %d\n", s["termination"].get<std::string>().c_str(),
              s["rounds_completed"].get<int>());
  const auto& c = s["calls"];
  std::printf("calls: classify %llu (control %llu, eval %llu, test %llu), completions %llu\n",
              c["classify"].get<unsigned long long>(), c["control"].get<unsigned long long>(),
              c["eval"].get<unsigned long long>(), c["test"].get<unsigned long long>(),
              c["complete"].get<unsigned long long>());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimization of LLM prompts"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::vector<std::string> overrides;
  bool verbose = false;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--override", overrides, "key.path=value (repeatable)")->allow_extra_args(false);
  app.add_flag("-v,--verbose", verbose, "Print surrogate diagnostics and warnings");

  auto* run_cmd = app.add_subcommand("run", "Run the optimization loop");
  bool fixed_hypers = false;
  run_cmd->add_flag("--fixed-hypers", fixed_hypers, "Keep the initial kernel parameters (same as run.optimize_hypers=false)");
  auto* bench_cmd = app.add_subcommand("bench", "Run the simulated-oracle property matrix");
  int seed_count = 10;
  std::optional<double> force_kappa;
  bench_cmd->add_option("--seeds", seed_count, "Number of rng seeds")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--force-kappa", force_kappa)->group("");
  auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a run directory");
  std::string run_dir;
  inspect_cmd->add_option("run_dir", run_dir, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      if (config_path.empty()) throw ConfigError("--config", "required for run");
      if (fixed_hypers) overrides.push_back("run.optimize_hypers=false");
      return cmd_run(config_path, overrides, verbose);
    }
    if (*bench_cmd) return cmd_bench(seed_count, force_kappa);
    if (*inspect_cmd) return cmd_inspect(run_dir);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "dataset error: %s\n", e.what());
    return kConfigError;
  } catch (const PartitionError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const BackendError& e) {
    std::fprintf(stderr, "backend error: %s\n", e.what());
    return kBackendError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}
