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

#include "promptbo/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "promptbo/error.hpp"
#include "promptbo/http_backend.hpp"
#include "promptbo/scorer.hpp"
#include "promptbo/simulated_backend.hpp"

namespace promptbo {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::liar: return "liar";
    case DatasetFormat::ethos: return "ethos";
    case DatasetFormat::clarification: return "clarification";
  }
  return "?";
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like key.path=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError(key, "empty key segment");
    if (!node->is_object()) throw ConfigError(key, "cannot descend into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

namespace {

// Reads fields of one JSON object and rejects keys that were never asked for.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, std::string& out) {
    if (auto* v = find(key)) {
      if (!v->is_string()) throw ConfigError(key_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void read(const std::string& key, double& out) {
    if (auto* v = find(key)) {
      if (!v->is_number()) throw ConfigError(key_path(key), "expected a number");
      out = v->get<double>();
    }
  }
  void read(const std::string& key, int& out) {
    if (auto* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(key_path(key), "expected an integer");
      out = v->get<int>();
    }
  }
  // size_t and uint64_t are the same type on the supported platforms.
  void read(const std::string& key, std::uint64_t& out) {
    if (auto* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(key_path(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const std::string& key, bool& out) {
    if (auto* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(key_path(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void read(const std::string& key, std::vector<std::string>& out) {
    if (auto* v = find(key)) {
      if (!v->is_array()) throw ConfigError(key_path(key), "expected a list of strings");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_string())
          throw ConfigError(key_path(key) + "[" + std::to_string(i) + "]", "expected a string");
        out.push_back((*v)[i].get<std::string>());
      }
    }
  }
  void read_ms(const std::string& key, std::chrono::milliseconds& out) {
    int ms = static_cast<int>(out.count());
    read(key, ms);
    out = std::chrono::milliseconds(ms);
  }

  template <typename F>
  void child(const std::string& key, F&& f) {
    if (auto* v = find(key)) {
      Section s(*v, key_path(key));
      f(s);
      s.finish();
    }
  }

  void finish() const {
    for (auto& [key, _] : obj_.items())
      if (!seen_.count(key)) throw ConfigError(key_path(key), "unknown key");
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename E>
E enum_value(Section& s, const std::string& key, const std::vector<std::pair<const char*, E>>& names, E fallback) {
  std::string raw;
  s.read(key, raw);
  if (raw.empty()) return fallback;
  for (auto& [name, value] : names)
    if (raw == name) return value;
  std::string allowed;
  for (auto& [name, _] : names) allowed += (allowed.empty() ? "" : "|") + std::string(name);
  throw ConfigError(s.key_path(key), "expected one of " + allowed + ", got '" + raw + "'");
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

void read_oracle(Section& s, SimulatedOracle& o) {
  if (auto* kw = s.find("feature_keywords")) {
    const std::string path = s.key_path("feature_keywords");
    if (!kw->is_array()) throw ConfigError(path, "expected a list of {keyword, weight}");
    o.feature_keywords.clear();
    for (std::size_t i = 0; i < kw->size(); ++i) {
      Section item((*kw)[i], path + "[" + std::to_string(i) + "]");
      std::string keyword;
      double weight = 0.0;
      item.read("keyword", keyword);
      item.read("weight", weight);
      item.finish();
      o.feature_keywords.emplace_back(keyword, weight);
    }
  }
  s.read("base_accuracy", o.base_accuracy);
  s.read("max_accuracy", o.max_accuracy);
  s.read("reversal_keywords", o.reversal_keywords);
  s.read("rng_seed", o.rng_seed);
}

}  // namespace

CliConfigFile parse_config(const json& doc, const std::string& base_dir) {
  CliConfigFile cfg;
  cfg.snapshot = doc;
  Section root(doc, "");

  root.child("dataset", [&](Section& s) {
    cfg.dataset.format = enum_value<DatasetFormat>(
        s, "format",
        {{"liar", DatasetFormat::liar}, {"ethos", DatasetFormat::ethos}, {"clarification", DatasetFormat::clarification}},
        DatasetFormat::liar);
    s.read("path", cfg.dataset.path);
    cfg.dataset.path = resolve(base_dir, cfg.dataset.path);
    s.read("control_size", cfg.dataset.control_size);
    s.read("eval_size", cfg.dataset.eval_size);
    s.read("partition_seed", cfg.dataset.partition_seed);
  });
  if (cfg.dataset.path.empty()) throw ConfigError("dataset.path", "required");

  root.child("backend", [&](Section& s) {
    auto& b = cfg.backend;
    b.kind = enum_value<BackendKind>(s, "kind", {{"simulated", BackendKind::simulated}, {"http", BackendKind::http}},
                                     BackendKind::simulated);
    s.read("endpoint", b.endpoint);
    s.read("model_name", b.model_name);
    s.read("api_key_env", b.api_key_env);
    s.read("temperature", b.temperature);
    s.read_ms("request_timeout_ms", b.request_timeout);
    s.read("max_retries", b.max_retries);
    s.read_ms("retry_backoff_ms", b.retry_backoff);
    s.read("max_in_flight", b.max_in_flight);
    s.read("rng_seed", b.rng_seed);
    s.child("oracle", [&](Section& o) { read_oracle(o, cfg.oracle); });
    s.child("extraction", [&](Section& e) {
      e.read("positive", cfg.extraction.positive);
      e.read("negative", cfg.extraction.negative);
    });
  });

  root.child("run", [&](Section& s) {
    auto& r = cfg.run;
    s.read("rounds", r.rounds);
    s.read("seeds", r.seeds);
    s.child("acquisition", [&](Section& a) {
      r.acquisition.kind =
          enum_value<AcquisitionKind>(a, "kind", {{"ucb", AcquisitionKind::ucb}, {"ei", AcquisitionKind::ei}},
                                      AcquisitionKind::ucb);
      a.read("kappa_start", r.acquisition.kappa_start);
      a.read("kappa_end", r.acquisition.kappa_end);
      a.read("xi", r.acquisition.xi);
      a.read("batch_m", r.acquisition.batch_m);
    });
    s.child("expansion", [&](Section& e) {
      e.read("n_gradients", r.expansion.n_gradients);
      e.read("steps_per_gradient", r.expansion.steps_per_gradient);
      e.read("mc_per_edit", r.expansion.mc_per_edit);
      e.read("n_seeds", r.expansion.n_seeds);
      e.read("errors_per_gradient", r.expansion.errors_per_gradient);
      e.read("max_error_chars", r.expansion.max_error_chars);
    });
    s.child("kernel_init", [&](Section& k) {
      k.read("length_scale", r.kernel_init.length_scale);
      k.read("noise_variance", r.kernel_init.noise_variance);
    });
    s.read("sigma_min", r.sigma_min);
    s.read("repeat_margin", r.repeat_margin);
    s.read("max_repeats", r.max_repeats);
    s.read("optimize_hypers", r.optimize_hypers);
    s.child("hyperopt", [&](Section& h) {
      h.read("steps", r.hyperopt.steps);
      h.read("learning_rate", r.hyperopt.learning_rate);
    });
    s.read("reversal_threshold", r.reversal_threshold);
    s.read("rng_seed", r.rng_seed);
    r.exec = enum_value<Exec>(s, "exec", {{"parallel", Exec::parallel}, {"serial", Exec::serial}}, Exec::parallel);
    s.read("role_templates", cfg.role_templates);
    cfg.role_templates = resolve(base_dir, cfg.role_templates);
  });

  root.child("output", [&](Section& s) {
    s.read("run_dir", cfg.output.run_dir);
    s.read("cache_path", cfg.output.cache_path);
  });
  root.finish();

  cfg.output.run_dir = resolve(base_dir, cfg.output.run_dir);
  cfg.output.cache_path = cfg.output.cache_path.empty()
                              ? (fs::path(cfg.output.run_dir) / "cache.jsonl").string()
                              : resolve(base_dir, cfg.output.cache_path);

  if (cfg.dataset.control_size == 0) throw ConfigError("dataset.control_size", "must be >= 1");
  if (cfg.dataset.eval_size == 0) throw ConfigError("dataset.eval_size", "must be >= 1");
  cfg.run.validate();
  cfg.backend.validate();
  if (cfg.backend.kind == BackendKind::simulated) cfg.oracle.validate();
  return cfg;
}

CliConfigFile load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("malformed JSON: ") + e.what());
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(doc, fs::path(path).parent_path().string());
}

std::vector<Example> load_dataset(const DatasetSection& section) {
  std::ifstream in(section.path);
  if (!in) throw ConfigError("dataset.path", "cannot open " + section.path);
  switch (section.format) {
    case DatasetFormat::liar: return parse_liar(in);
    case DatasetFormat::ethos: return parse_ethos(in);
    case DatasetFormat::clarification: return parse_queries(in);
  }
  return {};
}

Partition partition_for(const DatasetSection& section, const std::vector<Example>& examples) {
  return partition(examples, section.control_size, section.eval_size, section.partition_seed,
                   section.format != DatasetFormat::clarification);
}

BackendStack::BackendStack(const CliConfigFile& cfg) {
  if (cfg.backend.kind == BackendKind::simulated)
    base_ = std::make_unique<SimulatedBackend>(cfg.oracle);
  else
    base_ = std::make_unique<HttpBackend>(cfg.backend, cfg.extraction);
  top_ = base_.get();
  if (cfg.dataset.format == DatasetFormat::clarification) {
    wrapper_ = std::make_unique<ClarifyingClassifier>(*base_);
    top_ = wrapper_.get();
  }
}

}  // namespace promptbo
