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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "promptbo/optimizer.hpp"
#include "promptbo/simulated_backend.hpp"

namespace promptbo::bench {

/// Six-keyword simulated oracle, a synthetic labeled dataset and its
/// 75/50/rest partition.
struct Fixture {
  SimulatedOracle oracle;
  std::vector<Example> examples;
  Partition partition;
  std::vector<std::string> seeds;

  /// T=10, one selection per round, default expansion.
  RunConfig config(std::uint64_t rng_seed) const;
};

Fixture standard_fixture();

/// A seed text carrying the reversal keyword plus four feature keywords.
std::string reversal_seed();

struct Outcome {
  Trajectory trajectory;
  std::string jsonl;
  double final_expected = 0.0;  // oracle accuracy of the reported best prompt
  CallCounts calls;
};

/// One run on a fresh simulated backend. `cache` defaults to a private one.
Outcome run_simulated(const Fixture& fixture, const RunConfig& config, EvalCache* cache = nullptr);

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Options {
  int seed_count = 10;
  std::optional<double> kappa_override;  // negative control
};

Check convergence(const Fixture& f, int seed_count = 5);
Check bo_vs_random(const Fixture& f, int seed_count, std::optional<double> kappa_override = {});
Check posterior_dynamics(const Fixture& f, int seed_count = 5);
Check determinism(const Fixture& f, int seed_count);
Check reversal_containment(const Fixture& f, int seed_count = 5);
Check cache_economy(const Fixture& f);

/// The property matrix printed by `promptbo bench`.
std::vector<Check> matrix(const Options& options);

}  // namespace promptbo::bench
