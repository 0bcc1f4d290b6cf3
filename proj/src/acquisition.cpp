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

#include "promptbo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "promptbo/error.hpp"

namespace promptbo {

void AcquisitionConfig::validate() const {
  if (!(kappa_start >= kappa_end && kappa_end >= 0.0))
    throw ConfigError("run.acquisition.kappa_start", "need kappa_start >= kappa_end >= 0");
  if (xi < 0.0) throw ConfigError("run.acquisition.xi", "must be >= 0");
  if (batch_m < 1) throw ConfigError("run.acquisition.batch_m", "must be >= 1");
}

double kappa_schedule(int round_index, int total_rounds, const AcquisitionConfig& cfg) {
  if (total_rounds < 1 || round_index < 0 || round_index >= total_rounds)
    throw ContractError("round index outside [0, total_rounds)");
  if (total_rounds == 1) return cfg.kappa_start;
  if (round_index == total_rounds - 1) return cfg.kappa_end;
  const double frac = static_cast<double>(round_index) / static_cast<double>(total_rounds - 1);
  return cfg.kappa_start + (cfg.kappa_end - cfg.kappa_start) * frac;
}

double ucb(double mean, double std, double kappa) { return mean + kappa * std; }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double ei(double mean, double std, double f_star, double xi) {
  const double improvement = mean - f_star - xi;
  if (std <= 0.0) return std::max(improvement, 0.0);
  const double z = improvement / std;
  // Guard against tiny negative values from cancellation far in the left tail.
  return std::max(improvement * normal_cdf(z) + std * normal_pdf(z), 0.0);
}

std::vector<ScoredCandidate> score_candidates(const std::vector<Candidate>& candidates,
                                              const AcquisitionConfig& cfg, double kappa, double f_star) {
  std::vector<ScoredCandidate> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    const double score = cfg.kind == AcquisitionKind::ucb
                             ? ucb(c.posterior.mean, c.posterior.std, kappa)
                             : ei(c.posterior.mean, c.posterior.std, f_star, cfg.xi);
    out.push_back({c.prompt, c.posterior, score});
  }
  return out;
}

bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.posterior.mean != b.posterior.mean) return a.posterior.mean > b.posterior.mean;
  return a.prompt.id() < b.prompt.id();
}

std::vector<ScoredCandidate> rank(const std::vector<Candidate>& candidates, const AcquisitionConfig& cfg,
                                  double kappa, double f_star) {
  if (candidates.empty()) throw SelectionError("no candidates to select from");
  auto scored = score_candidates(candidates, cfg, kappa, f_star);
  std::stable_sort(scored.begin(), scored.end(), ranks_before);
  return scored;
}

std::vector<Prompt> select(const std::vector<Candidate>& candidates, const AcquisitionConfig& cfg, double kappa,
                           double f_star) {
  const auto ranked = rank(candidates, cfg, kappa, f_star);
  const auto m = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.batch_m, 1)), ranked.size());
  std::vector<Prompt> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.push_back(ranked[i].prompt);
  return out;
}

}  // namespace promptbo
