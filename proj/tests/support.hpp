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

// Independent reference computations. Nothing here uses the library's
// Cholesky path: posteriors come from joint-Gaussian conditioning with LU
// solves, likelihoods from LU determinants, kernels from byte loops.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "promptbo/annotator.hpp"
#include "promptbo/hash.hpp"
#include "promptbo/scorer.hpp"
#include "promptbo/surrogate.hpp"

namespace testing {

using namespace promptbo;

inline PredictionVector make_vector(const std::vector<std::uint8_t>& bits, const std::string& id = "p") {
  PredictionVector v;
  v.prompt_id = id;
  v.bits = BitVector(bits);
  v.predicted_labels = bits;  // all-ones ground truth: predicted label equals the bit
  return v;
}

inline std::vector<std::uint8_t> random_bits(SplitMix64& rng, std::size_t len) {
  std::vector<std::uint8_t> b(len);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng.below(2));
  return b;
}

inline Observation make_observation(const std::vector<std::uint8_t>& bits, double accuracy, const std::string& text) {
  Observation o;
  o.prompt = Prompt(text);
  o.accuracy = accuracy;
  o.prediction_vector = make_vector(bits, o.prompt.id());
  return o;
}

inline std::vector<Observation> random_observations(SplitMix64& rng, std::size_t n, std::size_t len) {
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < n; ++i)
    obs.push_back(make_observation(random_bits(rng, len), 0.3 + 0.6 * rng.uniform(), "prompt " + std::to_string(i)));
  return obs;
}

inline double brute_kernel(const PredictionVector& a, const PredictionVector& b, double r) {
  const auto x = a.bits.to_bytes(), y = b.bits.to_bytes();
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d += (double(x[i]) - double(y[i])) * (double(x[i]) - double(y[i]));
  return std::exp(-d / (2.0 * r));
}

inline double brute_mean(const PredictionVector& v) {
  const auto x = v.bits.to_bytes();
  double s = 0.0;
  for (auto b : x) s += b;
  return s / static_cast<double>(x.size());
}

struct DensePosterior {
  double mean;
  double variance;
};

// Conditions the joint Gaussian over (a, f*) on a.
inline DensePosterior dense_posterior(const std::vector<Observation>& obs, const KernelParams& p,
                                      const PredictionVector& cand) {
  const auto n = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd joint(n + 1, n + 1);
  Eigen::VectorXd mean(n + 1);
  for (Eigen::Index i = 0; i <= n; ++i) {
    const auto& vi = i < n ? obs[static_cast<std::size_t>(i)].prediction_vector : cand;
    mean(i) = brute_mean(vi);
    for (Eigen::Index j = 0; j <= n; ++j) {
      const auto& vj = j < n ? obs[static_cast<std::size_t>(j)].prediction_vector : cand;
      joint(i, j) = brute_kernel(vi, vj, p.length_scale) + (i == j && i < n ? p.noise_variance : 0.0);
    }
  }
  Eigen::VectorXd a(n);
  for (Eigen::Index i = 0; i < n; ++i) a(i) = obs[static_cast<std::size_t>(i)].accuracy;
  const Eigen::MatrixXd s11 = joint.topLeftCorner(n, n);
  const Eigen::VectorXd s12 = joint.topRightCorner(n, 1);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(s11);
  return {mean(n) + s12.dot(lu.solve(a - mean.head(n))), joint(n, n) - s12.dot(lu.solve(s12))};
}

inline double dense_lml(const std::vector<Observation>& obs, const KernelParams& p) {
  const auto n = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd k(n, n);
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& vi = obs[static_cast<std::size_t>(i)].prediction_vector;
    r(i) = obs[static_cast<std::size_t>(i)].accuracy - brute_mean(vi);
    for (Eigen::Index j = 0; j < n; ++j)
      k(i, j) = brute_kernel(vi, obs[static_cast<std::size_t>(j)].prediction_vector, p.length_scale) +
                (i == j ? p.noise_variance : 0.0);
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
  return -0.5 * r.dot(lu.solve(r)) - 0.5 * std::log(lu.determinant()) -
         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

// Central differences in log-parameter space, converted back to natural
// parameters: d/dtheta = (d/dlog theta) / theta.
inline LmlGradient finite_difference_gradient(const std::vector<Observation>& obs, const KernelParams& p,
                                              double h = 1e-5) {
  auto at = [&](double log_r, double log_s) {
    return log_marginal_likelihood(obs, KernelParams{std::exp(log_r), std::exp(log_s)});
  };
  const double lr = std::log(p.length_scale), ls = std::log(p.noise_variance);
  LmlGradient g;
  g.length_scale = (at(lr + h, ls) - at(lr - h, ls)) / (2 * h) / p.length_scale;
  g.noise_variance = (at(lr, ls + h) - at(lr, ls - h)) / (2 * h) / p.noise_variance;
  return g;
}

struct GridBest {
  double lml = -INFINITY;
  KernelParams params;
};

// Log-spaced grid over the same bounds the optimizer clamps to.
inline GridBest grid_scan(const std::vector<Observation>& obs, int points, const HyperoptOptions& bounds = {}) {
  GridBest best;
  for (int i = 0; i < points; ++i) {
    const double r = std::exp(std::log(bounds.min_length_scale) +
                              (std::log(bounds.max_length_scale) - std::log(bounds.min_length_scale)) * i / (points - 1));
    for (int j = 0; j < points; ++j) {
      const double s =
          std::exp(std::log(bounds.min_noise_variance) +
                   (std::log(bounds.max_noise_variance) - std::log(bounds.min_noise_variance)) * j / (points - 1));
      const KernelParams p{r, s};
      const double v = dense_lml(obs, p);
      if (v > best.lml) best = {v, p};
    }
  }
  return best;
}

// Observations whose accuracies follow the prediction-vector structure, so
// the likelihood has an interior optimum.
inline std::vector<Observation> structured_observations(std::uint64_t seed, std::size_t n, std::size_t len) {
  SplitMix64 rng(seed);
  std::vector<std::uint8_t> base = random_bits(rng, len);
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < n; ++i) {
    auto bits = base;
    const auto flips = rng.below(len / 2 + 1);
    for (std::uint64_t f = 0; f < flips; ++f) bits[rng.below(len)] ^= 1U;
    double m = 0.0;
    for (auto b : bits) m += b;
    m /= static_cast<double>(len);
    const double noise = 0.08 * (rng.uniform() - 0.5);
    obs.push_back(make_observation(bits, std::clamp(m + 0.1 * std::sin(3.0 * m) + noise, 0.0, 1.0),
                                   "structured " + std::to_string(i)));
  }
  return obs;
}


// Accuracies drawn from the GP prior itself with known (R, noise), so the
// likelihood has an interior optimum near the generating parameters.
inline std::vector<Observation> prior_sample_observations(std::uint64_t seed, std::size_t n, std::size_t len,
                                                          const KernelParams& truth) {
  SplitMix64 rng(seed);
  const auto base = random_bits(rng, len);
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < n; ++i) {
    auto bits = base;
    const auto flips = rng.below(len / 2 + 1);
    for (std::uint64_t f = 0; f < flips; ++f) bits[rng.below(len)] ^= 1U;
    obs.push_back(make_observation(bits, 0.0, "sampled " + std::to_string(i)));
  }
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd k(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      k(i, j) = brute_kernel(obs[static_cast<std::size_t>(i)].prediction_vector,
                             obs[static_cast<std::size_t>(j)].prediction_vector, truth.length_scale) +
                (i == j ? truth.noise_variance : 0.0);
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(k).matrixL();
  Eigen::VectorXd z(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    // Box-Muller
    const double u1 = std::max(rng.uniform(), 1e-300), u2 = rng.uniform();
    z(i) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  const Eigen::VectorXd f = l * z;
  for (Eigen::Index i = 0; i < m; ++i) {
    auto& o = obs[static_cast<std::size_t>(i)];
    o.accuracy = brute_mean(o.prediction_vector) + f(i);
  }
  return obs;
}

}  // namespace testing

namespace testing {

// True when (score, mean, id) does not rank ahead of the reference triple.
inline bool ranks_no_higher(double score, double mean, const std::string& id, double ref_score, double ref_mean,
                            const std::string& ref_id) {
  if (score != ref_score) return score < ref_score;
  if (mean != ref_mean) return mean < ref_mean;
  return id >= ref_id;
}

}  // namespace testing
