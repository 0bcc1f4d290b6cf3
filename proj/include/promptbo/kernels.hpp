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
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace promptbo {

/// Packed binary vector. Squared Euclidean distance between two binary
/// vectors is their Hamming distance, computed here with popcount.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}
  explicit BitVector(const std::vector<std::uint8_t>& bits);

  std::size_t size() const noexcept { return size_; }
  bool get(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }
  void set(std::size_t i, bool value);
  std::size_t count() const;
  std::vector<std::uint8_t> to_bytes() const;

  /// Throws ContractError on length mismatch.
  friend std::size_t hamming(const BitVector& a, const BitVector& b);
  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Execution policy for the data-parallel kernels. The serial variants are
/// the reference implementation the OpenMP variants are tested against.
enum class Exec { serial, parallel };

namespace kernels {

/// exp(-d / (2R)).
inline double rbf(double squared_distance, double length_scale) {
  return std::exp(-squared_distance / (2.0 * length_scale));
}

namespace serial {
Eigen::MatrixXd distance_matrix(std::span<const BitVector> vectors);
Eigen::MatrixXd cross_distances(std::span<const BitVector> rows, std::span<const BitVector> cols);
}  // namespace serial

namespace omp {
Eigen::MatrixXd distance_matrix(std::span<const BitVector> vectors);
Eigen::MatrixXd cross_distances(std::span<const BitVector> rows, std::span<const BitVector> cols);
}  // namespace omp

/// Symmetric matrix of pairwise Hamming distances.
inline Eigen::MatrixXd distance_matrix(std::span<const BitVector> vectors, Exec exec = Exec::parallel) {
  return exec == Exec::serial ? serial::distance_matrix(vectors) : omp::distance_matrix(vectors);
}

/// rows.size() x cols.size() Hamming distances.
inline Eigen::MatrixXd cross_distances(std::span<const BitVector> rows, std::span<const BitVector> cols,
                                       Exec exec = Exec::parallel) {
  return exec == Exec::serial ? serial::cross_distances(rows, cols)
                              : omp::cross_distances(rows, cols);
}

/// Elementwise RBF of a distance matrix.
Eigen::MatrixXd rbf_matrix(const Eigen::MatrixXd& squared_distances, double length_scale);

}  // namespace kernels
}  // namespace promptbo
