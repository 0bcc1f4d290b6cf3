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

#include "promptbo/kernels.hpp"

#include <bit>

#include "promptbo/error.hpp"

namespace promptbo {

BitVector::BitVector(const std::vector<std::uint8_t>& bits) : BitVector(bits.size()) {
  for (std::size_t i = 0; i < bits.size(); ++i) set(i, bits[i] != 0);
}

void BitVector::set(std::size_t i, bool value) {
  const std::uint64_t mask = std::uint64_t{1} << (i % 64);
  if (value) words_[i / 64] |= mask;
  else words_[i / 64] &= ~mask;
}

std::size_t BitVector::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::vector<std::uint8_t> BitVector::to_bytes() const {
  std::vector<std::uint8_t> out(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i] = get(i) ? 1 : 0;
  return out;
}

std::size_t hamming(const BitVector& a, const BitVector& b) {
  if (a.size_ != b.size_)
    throw ContractError("bit vector length mismatch: " + std::to_string(a.size_) + " vs " +
                        std::to_string(b.size_));
  std::size_t d = 0;
  for (std::size_t w = 0; w < a.words_.size(); ++w)
    d += static_cast<std::size_t>(std::popcount(a.words_[w] ^ b.words_[w]));
  return d;
}

namespace kernels {

namespace {

void check_lengths(std::span<const BitVector> a, std::span<const BitVector> b) {
  if (a.empty() || b.empty()) return;
  const auto n = a.front().size();
  for (const auto& v : a)
    if (v.size() != n) throw ContractError("bit vector length mismatch");
  for (const auto& v : b)
    if (v.size() != n) throw ContractError("bit vector length mismatch");
}

}  // namespace

namespace serial {

Eigen::MatrixXd distance_matrix(std::span<const BitVector> vectors) {
  check_lengths(vectors, vectors);
  const auto n = static_cast<Eigen::Index>(vectors.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double h = static_cast<double>(hamming(vectors[i], vectors[j]));
      d(i, j) = h;
      d(j, i) = h;
    }
  }
  return d;
}

Eigen::MatrixXd cross_distances(std::span<const BitVector> rows, std::span<const BitVector> cols) {
  check_lengths(rows, cols);
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto n = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd d(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = static_cast<double>(hamming(rows[i], cols[j]));
  return d;
}

}  // namespace serial

namespace omp {

Eigen::MatrixXd distance_matrix(std::span<const BitVector> vectors) {
  check_lengths(vectors, vectors);
  const auto n = static_cast<Eigen::Index>(vectors.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  // Row i touches only (i, j) and (j, i) for j < i: no two iterations share a cell.
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double h = static_cast<double>(hamming(vectors[i], vectors[j]));
      d(i, j) = h;
      d(j, i) = h;
    }
  }
  return d;
}

Eigen::MatrixXd cross_distances(std::span<const BitVector> rows, std::span<const BitVector> cols) {
  check_lengths(rows, cols);
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto n = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd d(m, n);
#pragma omp parallel for collapse(2) schedule(static)
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = static_cast<double>(hamming(rows[i], cols[j]));
  return d;
}

}  // namespace omp

Eigen::MatrixXd rbf_matrix(const Eigen::MatrixXd& squared_distances, double length_scale) {
  return (-squared_distances.array() / (2.0 * length_scale)).exp().matrix();
}

}  // namespace kernels
}  // namespace promptbo
