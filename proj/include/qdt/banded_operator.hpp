/**
 * Copyright 2026 The qdt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qdt {

using cdouble = std::complex<double>;

/// Hermitian operator on the truncated Fock space {|0>, ..., |d-1>}, stored
/// as its leading diagonals l = 0..L. Entry j of diagonal l holds the matrix
/// element <j|A|j+l>; the lower diagonals are implied by Hermiticity.
class BandedOperator {
 public:
  /// Largest dimension accepted by to_dense().
  static constexpr std::size_t kMaxDenseDim = 8192;

  BandedOperator() = default;
  /// Zero operator with `bands` stored off-diagonals.
  BandedOperator(std::size_t dim, std::size_t bands);

  static BandedOperator identity(std::size_t dim, std::size_t bands = 0);
  /// |n><n| truncated to `dim`.
  static BandedOperator fock_projector(std::size_t n, std::size_t dim,
                                       std::size_t bands = 0);
  static BandedOperator diagonal(std::span<const double> values,
                                 std::size_t bands = 0);
  /// Keeps the upper triangle diagonals 0..bands of `dense`. The matrix is
  /// assumed Hermitian; the lower triangle is ignored.
  static BandedOperator from_dense(const Eigen::MatrixXcd& dense,
                                   std::size_t bands);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t bands() const noexcept { return bands_; }

  std::span<const cdouble> diag(std::size_t l) const;
  std::span<cdouble> diag(std::size_t l);

  /// <j|A|k> for any j, k < dim (zero outside the stored band).
  cdouble at(std::size_t j, std::size_t k) const;
  /// Sets <j|A|j+l> (and implicitly its conjugate partner).
  void set(std::size_t j, std::size_t l, cdouble value);

  /// Real part of the main diagonal.
  std::vector<double> diagonal_values() const;

  /// True when every stored off-diagonal entry has |Im| <= tol.
  bool is_real(double tol = 0.0) const;

  /// Copy with a different stored band count; extra bands are zero,
  /// dropped bands are discarded.
  BandedOperator with_bands(std::size_t bands) const;

  /// Dense Hermitian expansion. Throws InputError above kMaxDenseDim.
  Eigen::MatrixXcd to_dense() const;

  double trace() const;
  /// Hilbert-Schmidt norm sqrt(Tr A^2).
  double hs_norm() const;
  /// max |A_jk| over all entries.
  double max_abs() const;

  BandedOperator& operator+=(const BandedOperator& other);
  BandedOperator& operator-=(const BandedOperator& other);
  BandedOperator& operator*=(double factor);

 private:
  std::size_t dim_ = 0;
  std::size_t bands_ = 0;
  std::vector<std::vector<cdouble>> diags_;
};

BandedOperator operator+(BandedOperator a, const BandedOperator& b);
BandedOperator operator-(BandedOperator a, const BandedOperator& b);
BandedOperator operator*(double factor, BandedOperator a);

/// Tr(A B) for Hermitian A, B; real by Hermiticity.
double hs_inner(const BandedOperator& a, const BandedOperator& b);

/// Ordered set of POVM elements; element n is the n-click outcome.
struct POVMSet {
  std::vector<BandedOperator> elements;

  std::size_t outcomes() const noexcept { return elements.size(); }
  std::size_t dim() const noexcept {
    return elements.empty() ? 0 : elements.front().dim();
  }
  std::size_t bands() const noexcept {
    return elements.empty() ? 0 : elements.front().bands();
  }
  /// Sum of all elements (should be the identity).
  BandedOperator total() const;
};

}  // namespace qdt
