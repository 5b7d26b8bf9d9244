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

#include "qdt/banded_operator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qdt/errors.hpp"

namespace qdt {

BandedOperator::BandedOperator(std::size_t dim, std::size_t bands)
    : dim_(dim), bands_(bands) {
  if (dim == 0) throw InputError("BandedOperator: dimension must be positive");
  if (bands >= dim)
    throw InputError("BandedOperator: bands " + std::to_string(bands) +
                     " must be below dimension " + std::to_string(dim));
  diags_.resize(bands + 1);
  for (std::size_t l = 0; l <= bands; ++l) diags_[l].assign(dim - l, 0.0);
}

BandedOperator BandedOperator::identity(std::size_t dim, std::size_t bands) {
  BandedOperator op(dim, bands);
  std::fill(op.diags_[0].begin(), op.diags_[0].end(), cdouble(1.0));
  return op;
}

BandedOperator BandedOperator::fock_projector(std::size_t n, std::size_t dim,
                                              std::size_t bands) {
  if (n >= dim) throw InputError("fock_projector: index outside truncation");
  BandedOperator op(dim, bands);
  op.diags_[0][n] = 1.0;
  return op;
}

BandedOperator BandedOperator::diagonal(std::span<const double> values,
                                        std::size_t bands) {
  BandedOperator op(values.size(), bands);
  std::copy(values.begin(), values.end(), op.diags_[0].begin());
  return op;
}

BandedOperator BandedOperator::from_dense(const Eigen::MatrixXcd& dense,
                                          std::size_t bands) {
  if (dense.rows() != dense.cols())
    throw InputError("from_dense: matrix must be square");
  const auto d = static_cast<std::size_t>(dense.rows());
  BandedOperator op(d, std::min(bands, d - 1));
  for (std::size_t l = 0; l <= op.bands_; ++l)
    for (std::size_t j = 0; j + l < d; ++j)
      op.diags_[l][j] = dense(static_cast<Eigen::Index>(j),
                              static_cast<Eigen::Index>(j + l));
  // The main diagonal of a Hermitian matrix is real.
  for (auto& v : op.diags_[0]) v = v.real();
  return op;
}

std::span<const cdouble> BandedOperator::diag(std::size_t l) const {
  if (l > bands_) throw InputError("diag: band index out of range");
  return diags_[l];
}

std::span<cdouble> BandedOperator::diag(std::size_t l) {
  if (l > bands_) throw InputError("diag: band index out of range");
  return diags_[l];
}

cdouble BandedOperator::at(std::size_t j, std::size_t k) const {
  if (j >= dim_ || k >= dim_) throw InputError("at: index outside truncation");
  if (k >= j) {
    const std::size_t l = k - j;
    return l <= bands_ ? diags_[l][j] : cdouble(0.0);
  }
  const std::size_t l = j - k;
  return l <= bands_ ? std::conj(diags_[l][k]) : cdouble(0.0);
}

void BandedOperator::set(std::size_t j, std::size_t l, cdouble value) {
  if (l > bands_ || j + l >= dim_)
    throw InputError("set: entry outside stored band");
  diags_[l][j] = l == 0 ? cdouble(value.real()) : value;
}

std::vector<double> BandedOperator::diagonal_values() const {
  std::vector<double> out(dim_);
  for (std::size_t j = 0; j < dim_; ++j) out[j] = diags_[0][j].real();
  return out;
}

bool BandedOperator::is_real(double tol) const {
  for (std::size_t l = 1; l <= bands_; ++l)
    for (const auto& v : diags_[l])
      if (std::abs(v.imag()) > tol) return false;
  return true;
}

BandedOperator BandedOperator::with_bands(std::size_t bands) const {
  BandedOperator op(dim_, std::min(bands, dim_ - 1));
  for (std::size_t l = 0; l <= std::min(op.bands_, bands_); ++l)
    op.diags_[l] = diags_[l];
  return op;
}

Eigen::MatrixXcd BandedOperator::to_dense() const {
  if (dim_ > kMaxDenseDim)
    throw InputError("to_dense: dimension " + std::to_string(dim_) +
                     " exceeds dense limit " + std::to_string(kMaxDenseDim));
  const auto d = static_cast<Eigen::Index>(dim_);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (std::size_t l = 0; l <= bands_; ++l) {
    for (std::size_t j = 0; j + l < dim_; ++j) {
      const auto r = static_cast<Eigen::Index>(j);
      const auto c = static_cast<Eigen::Index>(j + l);
      m(r, c) = diags_[l][j];
      m(c, r) = std::conj(diags_[l][j]);
    }
  }
  return m;
}

double BandedOperator::trace() const {
  double t = 0.0;
  for (const auto& v : diags_[0]) t += v.real();
  return t;
}

double BandedOperator::hs_norm() const { return std::sqrt(hs_inner(*this, *this)); }

double BandedOperator::max_abs() const {
  double m = 0.0;
  for (const auto& band : diags_)
    for (const auto& v : band) m = std::max(m, std::abs(v));
  return m;
}

static void require_same_dim(const BandedOperator& a, const BandedOperator& b) {
  if (a.dim() != b.dim())
    throw InputError("operator dimensions differ: " + std::to_string(a.dim()) +
                     " vs " + std::to_string(b.dim()));
}

BandedOperator& BandedOperator::operator+=(const BandedOperator& other) {
  require_same_dim(*this, other);
  if (other.bands_ > bands_) *this = with_bands(other.bands_);
  for (std::size_t l = 0; l <= other.bands_; ++l)
    for (std::size_t j = 0; j + l < dim_; ++j) diags_[l][j] += other.diags_[l][j];
  return *this;
}

BandedOperator& BandedOperator::operator-=(const BandedOperator& other) {
  require_same_dim(*this, other);
  if (other.bands_ > bands_) *this = with_bands(other.bands_);
  for (std::size_t l = 0; l <= other.bands_; ++l)
    for (std::size_t j = 0; j + l < dim_; ++j) diags_[l][j] -= other.diags_[l][j];
  return *this;
}

BandedOperator& BandedOperator::operator*=(double factor) {
  for (auto& band : diags_)
    for (auto& v : band) v *= factor;
  return *this;
}

BandedOperator operator+(BandedOperator a, const BandedOperator& b) { return a += b; }
BandedOperator operator-(BandedOperator a, const BandedOperator& b) { return a -= b; }
BandedOperator operator*(double factor, BandedOperator a) { return a *= factor; }

double hs_inner(const BandedOperator& a, const BandedOperator& b) {
  require_same_dim(a, b);
  const std::size_t common = std::min(a.bands(), b.bands());
  double sum = 0.0;
  for (std::size_t l = 0; l <= common; ++l) {
    const auto da = a.diag(l);
    const auto db = b.diag(l);
    double band = 0.0;
    for (std::size_t j = 0; j < da.size(); ++j)
      band += (da[j] * std::conj(db[j])).real();
    // Off-diagonal bands appear twice (upper and lower triangle).
    sum += l == 0 ? band : 2.0 * band;
  }
  return sum;
}

BandedOperator POVMSet::total() const {
  if (elements.empty()) throw InputError("POVMSet: no elements");
  BandedOperator sum(dim(), bands());
  for (const auto& e : elements) sum += e;
  return sum;
}

}  // namespace qdt
