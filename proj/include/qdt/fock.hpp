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

// Fock-space numerics. Everything that involves factorials or powers of
// amplitudes is evaluated in log space so that truncations of several
// hundred photons stay well inside the double range.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qdt/banded_operator.hpp"

namespace qdt::fock {

/// ln(n!) with relative error below 1e-12 for n <= 1e6.
double log_factorial(std::size_t n);

/// ln of the binomial pmf C(n, k) p^k (1-p)^(n-k); -inf for zero mass.
double log_binomial_pmf(std::size_t k, std::size_t n, double p);
/// ln of the Poisson pmf e^-mean mean^k / k!; -inf for zero mass.
double log_poisson_pmf(std::size_t k, double mean);

enum class Evaluation { kLogSpace, kNaive };

/// <j|alpha> = e^{-|alpha|^2/2} alpha^j / sqrt(j!).
/// The naive path multiplies the factors directly and throws OverflowError
/// once an intermediate leaves the double range (j > 170 at the latest).
cdouble coherent_fock_overlap(cdouble alpha, std::size_t j,
                              Evaluation mode = Evaluation::kLogSpace);

/// <j|alpha> for j = 0..dim-1.
std::vector<cdouble> coherent_amplitudes(cdouble alpha, std::size_t dim);

/// Normalized associated Laguerre functions
///   f_n(x) = sqrt(n!/(n+k)!) x^{k/2} e^{-x/2} L_n^{(k)}(x),  n = 0..count-1,
/// which are bounded by 1 in magnitude. Computed by the three-term
/// recurrence on f_n directly, with the n = 0 seed taken in log space.
std::vector<double> laguerre_functions(std::size_t k, double x, std::size_t count);

/// <m|D(delta)|n> for the displacement operator D(delta) = exp(delta a^+ - delta^* a).
cdouble displacement_element(cdouble delta, std::size_t m, std::size_t n);

/// Block <m|D(delta)|n>, m < rows, n < cols, filled diagonal by diagonal
/// with one Laguerre recurrence per diagonal.
Eigen::MatrixXcd displacement_matrix(cdouble delta, std::size_t rows,
                                     std::size_t cols);

/// Column count needed so that the first `rows` rows of D(delta) keep unit
/// norm to ~1e-15 when the matrix is cut at that many columns.
std::size_t displacement_padding(cdouble delta, std::size_t rows);

/// D(delta) diag(q) D(delta)^+ restricted to the first `dim` Fock states,
/// keeping bands 0..bands. `q` is the diagonal in the undisplaced frame and
/// must extend at least displacement_padding(delta, dim) entries; the last
/// entry is repeated if it is shorter.
BandedOperator displaced_diagonal(std::span<const double> q, cdouble delta,
                                  std::size_t dim, std::size_t bands);

/// Husimi function <alpha|A|alpha> / pi.
double q_function(const BandedOperator& op, cdouble alpha);

struct AxisRange {
  double min = -3.0;
  double max = 3.0;
  double step = 0.05;

  /// Number of samples min, min+step, ..., covering max.
  std::size_t count() const;
  double value(std::size_t i) const { return min + step * static_cast<double>(i); }
};

struct GridSpec {
  AxisRange x;
  AxisRange p;
};

/// Phase-space samples W(x + i p). Row index runs over p, column over x.
struct WignerGrid {
  AxisRange x;
  AxisRange p;
  Eigen::MatrixXd values;
};

/// Most grid points accepted by wigner().
inline constexpr std::size_t kMaxGridPoints = 16'000'000;

/// How the operator continues past the truncation. POVM elements of
/// saturating detectors tend to the identity at large photon number, and the
/// truncated parity sum does not converge for them; kComplement evaluates
/// 1/pi - W(I_d - A) instead.
enum class TailMode { kTruncate, kComplement, kAuto };

/// Wigner function with W(beta) = (2/pi) Tr[A D(beta) P D(beta)^+], P the
/// parity. With beta = x + i p the vacuum peaks at 2/pi and a coherent state
/// has quadrature standard deviation 1/2.
double wigner_point(const BandedOperator& op, cdouble beta,
                    TailMode tail = TailMode::kAuto);

WignerGrid wigner(const BandedOperator& op, const GridSpec& spec,
                  TailMode tail = TailMode::kAuto);

/// Resolves kAuto for `op`: complement when the last diagonal entry exceeds 1/2.
TailMode resolve_tail(const BandedOperator& op, TailMode tail);

}  // namespace qdt::fock
