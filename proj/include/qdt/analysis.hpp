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
// Figures of merit for comparing and characterizing POVMs.
#include <cstddef>
#include <optional>
#include <vector>

#include "qdt/banded_operator.hpp"
#include "qdt/fock.hpp"

namespace qdt::analysis {

/// Eigenvalues above -kPsdTolerance are treated as roundoff and clipped.
inline constexpr double kPsdTolerance = 1e-8;

/// Trace-normalized fidelity (Tr sqrt(sqrt(A) B sqrt(A)))^2 / (Tr A Tr B).
/// Throws InputError for a zero-trace operand or an eigenvalue below -tol.
double fidelity(const BandedOperator& a, const BandedOperator& b, double tol = kPsdTolerance);

/// Rows and columns of a d-dimensional truncation that are compared by
/// completeness_residual: d - ceil(3 sqrt(d)), at least 1.
std::size_t protected_dimension(std::size_t dim);

/// max |sum_n Pi_n - I| over the protected block.
double completeness_residual(const POVMSet& povm);

struct Dip {
  /// |beta| of the (refined) minimum.
  double displacement = 0.0;
  cdouble location;
  /// Grid step; the refinement is not trusted below it.
  double error_bar = 0.0;
  double value = 0.0;
  /// True when the grid minimum sits on the grid edge.
  bool on_boundary = false;
};

/// Location of the minimum of a sampled Wigner function, refined by a
/// quadratic through the neighbouring samples along each axis.
Dip wigner_dip(const fock::WignerGrid& grid);

double wigner_min(const fock::WignerGrid& grid);

/// Normalized Hilbert-Schmidt overlap Tr(A R) / sqrt(Tr A^2 Tr R^2) with
/// R = D(delta) E_n D(delta)^+, where E_n is the operator for detecting n
/// photons behind a channel of the given loss:
///   <m|E_n|m> = C(m, n) (1 - loss)^n loss^(m - n).
double displaced_lossy_fock_overlap(const BandedOperator& op, cdouble delta, double loss,
                                    std::size_t n);

/// The reference operator used by displaced_lossy_fock_overlap, with all
/// off-diagonal bands kept.
BandedOperator displaced_lossy_fock(cdouble delta, double loss, std::size_t n, std::size_t dim);

/// sum_n ||A_n - B_n||_HS / sum_n ||A_n||_HS.
double povm_distance(const POVMSet& a, const POVMSet& b);

struct Report {
  std::vector<double> fidelities;
  double completeness_residual = 0.0;
  std::optional<Dip> dip;
  std::optional<double> wigner_min;
  std::optional<double> distance;
  std::optional<double> overlap;
};

}  // namespace qdt::analysis
