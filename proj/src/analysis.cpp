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

#include "qdt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "qdt/errors.hpp"

namespace qdt::analysis {

namespace {

// Hermitian eigendecomposition with eigenvalues in [-tol, 0) set to zero.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> clipped_eigen(const BandedOperator& op,
                                                              double tol, Eigen::VectorXd& ev,
                                                              const char* name) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(op.to_dense());
  ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -tol * scale)
    throw InputError(std::string("fidelity: operand ") + name +
                     " is not positive semidefinite (eigenvalue " +
                     std::to_string(ev.minCoeff()) + ")");
  ev = ev.cwiseMax(0.0);
  return es;
}

}  // namespace

double fidelity(const BandedOperator& a, const BandedOperator& b, double tol) {
  if (a.dim() != b.dim()) throw InputError("fidelity: dimension mismatch");
  Eigen::VectorXd ea;
  Eigen::VectorXd eb;
  const auto sa = clipped_eigen(a, tol, ea, "A");
  clipped_eigen(b, tol, eb, "B");
  const double ta = ea.sum();
  const double tb = eb.sum();
  if (!(ta > 0.0) || !(tb > 0.0)) throw InputError("fidelity: operand with zero trace");

  const Eigen::MatrixXcd root_a =
      sa.eigenvectors() * ea.cwiseSqrt().asDiagonal() * sa.eigenvectors().adjoint();
  const Eigen::MatrixXcd bd = b.to_dense();
  Eigen::MatrixXcd m = root_a * bd * root_a;
  m = 0.5 * (m + m.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> em(m, Eigen::EigenvaluesOnly);
  const double root_trace = em.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(root_trace * root_trace / (ta * tb), 0.0, 1.0);
}

std::size_t protected_dimension(std::size_t dim) {
  const auto margin = static_cast<std::size_t>(std::ceil(3.0 * std::sqrt(static_cast<double>(dim))));
  return dim > margin ? dim - margin : std::min<std::size_t>(dim, 1);
}

double completeness_residual(const POVMSet& povm) {
  if (povm.elements.empty()) throw InputError("completeness_residual: empty POVM");
  const std::size_t d = povm.dim();
  for (const auto& e : povm.elements)
    if (e.dim() != d) throw InputError("completeness_residual: inconsistent dimensions");
  std::size_t bands = 0;
  for (const auto& e : povm.elements) bands = std::max(bands, e.bands());
  BandedOperator total(d, bands);
  for (const auto& e : povm.elements) total += e.with_bands(bands);
  const std::size_t keep = protected_dimension(d);
  double worst = 0.0;
  for (std::size_t l = 0; l <= bands; ++l) {
    const auto diag = total.diag(l);
    for (std::size_t j = 0; j + l < keep; ++j) {
      const cdouble expected = l == 0 ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(diag[j] - expected));
    }
  }
  return worst;
}

namespace {

// Offset of the vertex of the parabola through (-1, lo), (0, mid), (1, hi),
// limited to half a step.
double vertex_offset(double lo, double mid, double hi) {
  const double curvature = lo - 2.0 * mid + hi;
  if (!(curvature > 0.0)) return 0.0;
  return std::clamp(0.5 * (lo - hi) / curvature, -0.5, 0.5);
}

}  // namespace

Dip wigner_dip(const fock::WignerGrid& grid) {
  const auto& w = grid.values;
  if (w.size() == 0) throw InputError("wigner_dip: empty grid");
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  const double value = w.minCoeff(&row, &col);
  Dip dip;
  dip.value = value;
  dip.on_boundary = row == 0 || col == 0 || row == w.rows() - 1 || col == w.cols() - 1;
  double x = grid.x.value(static_cast<std::size_t>(col));
  double p = grid.p.value(static_cast<std::size_t>(row));
  if (col > 0 && col + 1 < w.cols())
    x += grid.x.step * vertex_offset(w(row, col - 1), value, w(row, col + 1));
  if (row > 0 && row + 1 < w.rows())
    p += grid.p.step * vertex_offset(w(row - 1, col), value, w(row + 1, col));
  dip.location = {x, p};
  dip.displacement = std::abs(dip.location);
  dip.error_bar = std::max(grid.x.step, grid.p.step);
  return dip;
}

double wigner_min(const fock::WignerGrid& grid) {
  if (grid.values.size() == 0) throw InputError("wigner_min: empty grid");
  return grid.values.minCoeff();
}

BandedOperator displaced_lossy_fock(cdouble delta, double loss, std::size_t n, std::size_t dim) {
  if (!(loss >= 0.0 && loss < 1.0)) throw InputError("loss must lie in [0, 1)");
  if (dim == 0) throw InputError("dimension must be positive");
  const std::size_t width = fock::displacement_padding(delta, dim);
  std::vector<double> q(width, 0.0);
  for (std::size_t m = n; m < width; ++m)
    q[m] = std::exp(fock::log_binomial_pmf(n, m, 1.0 - loss));
  return fock::displaced_diagonal(q, delta, dim, dim - 1);
}

double displaced_lossy_fock_overlap(const BandedOperator& op, cdouble delta, double loss,
                                    std::size_t n) {
  const BandedOperator r = displaced_lossy_fock(delta, loss, n, op.dim());
  const double norm = op.hs_norm() * r.hs_norm();
  if (!(norm > 0.0)) throw InputError("overlap: operand with zero norm");
  return std::clamp(hs_inner(op, r) / norm, -1.0, 1.0);
}

double povm_distance(const POVMSet& a, const POVMSet& b) {
  if (a.outcomes() != b.outcomes()) throw InputError("povm_distance: outcome count mismatch");
  if (a.dim() != b.dim()) throw InputError("povm_distance: dimension mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t n = 0; n < a.outcomes(); ++n) {
    const std::size_t bands = std::max(a.elements[n].bands(), b.elements[n].bands());
    num += (a.elements[n].with_bands(bands) - b.elements[n].with_bands(bands)).hs_norm();
    den += a.elements[n].hs_norm();
  }
  if (!(den > 0.0)) throw InputError("povm_distance: reference POVM is zero");
  return num / den;
}

}  // namespace qdt::analysis
