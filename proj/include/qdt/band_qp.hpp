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

// Convex quadratic programs of the form solved for every band of the
// reconstruction:
//
//   minimize   sum_c x_c^T H x_c - 2 g_c^T x_c + constant
//   subject to each row x[j, :] lying in a simple set C_j,
//
// where the columns c are detector outcomes (or their real and imaginary
// parts) and C_j is either {lo <= x <= hi, sum = s} or, for complex bands,
// {|x_n| <= r_n, sum_n x_n = 0}. The Hessian is shared by all columns, so
// one factorization serves every outcome.

#include <cstddef>
#include <limits>

#include <Eigen/Dense>

namespace qdt::recon {

struct BandProblem {
  enum class Kind { kBox, kDisk };

  Kind kind = Kind::kBox;
  Eigen::MatrixXd hessian;  ///< H, m x m, symmetric positive semidefinite
  Eigen::MatrixXd linear;   ///< g, m x columns
  double constant = 0.0;

  // kBox: per-entry bounds (m x columns) and per-row sums (m).
  Eigen::MatrixXd lower;
  Eigen::MatrixXd upper;
  Eigen::VectorXd row_sum;

  // kDisk: radius per entry (m x N); linear has 2N columns [Re | Im] and
  // every row must sum to zero.
  Eigen::MatrixXd radius;

  Eigen::Index rows() const { return hessian.rows(); }
  Eigen::Index columns() const { return linear.cols(); }
};

struct QPSettings {
  /// Stop once the projected-gradient (KKT) residual is below this.
  double tolerance = 1e-9;
  std::size_t max_iterations = 40000;
  /// Finish with an active-set equality solve when it verifies.
  bool polish = true;
};

struct QPResult {
  Eigen::MatrixXd x;
  double objective = 0.0;
  double kkt_residual = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool polished = false;
};

double objective(const BandProblem& problem, const Eigen::MatrixXd& x);

/// Euclidean projection of every row onto its feasible set.
Eigen::MatrixXd project_rows(const BandProblem& problem, const Eigen::MatrixXd& x);

/// || x - P_C(x - grad f(x)) ||_inf; zero exactly at the optimum.
double kkt_residual(const BandProblem& problem, const Eigen::MatrixXd& x);

/// ADMM with adaptive penalty, followed by optional polishing. The result
/// is always feasible (it is the output of a projection). Throws
/// SolverError when the residual stays above tolerance.
QPResult solve_band_qp(const BandProblem& problem, const QPSettings& settings,
                       const Eigen::MatrixXd* warm_start = nullptr);

/// Projection of v onto {lo <= x <= hi, sum x = s} (exact, by breakpoints).
Eigen::VectorXd project_box_sum(const Eigen::VectorXd& v, const Eigen::VectorXd& lo,
                                const Eigen::VectorXd& hi, double s);

/// Projection of complex v (as [Re | Im]) onto {|x_n| <= r_n, sum x_n = 0}.
Eigen::VectorXd project_disk_sum(const Eigen::VectorXd& v, const Eigen::VectorXd& r);

}  // namespace qdt::recon
