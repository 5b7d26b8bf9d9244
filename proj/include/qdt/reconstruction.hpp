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

// Recursive banded reconstruction of a POVM from coherent-probe statistics.
//
// Averaging the statistics of each probe amplitude over its phase grid with
// weight e^{-i l theta} isolates the l-th leading diagonal of every POVM
// element:
//
//   P^(l)[i, n] = sum_j F^(l)[i, j] Pi_n^{j, j+l},
//   F^(l)[i, j] = e^{-|a_i|^2} |a_i|^{2j+l} / sqrt(j! (j+l)!).
//
// Band 0 is fitted first under positivity and completeness; each band
// l >= 1 is then fitted under the 2x2 principal-minor bounds implied by the
// diagonals and the zero-sum condition. A final eigenvalue repair restores
// full positivity of the assembled operators.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qdt/band_qp.hpp"
#include "qdt/banded_operator.hpp"
#include "qdt/probe.hpp"

namespace qdt::recon {

struct BandData {
  std::size_t l = 0;
  /// Distinct probe amplitudes, in order of first appearance.
  std::vector<double> amplitudes;
  /// One row per amplitude, one column per outcome.
  Eigen::MatrixXcd rows;
};

struct DesignMatrix {
  std::size_t l = 0;
  Eigen::MatrixXd entries;  ///< amplitudes x (d - l)
  /// Ratio of extreme singular values (infinite when rank deficient).
  double condition_number = 0.0;
};

struct ReconstructionOptions {
  std::size_t dim = 40;
  std::size_t bands = 6;
  double gamma = 1e-2;
  double tolerance = 1e-9;
  std::size_t max_iterations = 40000;
  /// Constrain off-diagonal bands to be real (LO phase fixed at 0).
  bool real_bands = true;
  /// Eigenvalues above -psd_tolerance are left alone by the repair.
  double psd_tolerance = 1e-10;
  bool polish = true;
};

BandData phase_fourier(const probe::OutcomeStatistics& stats, std::size_t l);

DesignMatrix design_matrix(std::span<const double> amplitudes, std::size_t l, std::size_t dim);

struct BandSolution {
  /// Band 0: d x N real diagonals. Band l: (d - l) x N entries.
  Eigen::MatrixXcd values;
  double objective = 0.0;
  double misfit = 0.0;  ///< ||P - F X||_F
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  std::size_t unknowns = 0;
  bool polished = false;
};

/// min ||P - F X||^2 + gamma sum (X[j] - X[j+1])^2, X >= 0, rows sum to 1.
BandSolution solve_band_l0(const BandData& data, const DesignMatrix& design,
                           const ReconstructionOptions& opts);

/// Band l >= 1 given the diagonals: |Y[j, n]| <= sqrt(X[j, n] X[j+l, n]),
/// sum_n Y[j, n] = 0, and the same smoothing penalty along the band.
BandSolution solve_band_l(std::size_t l, const BandData& data, const DesignMatrix& design,
                          const Eigen::MatrixXd& diagonals, const ReconstructionOptions& opts,
                          const Eigen::MatrixXcd* warm_start = nullptr);

struct RepairReport {
  double clipped_mass = 0.0;
  double min_eigenvalue_before = 0.0;
  double min_eigenvalue_after = 0.0;
  std::size_t rounds = 0;
};

/// Clips eigenvalues below -tol of a single operator and re-bands it.
BandedOperator psd_repair(const BandedOperator& op, double tol, RepairReport* report = nullptr);

/// Alternates eigenvalue clipping of every element with the orthogonal
/// projection onto sum_n Pi_n = I until both hold.
RepairReport psd_repair(POVMSet& povm, double tol);

struct BandDiagnostics {
  std::size_t l = 0;
  double misfit = 0.0;
  double kkt_residual = 0.0;
  double condition_number = 0.0;
  std::size_t iterations = 0;
  std::size_t unknowns = 0;
  bool polished = false;
};

struct Diagnostics {
  std::vector<BandDiagnostics> bands;
  double gamma = 0.0;
  double clipped_mass = 0.0;
  double completeness_residual = 0.0;
  double min_eigenvalue = 0.0;
  /// RMS difference between Born-rule predictions and the input frequencies.
  double born_rms = 0.0;
  std::size_t repair_rounds = 0;
};

struct Reconstruction {
  POVMSet povm;
  Diagnostics diagnostics;
};

/// Full pipeline l = 0..bands. Throws InputError for inconsistent inputs
/// (including bands above the aliasing limit n_phases/2 - 1) and
/// SolverError when a band does not converge.
Reconstruction reconstruct(const probe::OutcomeStatistics& stats,
                           const ReconstructionOptions& opts);

/// Largest band index resolvable with `n_phases` phase settings.
std::size_t max_band_for_phases(std::size_t n_phases);

}  // namespace qdt::recon
