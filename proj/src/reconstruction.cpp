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

#include "qdt/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "qdt/errors.hpp"
#include "qdt/fock.hpp"

namespace qdt::recon {

namespace {

struct AmplitudeGroup {
  double amplitude = 0.0;
  std::vector<double> phases;
  std::vector<std::size_t> rows;
};

std::vector<AmplitudeGroup> group_by_amplitude(const probe::OutcomeStatistics& stats) {
  std::vector<AmplitudeGroup> groups;
  std::map<double, std::size_t> index;
  for (std::size_t i = 0; i < stats.settings.size(); ++i) {
    const double a = stats.settings[i].amplitude;
    auto [it, inserted] = index.try_emplace(a, groups.size());
    if (inserted) groups.push_back({a, {}, {}});
    auto& g = groups[it->second];
    g.phases.push_back(stats.settings[i].phase);
    g.rows.push_back(i);
  }
  // Every amplitude must use the same uniform phase grid.
  const std::size_t k = groups.front().phases.size();
  std::vector<double> reference = groups.front().phases;
  std::sort(reference.begin(), reference.end());
  const double spacing = 2.0 * std::numbers::pi / static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i)
    if (std::abs(reference[i] - reference[0] - spacing * static_cast<double>(i)) > 1e-9)
      throw InputError("phase grid is not uniform over [0, 2 pi)");
  for (const auto& g : groups) {
    std::vector<double> sorted = g.phases;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.size() != k)
      throw InputError("inhomogeneous phase grids: amplitude " + std::to_string(g.amplitude) +
                       " has " + std::to_string(sorted.size()) + " phases, expected " +
                       std::to_string(k));
    for (std::size_t i = 0; i < k; ++i)
      if (std::abs(sorted[i] - reference[i]) > 1e-9)
        throw InputError("inhomogeneous phase grids across amplitudes");
  }
  return groups;
}

Eigen::MatrixXd smoothing_gram(Eigen::Index n) {
  // D^T D for the first-difference operator D of size (n-1) x n.
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    g(j, j) += 1.0;
    g(j + 1, j + 1) += 1.0;
    g(j, j + 1) -= 1.0;
    g(j + 1, j) -= 1.0;
  }
  return g;
}

}  // namespace

std::size_t max_band_for_phases(std::size_t n_phases) {
  return n_phases <= 3 ? 0 : n_phases / 2 - 1;
}

BandData phase_fourier(const probe::OutcomeStatistics& stats, std::size_t l) {
  stats.validate();
  const auto groups = group_by_amplitude(stats);
  const std::size_t k = groups.front().phases.size();
  if (k < 2 * l + 1)
    throw InputError("aliasing guard: band " + std::to_string(l) + " needs at least " +
                     std::to_string(2 * l + 1) + " phases, have " + std::to_string(k));
  const auto freq = stats.frequencies();
  BandData out;
  out.l = l;
  out.rows = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(groups.size()),
                                    static_cast<Eigen::Index>(stats.outcomes));
  for (std::size_t a = 0; a < groups.size(); ++a) {
    const auto& g = groups[a];
    out.amplitudes.push_back(g.amplitude);
    for (std::size_t s = 0; s < g.rows.size(); ++s) {
      const cdouble w = std::polar(1.0 / static_cast<double>(k),
                                   -static_cast<double>(l) * g.phases[s]);
      for (std::size_t n = 0; n < stats.outcomes; ++n)
        out.rows(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(n)) +=
            w * freq[g.rows[s]][n];
    }
  }
  if (l == 0) out.rows = out.rows.real().cast<cdouble>();
  return out;
}

DesignMatrix design_matrix(std::span<const double> amplitudes, std::size_t l, std::size_t dim) {
  if (dim <= l) throw InputError("design_matrix: band index must be below the dimension");
  DesignMatrix dm;
  dm.l = l;
  const auto rows = static_cast<Eigen::Index>(amplitudes.size());
  const auto cols = static_cast<Eigen::Index>(dim - l);
  dm.entries = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double a = amplitudes[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const double power = static_cast<double>(2 * ju + l);
      if (a == 0.0) {
        dm.entries(i, j) = power == 0.0 ? 1.0 : 0.0;
        continue;
      }
      const double log_v = -a * a + power * std::log(a) -
                           0.5 * (fock::log_factorial(ju) + fock::log_factorial(ju + l));
      dm.entries(i, j) = std::exp(log_v);
    }
  }
  if (rows > 0) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(dm.entries);
    const auto& sv = svd.singularValues();
    const double smallest = sv(sv.size() - 1);
    dm.condition_number = smallest > 0.0 ? sv(0) / smallest
                                         : std::numeric_limits<double>::infinity();
    if (rows < cols) dm.condition_number = std::numeric_limits<double>::infinity();
  }
  return dm;
}

namespace {

BandProblem base_problem(const DesignMatrix& design, double gamma) {
  BandProblem p;
  const Eigen::MatrixXd& f = design.entries;
  p.hessian = f.transpose() * f + gamma * smoothing_gram(f.cols());
  return p;
}

void check_band_inputs(const BandData& data, const DesignMatrix& design, std::size_t dim) {
  if (data.l != design.l) throw InputError("band data and design matrix disagree on l");
  if (static_cast<std::size_t>(design.entries.rows()) != data.amplitudes.size())
    throw InputError("design matrix rows do not match the amplitude count");
  if (static_cast<std::size_t>(design.entries.cols()) != dim - data.l)
    throw InputError("design matrix width does not match d - l");
}

}  // namespace

BandSolution solve_band_l0(const BandData& data, const DesignMatrix& design,
                           const ReconstructionOptions& opts) {
  check_band_inputs(data, design, opts.dim);
  if (data.l != 0) throw InputError("solve_band_l0 needs band 0");
  if (!(opts.gamma >= 0.0)) throw InputError("gamma must be >= 0");
  const Eigen::MatrixXd target = data.rows.real();
  const auto d = design.entries.cols();
  const auto n = target.cols();
  BandProblem p = base_problem(design, opts.gamma);
  p.kind = BandProblem::Kind::kBox;
  p.linear = design.entries.transpose() * target;
  p.constant = target.squaredNorm();
  p.lower = Eigen::MatrixXd::Zero(d, n);
  p.upper = Eigen::MatrixXd::Constant(d, n, std::numeric_limits<double>::infinity());
  p.row_sum = Eigen::VectorXd::Ones(d);

  QPSettings qs{opts.tolerance, opts.max_iterations, opts.polish};
  const QPResult r = solve_band_qp(p, qs);
  BandSolution sol;
  sol.values = r.x.cast<cdouble>();
  sol.objective = r.objective;
  sol.misfit = (target - design.entries * r.x).norm();
  sol.kkt_residual = r.kkt_residual;
  sol.iterations = r.iterations;
  sol.unknowns = static_cast<std::size_t>(d * n);
  sol.polished = r.polished;
  return sol;
}

BandSolution solve_band_l(std::size_t l, const BandData& data, const DesignMatrix& design,
                          const Eigen::MatrixXd& diagonals, const ReconstructionOptions& opts,
                          const Eigen::MatrixXcd* warm_start) {
  if (l == 0) throw InputError("solve_band_l needs l >= 1; use solve_band_l0");
  if (data.l != l) throw InputError("band data index does not match l");
  check_band_inputs(data, design, opts.dim);
  const auto d = static_cast<Eigen::Index>(opts.dim);
  const auto n = data.rows.cols();
  if (diagonals.rows() != d || diagonals.cols() != n)
    throw InputError("diagonals shape does not match d x N");
  const auto len = d - static_cast<Eigen::Index>(l);
  // Principal 2x2 minors of rows (j, j+l); clamped diagonals cover roundoff.
  Eigen::MatrixXd bound(len, n);
  for (Eigen::Index j = 0; j < len; ++j)
    for (Eigen::Index c = 0; c < n; ++c)
      bound(j, c) = std::sqrt(std::max(0.0, diagonals(j, c)) *
                              std::max(0.0, diagonals(j + static_cast<Eigen::Index>(l), c)));

  BandProblem p = base_problem(design, opts.gamma);
  const Eigen::MatrixXd ft = design.entries.transpose();
  QPSettings qs{opts.tolerance, opts.max_iterations, opts.polish};
  BandSolution sol;
  sol.unknowns = static_cast<std::size_t>(len * n) * (opts.real_bands ? 1 : 2);
  if (opts.real_bands) {
    const Eigen::MatrixXd target = data.rows.real();
    p.kind = BandProblem::Kind::kBox;
    p.linear = ft * target;
    p.constant = target.squaredNorm();
    p.lower = -bound;
    p.upper = bound;
    p.row_sum = Eigen::VectorXd::Zero(len);
    Eigen::MatrixXd warm;
    if (warm_start) warm = warm_start->real();
    const QPResult r = solve_band_qp(p, qs, warm_start ? &warm : nullptr);
    sol.values = r.x.cast<cdouble>();
    sol.objective = r.objective;
    sol.misfit = (target - design.entries * r.x).norm();
    sol.kkt_residual = r.kkt_residual;
    sol.iterations = r.iterations;
    sol.polished = r.polished;
    return sol;
  }
  Eigen::MatrixXd target(data.rows.rows(), 2 * n);
  target << data.rows.real(), data.rows.imag();
  p.kind = BandProblem::Kind::kDisk;
  p.linear = ft * target;
  p.constant = target.squaredNorm();
  p.radius = bound;
  Eigen::MatrixXd warm;
  if (warm_start) {
    warm.resize(len, 2 * n);
    warm << warm_start->real(), warm_start->imag();
  }
  const QPResult r = solve_band_qp(p, qs, warm_start ? &warm : nullptr);
  sol.values = r.x.leftCols(n).cast<cdouble>() + cdouble(0.0, 1.0) * r.x.rightCols(n).cast<cdouble>();
  sol.objective = r.objective;
  sol.misfit = (target - design.entries * r.x).norm();
  sol.kkt_residual = r.kkt_residual;
  sol.iterations = r.iterations;
  return sol;
}

namespace {

// Eigenvalue clip of one element; returns the clipped negative mass.
double clip_element(BandedOperator& op, double tol, double* min_eig) {
  const std::size_t bands = op.bands();
  if (op.is_real()) {
    const Eigen::MatrixXd dense = op.to_dense().real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    Eigen::VectorXd ev = es.eigenvalues();
    if (min_eig) *min_eig = ev.minCoeff();
    if (ev.minCoeff() >= -tol) return 0.0;
    double clipped = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev(i) < 0.0) {
        clipped -= ev(i);
        ev(i) = 0.0;
      }
    const Eigen::MatrixXd fixed = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    op = BandedOperator::from_dense(fixed.cast<cdouble>(), bands);
    return clipped;
  }
  const Eigen::MatrixXcd dense = op.to_dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense);
  Eigen::VectorXd ev = es.eigenvalues();
  if (min_eig) *min_eig = ev.minCoeff();
  if (ev.minCoeff() >= -tol) return 0.0;
  double clipped = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) < 0.0) {
      clipped -= ev(i);
      ev(i) = 0.0;
    }
  const Eigen::MatrixXcd fixed = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  op = BandedOperator::from_dense(fixed, bands);
  return clipped;
}

double min_eigenvalue(const BandedOperator& op) {
  if (op.is_real()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.to_dense().real(),
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(op.to_dense(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

BandedOperator psd_repair(const BandedOperator& op, double tol, RepairReport* report) {
  BandedOperator out = op;
  double before = 0.0;
  const double clipped = clip_element(out, tol, &before);
  if (report) {
    report->clipped_mass = clipped;
    report->min_eigenvalue_before = before;
    report->min_eigenvalue_after = clipped > 0.0 ? min_eigenvalue(out) : before;
    report->rounds = 1;
  }
  return out;
}

RepairReport psd_repair(POVMSet& povm, double tol) {
  RepairReport rep;
  if (povm.elements.empty()) return rep;
  const std::size_t n = povm.outcomes();
  const std::size_t d = povm.dim();
  constexpr std::size_t kMaxRounds = 500;
  rep.min_eigenvalue_before = std::numeric_limits<double>::infinity();
  for (std::size_t round = 0; round < kMaxRounds; ++round) {
    double worst = std::numeric_limits<double>::infinity();
    double clipped = 0.0;
    for (auto& e : povm.elements) {
      double me = 0.0;
      clipped += clip_element(e, tol, &me);
      worst = std::min(worst, me);
    }
    if (round == 0) rep.min_eigenvalue_before = worst;
    rep.clipped_mass += clipped;
    rep.rounds = round + 1;
    // Orthogonal projection onto sum_n Pi_n = I: every element takes 1/N
    // of the excess.
    BandedOperator excess = povm.total() - BandedOperator::identity(d, povm.bands());
    const double resid = excess.max_abs();
    if (resid > 0.0) {
      excess *= 1.0 / static_cast<double>(n);
      for (auto& e : povm.elements) e -= excess;
    }
    if (clipped == 0.0 && resid <= 1e-14) break;
  }
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& e : povm.elements) worst = std::min(worst, min_eigenvalue(e));
  rep.min_eigenvalue_after = worst;
  return rep;
}

Reconstruction reconstruct(const probe::OutcomeStatistics& stats,
                           const ReconstructionOptions& opts) {
  stats.validate();
  if (opts.dim == 0) throw InputError("reconstruct: dimension must be positive");
  if (opts.bands >= opts.dim) throw InputError("reconstruct: bands must be below the dimension");
  if (!(opts.gamma >= 0.0)) throw InputError("reconstruct: gamma must be >= 0");
  const auto groups = group_by_amplitude(stats);
  const std::size_t k = groups.front().phases.size();
  if (opts.bands > max_band_for_phases(k))
    throw InputError("aliasing guard: bands " + std::to_string(opts.bands) +
                     " exceed n_phases/2 - 1 = " + std::to_string(max_band_for_phases(k)) +
                     " for " + std::to_string(k) + " phases");
  for (const auto& g : groups)
    if (g.amplitude * g.amplitude > static_cast<double>(opts.dim))
      throw PhysicsError("probe |alpha|^2 = " + std::to_string(g.amplitude * g.amplitude) +
                         " exceeds the truncation d = " + std::to_string(opts.dim));

  const std::size_t nout = stats.outcomes;
  const std::size_t d = opts.dim;
  Reconstruction out;
  out.diagnostics.gamma = opts.gamma;

  const BandData p0 = phase_fourier(stats, 0);
  const DesignMatrix f0 = design_matrix(p0.amplitudes, 0, d);
  const BandSolution s0 = solve_band_l0(p0, f0, opts);
  const Eigen::MatrixXd diagonals = s0.values.real();
  out.diagnostics.bands.push_back(
      {0, s0.misfit, s0.kkt_residual, f0.condition_number, s0.iterations, s0.unknowns, s0.polished});

  out.povm.elements.assign(nout, BandedOperator(d, opts.bands));
  for (std::size_t c = 0; c < nout; ++c) {
    auto diag = out.povm.elements[c].diag(0);
    for (std::size_t j = 0; j < d; ++j)
      diag[j] = diagonals(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
  }
  for (std::size_t l = 1; l <= opts.bands; ++l) {
    const BandData pl = phase_fourier(stats, l);
    const DesignMatrix fl = design_matrix(pl.amplitudes, l, d);
    const BandSolution sl = solve_band_l(l, pl, fl, diagonals, opts);
    out.diagnostics.bands.push_back(
        {l, sl.misfit, sl.kkt_residual, fl.condition_number, sl.iterations, sl.unknowns, sl.polished});
    for (std::size_t c = 0; c < nout; ++c) {
      auto band = out.povm.elements[c].diag(l);
      for (std::size_t j = 0; j + l < d; ++j)
        band[j] = sl.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
    }
  }
  for (const auto& b : out.diagnostics.bands)
    if (b.unknowns > d * nout * (opts.real_bands ? 1 : 2))
      throw std::logic_error("band " + std::to_string(b.l) + " exceeds d*N unknowns");

  const RepairReport rep = psd_repair(out.povm, opts.psd_tolerance);
  out.diagnostics.clipped_mass = rep.clipped_mass;
  out.diagnostics.min_eigenvalue = rep.min_eigenvalue_after;
  out.diagnostics.repair_rounds = rep.rounds;
  out.diagnostics.completeness_residual =
      (out.povm.total() - BandedOperator::identity(d, opts.bands)).max_abs();

  const auto freq = stats.frequencies();
  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < stats.settings.size(); ++i) {
    const cdouble alpha = std::polar(stats.settings[i].amplitude, stats.settings[i].phase);
    for (std::size_t c = 0; c < nout; ++c) {
      const double pred = std::numbers::pi * fock::q_function(out.povm.elements[c], alpha);
      sq += (pred - freq[i][c]) * (pred - freq[i][c]);
      ++count;
    }
  }
  out.diagnostics.born_rms = std::sqrt(sq / static_cast<double>(count));
  return out;
}

}  // namespace qdt::recon
