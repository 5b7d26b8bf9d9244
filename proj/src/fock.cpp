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

#include "qdt/fock.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "qdt/errors.hpp"

namespace qdt::fock {

namespace {

constexpr std::size_t kFactorialTable = 4096;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const std::vector<double>& log_factorial_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kFactorialTable);
    long double acc = 0.0L;
    t[0] = 0.0;
    for (std::size_t n = 1; n < kFactorialTable; ++n) {
      acc += std::log(static_cast<long double>(n));
      t[n] = static_cast<double>(acc);
    }
    return t;
  }();
  return table;
}

}  // namespace

double log_factorial(std::size_t n) {
  if (n < kFactorialTable) return log_factorial_table()[n];
  // Stirling series; the first omitted term is below 1e-20 here.
  const long double x = static_cast<long double>(n);
  const long double inv = 1.0L / x;
  const long double inv2 = inv * inv;
  const long double series =
      inv * (1.0L / 12.0L - inv2 * (1.0L / 360.0L - inv2 / 1260.0L));
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  return static_cast<double>(x * std::log(x) - x + 0.5L * std::log(two_pi * x) +
                             series);
}

double log_binomial_pmf(std::size_t k, std::size_t n, double p) {
  if (k > n) return kNegInf;
  if (p <= 0.0) return k == 0 ? 0.0 : kNegInf;
  if (p >= 1.0) return k == n ? 0.0 : kNegInf;
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k) +
         static_cast<double>(k) * std::log(p) +
         static_cast<double>(n - k) * std::log1p(-p);
}

double log_poisson_pmf(std::size_t k, double mean) {
  if (mean <= 0.0) return k == 0 ? 0.0 : kNegInf;
  return -mean + static_cast<double>(k) * std::log(mean) - log_factorial(k);
}

cdouble coherent_fock_overlap(cdouble alpha, std::size_t j, Evaluation mode) {
  const double r = std::abs(alpha);
  if (!std::isfinite(r)) throw InputError("coherent_fock_overlap: non-finite amplitude");
  if (mode == Evaluation::kNaive) {
    if (j > 170)
      throw OverflowError("coherent_fock_overlap: j! overflows for j = " +
                          std::to_string(j));
    const cdouble power = std::pow(alpha, static_cast<double>(j));
    const double fact = std::tgamma(static_cast<double>(j) + 1.0);
    const cdouble value = std::exp(-0.5 * r * r) * power / std::sqrt(fact);
    if (!std::isfinite(std::abs(power)) || !std::isfinite(value.real()) ||
        !std::isfinite(value.imag()))
      throw OverflowError("coherent_fock_overlap: naive evaluation overflowed");
    return value;
  }
  if (r == 0.0) return j == 0 ? cdouble(1.0) : cdouble(0.0);
  const double log_mag = -0.5 * r * r + static_cast<double>(j) * std::log(r) -
                         0.5 * log_factorial(j);
  return std::polar(std::exp(log_mag), static_cast<double>(j) * std::arg(alpha));
}

std::vector<cdouble> coherent_amplitudes(cdouble alpha, std::size_t dim) {
  std::vector<cdouble> out(dim);
  for (std::size_t j = 0; j < dim; ++j) out[j] = coherent_fock_overlap(alpha, j);
  return out;
}

std::vector<double> laguerre_functions(std::size_t k, double x, std::size_t count) {
  std::vector<double> f(count, 0.0);
  if (count == 0) return f;
  if (x < 0.0 || !std::isfinite(x)) throw InputError("laguerre_functions: x must be >= 0");
  if (x == 0.0) {
    // f_n(0) = delta_{k0}.
    if (k == 0) std::fill(f.begin(), f.end(), 1.0);
    return f;
  }
  const double kd = static_cast<double>(k);
  const double log_seed = 0.5 * kd * std::log(x) - 0.5 * x - 0.5 * log_factorial(k);
  // When the seed would underflow, run the recurrence on scaled values and
  // release the scale as the functions grow out of the forbidden region.
  double shift = log_seed < -600.0 ? -log_seed : 0.0;
  double prev = 0.0;
  double cur = std::exp(log_seed + shift);
  constexpr double kBig = 1e200;
  const double log_big = std::log(kBig);
  for (std::size_t n = 0; n < count; ++n) {
    f[n] = shift > 0.0 ? cur * std::exp(-shift) : cur;
    if (n + 1 == count) break;
    const double nd = static_cast<double>(n);
    const double next = ((2.0 * nd + 1.0 + kd - x) * cur -
                         std::sqrt(nd * (nd + kd)) * prev) /
                        std::sqrt((nd + 1.0) * (nd + kd + 1.0));
    prev = cur;
    cur = next;
    if (shift > 0.0 && std::abs(cur) > kBig) {
      const double drop = std::min(shift, log_big);
      const double factor = std::exp(-drop);
      cur *= factor;
      prev *= factor;
      shift -= drop;
    }
  }
  return f;
}

cdouble displacement_element(cdouble delta, std::size_t m, std::size_t n) {
  const double x = std::norm(delta);
  const double phi = std::arg(delta);
  if (m >= n) {
    const std::size_t k = m - n;
    const double f = laguerre_functions(k, x, n + 1)[n];
    return std::polar(f, static_cast<double>(k) * phi);
  }
  const std::size_t k = n - m;
  const double f = laguerre_functions(k, x, m + 1)[m];
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return std::polar(sign * f, -static_cast<double>(k) * phi);
}

Eigen::MatrixXcd displacement_matrix(cdouble delta, std::size_t rows, std::size_t cols) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows),
                                                static_cast<Eigen::Index>(cols));
  if (rows == 0 || cols == 0) return out;
  const double x = std::norm(delta);
  const double phi = std::arg(delta);
  // Diagonal k >= 0: m = n + k.
  for (std::size_t k = 0; k < rows; ++k) {
    const std::size_t count = std::min(cols, rows - k);
    if (count == 0) continue;
    const auto f = laguerre_functions(k, x, count);
    const cdouble phase = std::polar(1.0, static_cast<double>(k) * phi);
    for (std::size_t n = 0; n < count; ++n)
      out(static_cast<Eigen::Index>(n + k), static_cast<Eigen::Index>(n)) = f[n] * phase;
  }
  // Diagonal k >= 1 above: n = m + k.
  for (std::size_t k = 1; k < cols; ++k) {
    const std::size_t count = std::min(rows, cols - k);
    if (count == 0) continue;
    const auto f = laguerre_functions(k, x, count);
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const cdouble phase = std::polar(sign, -static_cast<double>(k) * phi);
    for (std::size_t m = 0; m < count; ++m)
      out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m + k)) = f[m] * phase;
  }
  return out;
}

std::size_t displacement_padding(cdouble delta, std::size_t rows) {
  const double r = std::abs(delta);
  if (r == 0.0) return rows;
  const double spread = 12.0 * r * std::sqrt(2.0 * static_cast<double>(rows) + 1.0);
  return rows + static_cast<std::size_t>(std::ceil(r * r + spread + 40.0));
}

BandedOperator displaced_diagonal(std::span<const double> q, cdouble delta,
                                  std::size_t dim, std::size_t bands) {
  if (q.empty()) throw InputError("displaced_diagonal: empty diagonal");
  BandedOperator out(dim, bands);
  auto q_at = [&](std::size_t m) { return m < q.size() ? q[m] : q.back(); };
  if (std::abs(delta) == 0.0) {
    auto d0 = out.diag(0);
    for (std::size_t j = 0; j < dim; ++j) d0[j] = q_at(j);
    return out;
  }
  const std::size_t width = displacement_padding(delta, dim);
  const Eigen::MatrixXcd dmat = displacement_matrix(delta, dim, width);
  Eigen::MatrixXcd weighted = dmat;
  for (std::size_t m = 0; m < width; ++m)
    weighted.col(static_cast<Eigen::Index>(m)) *= q_at(m);
  for (std::size_t l = 0; l <= bands; ++l) {
    auto band = out.diag(l);
    for (std::size_t j = 0; j + l < dim; ++j) {
      // sum_m q_m D(j, m) conj(D(j + l, m))
      // Eigen's dot conjugates its left operand.
      band[j] = dmat.row(static_cast<Eigen::Index>(j + l))
                    .dot(weighted.row(static_cast<Eigen::Index>(j)));
    }
  }
  auto d0 = out.diag(0);
  for (auto& v : d0) v = v.real();
  return out;
}

double q_function(const BandedOperator& op, cdouble alpha) {
  const auto c = coherent_amplitudes(alpha, op.dim());
  double sum = 0.0;
  for (std::size_t l = 0; l <= op.bands(); ++l) {
    const auto band = op.diag(l);
    double partial = 0.0;
    for (std::size_t j = 0; j < band.size(); ++j)
      partial += (std::conj(c[j]) * band[j] * c[j + l]).real();
    sum += l == 0 ? partial : 2.0 * partial;
  }
  return sum / std::numbers::pi;
}

std::size_t AxisRange::count() const {
  if (!(step > 0.0) || !std::isfinite(step) || !std::isfinite(min) ||
      !std::isfinite(max) || max < min)
    throw InputError("grid axis needs finite min <= max and step > 0");
  const double n = std::floor((max - min) / step + 1e-9);
  if (n > 1e7) throw InputError("grid axis has too many samples");
  return static_cast<std::size_t>(n) + 1;
}

TailMode resolve_tail(const BandedOperator& op, TailMode tail) {
  if (tail != TailMode::kAuto) return tail;
  return op.diag(0).back().real() > 0.5 ? TailMode::kComplement : TailMode::kTruncate;
}

namespace {

// (pi/2) W(beta) of the truncated operator.
double scaled_wigner_sum(const BandedOperator& op, cdouble beta) {
  const double x = 4.0 * std::norm(beta);
  const double phi = std::arg(beta);
  double sum = 0.0;
  for (std::size_t l = 0; l <= op.bands(); ++l) {
    const auto band = op.diag(l);
    const auto f = laguerre_functions(l, x, band.size());
    const cdouble phase = std::polar(1.0, static_cast<double>(l) * phi);
    double partial = 0.0;
    for (std::size_t j = 0; j < band.size(); ++j) {
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      partial += sign * f[j] * (band[j] * phase).real();
    }
    sum += l == 0 ? partial : 2.0 * partial;
  }
  return sum;
}

}  // namespace

double wigner_point(const BandedOperator& op, cdouble beta, TailMode tail) {
  if (resolve_tail(op, tail) == TailMode::kComplement) {
    const BandedOperator rest = BandedOperator::identity(op.dim(), op.bands()) - op;
    return 1.0 / std::numbers::pi - 2.0 / std::numbers::pi * scaled_wigner_sum(rest, beta);
  }
  return 2.0 / std::numbers::pi * scaled_wigner_sum(op, beta);
}

WignerGrid wigner(const BandedOperator& op, const GridSpec& spec, TailMode tail) {
  const std::size_t nx = spec.x.count();
  const std::size_t np = spec.p.count();
  if (nx * np > kMaxGridPoints)
    throw InputError("wigner: grid of " + std::to_string(nx) + " x " +
                     std::to_string(np) + " points exceeds the limit of " +
                     std::to_string(kMaxGridPoints));
  const TailMode mode = resolve_tail(op, tail);
  const BandedOperator rest = mode == TailMode::kComplement
                                  ? BandedOperator::identity(op.dim(), op.bands()) - op
                                  : op;
  WignerGrid grid{spec.x, spec.p,
                  Eigen::MatrixXd(static_cast<Eigen::Index>(np),
                                  static_cast<Eigen::Index>(nx))};
  for (std::size_t ip = 0; ip < np; ++ip) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const cdouble beta(spec.x.value(ix), spec.p.value(ip));
      const double w = 2.0 / std::numbers::pi * scaled_wigner_sum(rest, beta);
      grid.values(static_cast<Eigen::Index>(ip), static_cast<Eigen::Index>(ix)) =
          mode == TailMode::kComplement ? 1.0 / std::numbers::pi - w : w;
    }
  }
  return grid;
}

}  // namespace qdt::fock
