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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/laguerre.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "qdt/errors.hpp"
#include "qdt/fock.hpp"

using namespace qdt;
using std::numbers::pi;
namespace mp = boost::multiprecision;

namespace {

// Dense exp(delta a^+ - delta^* a) on a generous truncation.
Eigen::MatrixXcd dense_displacement(cdouble delta, int dim) {
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  const Eigen::MatrixXcd gen = delta * a.adjoint() - std::conj(delta) * a;
  return gen.exp();
}

BandedOperator random_operator(std::size_t dim, std::size_t bands, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  BandedOperator op(dim, bands);
  for (std::size_t l = 0; l <= bands; ++l)
    for (std::size_t j = 0; j + l < dim; ++j) op.set(j, l, {g(rng), l == 0 ? 0.0 : g(rng)});
  return op;
}

cdouble dense_expectation(const BandedOperator& op, cdouble alpha) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(op.dim()));
  for (std::size_t j = 0; j < op.dim(); ++j) {
    // Independent of the library: multiply the ratios alpha / sqrt(k).
    cdouble c = std::exp(-0.5 * std::norm(alpha));
    for (std::size_t k = 1; k <= j; ++k) c *= alpha / std::sqrt(static_cast<double>(k));
    v(static_cast<Eigen::Index>(j)) = c;
  }
  return v.dot(op.to_dense() * v);
}

}  // namespace

TEST_CASE("log_factorial small values are exact") {
  CHECK(fock::log_factorial(0) == 0.0);
  CHECK(fock::log_factorial(1) == 0.0);
  CHECK(fock::log_factorial(5) == doctest::Approx(std::log(120.0)).epsilon(1e-15));
}

TEST_CASE("log_factorial matches a big-integer factorial") {
  using Big = mp::cpp_dec_float_50;
  for (unsigned n : {2u, 20u, 170u, 171u, 450u, 1000u, 4095u}) {
    mp::cpp_int f = 1;
    for (unsigned k = 2; k <= n; ++k) f *= k;
    const double expected = static_cast<double>(mp::log(Big(f)));
    CHECK(std::abs(fock::log_factorial(n) - expected) <= 1e-13 * expected);
  }
}

TEST_CASE("log_factorial is accurate on the asymptotic branch up to 1e6") {
  using Big = mp::cpp_dec_float_50;
  for (unsigned n : {4096u, 5000u, 65536u, 250000u, 1000000u}) {
    const double expected = static_cast<double>(boost::math::lgamma(Big(n) + 1));
    CHECK(std::abs(fock::log_factorial(n) - expected) <= 1e-12 * expected);
  }
}

TEST_CASE("log pmfs") {
  CHECK(std::exp(fock::log_binomial_pmf(1, 2, 0.5)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::exp(fock::log_poisson_pmf(3, 2.0)) ==
        doctest::Approx(std::exp(-2.0) * 8.0 / 6.0).epsilon(1e-14));
  CHECK(std::isinf(fock::log_binomial_pmf(3, 2, 0.5)));
  CHECK(fock::log_poisson_pmf(0, 0.0) == 0.0);
  CHECK(std::isinf(fock::log_poisson_pmf(1, 0.0)));
}

TEST_CASE("coherent_fock_overlap examples") {
  CHECK(fock::coherent_fock_overlap(0.0, 0) == cdouble(1.0));
  CHECK(fock::coherent_fock_overlap(0.0, 3) == cdouble(0.0));
  const long double expected = std::exp(-2.0L) * 16.0L / std::sqrt(24.0L);
  CHECK(std::abs(fock::coherent_fock_overlap(2.0, 4) - cdouble(static_cast<double>(expected))) <
        1e-15);
  // Phase is carried exactly: <j|r e^{i phi}> = e^{i j phi} <j|r>.
  const cdouble z = fock::coherent_fock_overlap(std::polar(1.3, 0.4), 5);
  const cdouble r = fock::coherent_fock_overlap(1.3, 5);
  CHECK(std::abs(z - r * std::polar(1.0, 5 * 0.4)) < 1e-15);
}

TEST_CASE("coherent amplitudes are normalized for |alpha|^2 <= d/4") {
  const std::size_t d = 450;
  for (double n_mean : {0.0, 0.5, 10.0, 60.0, 112.5}) {
    const auto amps = fock::coherent_amplitudes(std::polar(std::sqrt(n_mean), 1.1), d);
    double norm = 0.0;
    for (const auto& a : amps) {
      CHECK(std::abs(a) <= 1.0);
      norm += std::norm(a);
    }
    CHECK(norm >= 1.0 - 1e-8);
    CHECK(norm <= 1.0 + 1e-12);
  }
}

TEST_CASE("naive evaluation overflows where log space does not") {
  CHECK(std::abs(fock::coherent_fock_overlap(1.5, 30, fock::Evaluation::kNaive) -
                 fock::coherent_fock_overlap(1.5, 30)) < 1e-14);
  CHECK_THROWS_AS(fock::coherent_fock_overlap(15.0, 300, fock::Evaluation::kNaive), OverflowError);
  const cdouble v = fock::coherent_fock_overlap(15.0, 300);
  CHECK(std::isfinite(v.real()));
  CHECK(std::abs(v) <= 1.0);
}

TEST_CASE("Laguerre functions match the Boost polynomials") {
  for (unsigned k : {0u, 1u, 3u}) {
    for (double x : {0.0, 0.3, 2.0, 7.5}) {
      const auto f = fock::laguerre_functions(k, x, 12);
      for (unsigned n = 0; n < 12; ++n) {
        const double norm = std::exp(0.5 * (std::lgamma(n + 1.0) - std::lgamma(n + k + 1.0)));
        const double expected =
            norm * std::pow(x, 0.5 * k) * std::exp(-0.5 * x) * boost::math::laguerre(n, k, x);
        CHECK(f[n] == doctest::Approx(expected).epsilon(1e-10).scale(1.0));
      }
    }
  }
}

TEST_CASE("Laguerre functions stay bounded at large order") {
  const auto f = fock::laguerre_functions(6, 300.0, 900);
  for (double v : f) {
    CHECK(std::isfinite(v));
    CHECK(std::abs(v) <= 1.0 + 1e-12);
  }
}

TEST_CASE("displacement_element examples") {
  CHECK(fock::displacement_element(0.0, 3, 3) == cdouble(1.0));
  CHECK(fock::displacement_element(0.0, 2, 3) == cdouble(0.0));
  const cdouble delta(0.7, -0.4);
  CHECK(std::abs(fock::displacement_element(delta, 0, 0) - std::exp(-0.5 * std::norm(delta))) <
        1e-15);
}

TEST_CASE("displacement elements agree with a dense matrix exponential") {
  const Eigen::MatrixXcd one = dense_displacement(1.0, 64);
  CHECK(std::abs(one(1, 0) - std::exp(-0.5)) < 1e-12);
  CHECK(std::abs(fock::displacement_element(1.0, 1, 0) - std::exp(-0.5)) < 1e-14);
  for (cdouble delta : {cdouble(1.0, 0.0), cdouble(0.6, 1.1), cdouble(-1.62, 0.0)}) {
    const Eigen::MatrixXcd dense = dense_displacement(delta, 64);
    const Eigen::MatrixXcd fast = fock::displacement_matrix(delta, 24, 24);
    for (int m = 0; m < 24; ++m)
      for (int n = 0; n < 24; ++n) {
        CHECK(std::abs(fast(m, n) - dense(m, n)) < 1e-10);
        CHECK(std::abs(fock::displacement_element(delta, m, n) - dense(m, n)) < 1e-10);
      }
  }
}

TEST_CASE("assembled displacement matrix is unitary on low columns") {
  for (double r : {0.5, 1.0, 2.0}) {
    const Eigen::MatrixXcd u = fock::displacement_matrix(std::polar(r, 0.9), 64, 64);
    // Column n spreads to roughly (sqrt(n) + |delta|)^2; keep it inside 64 rows.
    const Eigen::MatrixXcd g = u.leftCols(24).adjoint() * u.leftCols(24);
    CHECK((g - Eigen::MatrixXcd::Identity(24, 24)).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("displaced_diagonal equals dense conjugation") {
  const cdouble delta(1.2, 0.5);
  const std::size_t dim = 20;
  const std::size_t width = fock::displacement_padding(delta, dim);
  std::vector<double> q(width);
  for (std::size_t n = 0; n < width; ++n) q[n] = std::pow(0.7, static_cast<double>(n));
  const BandedOperator op = fock::displaced_diagonal(q, delta, dim, dim - 1);
  const int big = 90;
  const Eigen::MatrixXcd u = dense_displacement(delta, big);
  Eigen::VectorXd qd(big);
  for (int n = 0; n < big; ++n) qd(n) = std::pow(0.7, n);
  const Eigen::MatrixXcd ref = u * qd.asDiagonal() * u.adjoint();
  CHECK((op.to_dense() - ref.topLeftCorner(dim, dim)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("q_function examples") {
  const std::size_t d = 60;
  const cdouble alpha(0.9, -0.6);
  const double n = std::norm(alpha);
  CHECK(fock::q_function(BandedOperator::identity(d), alpha) ==
        doctest::Approx(1.0 / pi).epsilon(1e-12));
  CHECK(fock::q_function(BandedOperator::fock_projector(0, d), alpha) ==
        doctest::Approx(std::exp(-n) / pi).epsilon(1e-14));
  CHECK(fock::q_function(BandedOperator::fock_projector(1, d), alpha) ==
        doctest::Approx(n * std::exp(-n) / pi).epsilon(1e-14));
}

TEST_CASE("q_function matches dense algebra for random banded operators") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + trial % 15;
    const BandedOperator op = random_operator(d, std::min<std::size_t>(d - 1, trial % 5), rng);
    const cdouble alpha(u(rng), u(rng));
    const cdouble dense = dense_expectation(op, alpha);
    CHECK(std::abs(dense.imag()) < 1e-12);
    CHECK(std::abs(pi * fock::q_function(op, alpha) - dense.real()) < 1e-10);
  }
}

TEST_CASE("Wigner convention") {
  const std::size_t d = 30;
  CHECK(fock::wigner_point(BandedOperator::fock_projector(0, d), 0.0) ==
        doctest::Approx(2.0 / pi).epsilon(1e-14));
  CHECK(fock::wigner_point(BandedOperator::fock_projector(1, d), 0.0) ==
        doctest::Approx(-2.0 / pi).epsilon(1e-14));
  // Coherent state: Gaussian of quadrature standard deviation 1/2.
  const cdouble b0(0.8, -0.3);
  const std::size_t width = fock::displacement_padding(b0, d);
  std::vector<double> vac(width, 0.0);
  vac[0] = 1.0;
  const BandedOperator coh = fock::displaced_diagonal(vac, b0, d, d - 1);
  for (cdouble beta : {cdouble(0.0, 0.0), cdouble(0.8, -0.3), cdouble(1.2, 0.4)}) {
    const double expected = 2.0 / pi * std::exp(-2.0 * std::norm(beta - b0));
    CHECK(fock::wigner_point(coh, beta) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("Wigner of a thermal-like operator and its complement") {
  // W of sum_n q^n |n><n| is (2/pi) exp(-2|b|^2 (1-q)/(1+q)) / (1+q).
  const double q = 0.6;
  const std::size_t d = 120;
  std::vector<double> diag(d);
  for (std::size_t n = 0; n < d; ++n) diag[n] = std::pow(q, static_cast<double>(n));
  const BandedOperator thermal = BandedOperator::diagonal(diag, 4);
  std::vector<double> cdiag(d);
  for (std::size_t n = 0; n < d; ++n) cdiag[n] = 1.0 - diag[n];
  const BandedOperator click = BandedOperator::diagonal(cdiag, 4);
  CHECK(fock::resolve_tail(click, fock::TailMode::kAuto) == fock::TailMode::kComplement);
  CHECK(fock::resolve_tail(thermal, fock::TailMode::kAuto) == fock::TailMode::kTruncate);
  for (double r : {0.0, 0.5, 1.3}) {
    const double w0 = 2.0 / pi * std::exp(-2.0 * r * r * (1 - q) / (1 + q)) / (1 + q);
    CHECK(fock::wigner_point(thermal, r) == doctest::Approx(w0).epsilon(1e-10));
    CHECK(fock::wigner_point(click, {0.0, r}) == doctest::Approx(1.0 / pi - w0).epsilon(1e-10));
  }
}

TEST_CASE("Wigner integrates to the trace and obeys the overlap identity") {
  std::mt19937_64 rng(5);
  const std::size_t d = 6;
  // PSD operators from random Gram matrices.
  auto random_psd = [&]() {
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Random(d, d);
    return BandedOperator::from_dense(g * g.adjoint() / static_cast<double>(d), d - 1);
  };
  const BandedOperator a = random_psd();
  const BandedOperator b = random_psd();
  const fock::GridSpec spec{{-5.5, 5.5, 0.05}, {-5.5, 5.5, 0.05}};
  const auto wa = fock::wigner(a, spec, fock::TailMode::kTruncate);
  const auto wb = fock::wigner(b, spec, fock::TailMode::kTruncate);
  const double cell = spec.x.step * spec.p.step;
  CHECK(wa.values.sum() * cell == doctest::Approx(a.trace()).epsilon(1e-6));
  const double overlap = pi * wa.values.cwiseProduct(wb.values).sum() * cell;
  CHECK(overlap == doctest::Approx(hs_inner(a, b)).epsilon(1e-3));
}

TEST_CASE("Wigner grid layout and size guard") {
  const fock::GridSpec spec{{-1.0, 1.0, 0.5}, {0.0, 0.5, 0.25}};
  CHECK(spec.x.count() == 5);
  CHECK(spec.p.count() == 3);
  const auto grid = fock::wigner(BandedOperator::fock_projector(0, 8), spec);
  CHECK(grid.values.rows() == 3);
  CHECK(grid.values.cols() == 5);
  CHECK(grid.values(0, 2) == doctest::Approx(2.0 / pi));
  const fock::GridSpec huge{{-100.0, 100.0, 0.01}, {-100.0, 100.0, 0.01}};
  CHECK_THROWS_AS(fock::wigner(BandedOperator::fock_projector(0, 8), huge), InputError);
  CHECK_THROWS_AS(fock::wigner(BandedOperator::fock_projector(0, 8),
                               fock::GridSpec{{1.0, -1.0, 0.1}, {0.0, 1.0, 0.1}}),
                  InputError);
}
