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

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/binomial.hpp>

#include "qdt/detector.hpp"
#include "qdt/errors.hpp"
#include "qdt/fock.hpp"

using namespace qdt;
using detector::Architecture;
using detector::DetectorConfig;

namespace {

DetectorConfig strong_lo_apd() {
  DetectorConfig cfg;
  cfg.transmissivity = 0.655;
  cfg.mode_overlap = 0.99;
  cfg.efficiency = 0.39;
  cfg.lo_mean_photons = 5.5;
  cfg.truncation = 40;
  return cfg;
}

// P(exactly k of B equally likely bins occupied | n photons).
long double occupancy(unsigned bins, unsigned k, unsigned n) {
  if (k > bins) return 0.0L;
  long double sum = 0.0L;
  for (unsigned i = 0; i <= k; ++i) {
    const long double term = boost::math::binomial_coefficient<long double>(k, i) *
                             std::pow(static_cast<long double>(k - i) / bins, n);
    sum += (i % 2 == 0) ? term : -term;
  }
  return boost::math::binomial_coefficient<long double>(bins, k) * sum;
}

// P(Binomial(m, t) >= k) through the regularized incomplete beta function.
double binomial_tail(unsigned k, unsigned m, double t) {
  if (k == 0) return 1.0;
  if (k > m) return 0.0;
  return boost::math::ibeta(static_cast<double>(k), static_cast<double>(m - k + 1), t);
}

}  // namespace

TEST_CASE("effective beams") {
  const auto b = detector::effective_beams(strong_lo_apd());
  CHECK(std::abs(b.displacement) == doctest::Approx(1.693).epsilon(3e-4));
  CHECK(b.signal_transmission == doctest::Approx(0.39 * 0.655));

  DetectorConfig no_overlap = strong_lo_apd();
  no_overlap.mode_overlap = 0.0;
  const auto n = detector::effective_beams(no_overlap);
  CHECK(n.displacement == cdouble(0.0));
  CHECK(n.background == doctest::Approx(0.39 * 0.345 * 5.5));

  DetectorConfig f = strong_lo_apd();
  f.mode_overlap = 0.16;
  CHECK(detector::effective_beams(f).background == doctest::Approx(0.6214).epsilon(2e-4));

  DetectorConfig matched = strong_lo_apd();
  matched.mode_overlap = 1.0;
  CHECK(detector::effective_beams(matched).background == 0.0);
}

TEST_CASE("configuration invariants") {
  DetectorConfig cfg = strong_lo_apd();
  CHECK_NOTHROW(cfg.validate());
  cfg.transmissivity = 0.0;
  CHECK_THROWS_AS(cfg.validate(), PhysicsError);
  cfg = strong_lo_apd();
  cfg.mode_overlap = 1.2;
  CHECK_THROWS_AS(cfg.validate(), PhysicsError);
  cfg = strong_lo_apd();
  cfg.efficiency = 0.0;
  CHECK_THROWS_AS(cfg.validate(), PhysicsError);
  cfg = strong_lo_apd();
  cfg.architecture = Architecture::tmd(std::vector<double>{0.5, 0.6});
  CHECK_THROWS_AS(cfg.validate(), PhysicsError);
  CHECK_THROWS_AS(Architecture::tmd(std::size_t{0}), InputError);
  CHECK(Architecture::tmd(8).outcomes() == 9);
  CHECK(Architecture::apd().outcomes() == 2);
}

TEST_CASE("forward probabilities") {
  DetectorConfig cfg;
  cfg.truncation = 40;
  auto p = detector::forward_probabilities(cfg, 0.0);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 0.0);

  cfg.efficiency = 0.39;
  p = detector::forward_probabilities(cfg, 1.7);
  CHECK(p[1] == doctest::Approx(1.0 - std::exp(-0.39 * 0.655 * 1.7 * 1.7)).epsilon(1e-14));

  DetectorConfig tmd;
  tmd.transmissivity = 1.0;
  tmd.architecture = Architecture::tmd(8);
  tmd.truncation = 40;
  p = detector::forward_probabilities(tmd, std::sqrt(8.0 * std::log(2.0)));
  for (unsigned k = 0; k <= 8; ++k)
    CHECK(p[k] == doctest::Approx(boost::math::binomial_coefficient<double>(8, k) / 256.0)
                      .epsilon(1e-12));

  // The probe at phase 0 interferes destructively with the LO.
  const DetectorConfig a = strong_lo_apd();
  const auto beams = detector::effective_beams(a);
  CHECK(detector::detected_mean(a, beams.displacement) ==
        doctest::Approx(beams.background).epsilon(1e-12));
  CHECK_THROWS_AS(detector::forward_probabilities(a, 7.0), PhysicsError);
  CHECK_THROWS_AS(detector::forward_probabilities(a, cdouble(NAN, 0.0)), InputError);
}

TEST_CASE("loss matrix and loss_povm_map") {
  const Eigen::MatrixXd l = detector::loss_matrix(0.5, 6);
  CHECK(l(1, 2) == doctest::Approx(0.5));
  for (Eigen::Index n = 0; n < 6; ++n) CHECK(l.col(n).sum() == doctest::Approx(1.0));
  const Eigen::MatrixXd id = detector::loss_matrix(1.0, 6);
  CHECK(id.isApprox(Eigen::MatrixXd::Identity(6, 6)));

  // Threshold detector behind 39% efficiency: no-click = (1 - 0.39)^n.
  std::vector<std::vector<double>> apd(2, std::vector<double>(20, 1.0));
  apd[0].assign(20, 0.0);
  apd[0][0] = 1.0;
  apd[1][0] = 0.0;
  const auto mapped = detector::loss_povm_map(0.39, apd, 20);
  for (std::size_t n = 0; n < 20; ++n) {
    CHECK(mapped[0][n] == doctest::Approx(std::pow(0.61, n)).epsilon(1e-13));
    CHECK(mapped[0][n] + mapped[1][n] == doctest::Approx(1.0).epsilon(1e-14));
  }
  const auto same = detector::loss_povm_map(1.0, apd, 20);
  CHECK(same == apd);
}

TEST_CASE("TMD click matrix examples") {
  const std::vector<double> w(8, 0.125);
  const Eigen::MatrixXd c = detector::tmd_click_matrix(w, 60);
  CHECK(c(0, 0) == 1.0);
  CHECK(c(1, 1) == doctest::Approx(1.0));
  CHECK(c(1, 2) == doctest::Approx(1.0 / 8.0));
  CHECK(c(2, 2) == doctest::Approx(7.0 / 8.0));
  CHECK(c(8, 52) >= 0.99);
  for (unsigned n = 0; n <= 60; ++n) {
    CHECK(c.col(n).sum() == doctest::Approx(1.0).epsilon(1e-13));
    for (unsigned k = 0; k <= 8; ++k) {
      if (k > n) CHECK(c(k, n) == 0.0);
      CHECK(c(k, n) == doctest::Approx(static_cast<double>(occupancy(8, k, n))).epsilon(1e-10).scale(1e-12));
    }
  }
  CHECK_THROWS_AS(detector::tmd_click_matrix(std::vector<double>{}, 4), InputError);
}

TEST_CASE("TMD click matrix for unbalanced bins matches enumeration") {
  const std::vector<double> w{0.5, 0.3, 0.2};
  const Eigen::MatrixXd c = detector::tmd_click_matrix(w, 6);
  for (unsigned n = 0; n <= 6; ++n) {
    std::vector<double> expected(4, 0.0);
    unsigned total = 1;
    for (unsigned i = 0; i < n; ++i) total *= 3;
    for (unsigned code = 0; code < total; ++code) {
      unsigned mask = 0;
      double prob = 1.0;
      unsigned x = code;
      for (unsigned i = 0; i < n; ++i) {
        mask |= 1u << (x % 3);
        prob *= w[x % 3];
        x /= 3;
      }
      expected[static_cast<std::size_t>(__builtin_popcount(mask))] += prob;
    }
    for (unsigned k = 0; k <= 3; ++k) CHECK(c(k, n) == doctest::Approx(expected[k]).epsilon(1e-13));
  }
}

TEST_CASE("theory POVM of a loss-only threshold detector") {
  DetectorConfig cfg;
  cfg.efficiency = 0.39;
  cfg.truncation = 30;
  const POVMSet povm = detector::theory_povm(cfg);
  REQUIRE(povm.outcomes() == 2);
  CHECK(povm.bands() == 6);
  const double tau = 0.39 * 0.655;
  for (std::size_t n = 0; n < 30; ++n)
    CHECK(povm.elements[0].at(n, n).real() == doctest::Approx(std::pow(1 - tau, n)).epsilon(1e-12));
  CHECK(povm.elements[0].max_abs() == doctest::Approx(1.0));
  CHECK(std::abs(povm.elements[0].at(0, 1)) == 0.0);
}

TEST_CASE("theory POVM is complete and reproduces the forward model") {
  for (bool tmd : {false, true}) {
    DetectorConfig cfg = strong_lo_apd();
    if (tmd) {
      cfg.architecture = Architecture::tmd(8);
      cfg.efficiency = 0.24;
      cfg.truncation = 60;
    }
    cfg.bands = cfg.truncation - 1;
    const POVMSet povm = detector::theory_povm(cfg);
    const BandedOperator resid = povm.total() - BandedOperator::identity(cfg.truncation);
    const std::size_t keep =
        cfg.truncation - static_cast<std::size_t>(std::ceil(3.0 * std::sqrt(cfg.truncation)));
    for (std::size_t j = 0; j < keep; ++j)
      for (std::size_t k = 0; k < keep; ++k) CHECK(std::abs(resid.at(j, k)) < 1e-8);
    for (double r : {0.0, 0.7, 1.5, std::sqrt(cfg.truncation / 6.0)})
      for (double th : {0.0, 1.0, 2.5}) {
        const cdouble alpha = std::polar(r, th);
        const auto p = detector::forward_probabilities(cfg, alpha);
        for (std::size_t n = 0; n < p.size(); ++n)
          CHECK(std::abs(std::numbers::pi * fock::q_function(povm.elements[n], alpha) - p[n]) <
                1e-6);
      }
  }
}

TEST_CASE("theory POVM with matched modes is a displaced loss POVM") {
  DetectorConfig cfg = strong_lo_apd();
  cfg.mode_overlap = 1.0;
  cfg.bands = cfg.truncation - 1;
  const POVMSet displaced = detector::theory_povm(cfg);
  const cdouble delta = detector::effective_beams(cfg).displacement;
  const int big = 120;
  const Eigen::MatrixXcd u = fock::displacement_matrix(delta, big, big);
  const double tau = cfg.efficiency * cfg.transmissivity;
  Eigen::VectorXd q0(big);
  for (int n = 0; n < big; ++n) q0(n) = std::pow(1 - tau, n);
  const Eigen::MatrixXcd pi0 = (u * q0.asDiagonal() * u.adjoint()).topLeftCorner(40, 40);
  CHECK((displaced.elements[0].to_dense() - pi0).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("theory POVM rejects a truncation the displacement leaks out of") {
  DetectorConfig cfg = strong_lo_apd();
  cfg.truncation = 6;
  cfg.bands = 3;
  CHECK_THROWS_AS(detector::theory_povm(cfg), PhysicsError);
}

TEST_CASE("saturation photons against the inclusion-exclusion oracle") {
  const std::vector<double> w(8, 0.125);
  unsigned expected = 0;
  while (occupancy(8, 8, expected) < 0.99L) ++expected;
  CHECK(detector::saturation_photons(w, 0.99) == expected);
  CHECK(expected >= 50);
  CHECK(expected <= 53);
  CHECK_THROWS_AS(detector::saturation_photons(w, 1.0), InputError);
}

TEST_CASE("loss inflation against the incomplete beta oracle") {
  for (double t : {0.157, 0.3, 0.8}) {
    const std::size_t m = detector::loss_inflated_photons(51, t, 0.99);
    CHECK(binomial_tail(51, static_cast<unsigned>(m), t) >= 0.99);
    CHECK(binomial_tail(51, static_cast<unsigned>(m - 1), t) < 0.99);
  }
  std::size_t prev = detector::loss_inflated_photons(51, 0.1, 0.99);
  for (double t = 0.15; t <= 1.0; t += 0.05) {
    const std::size_t cur = detector::loss_inflated_photons(51, t, 0.99);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("truncation estimate stages") {
  DetectorConfig cfg = strong_lo_apd();
  cfg.architecture = Architecture::tmd(8);
  cfg.efficiency = 0.24;
  cfg.lo_mean_photons = 0.8;
  const auto est = detector::estimate_truncation(cfg);
  CHECK(est.lossless == detector::saturation_photons(cfg.architecture.weights, 0.99));
  CHECK(est.with_loss == detector::loss_inflated_photons(est.lossless, 0.24 * 0.655, 0.99));
  CHECK(est.with_interference >= est.with_loss);
  CHECK(est.dimension() == est.with_interference);
  // Stage 3: worst-case destructive interference still leaves stage 2 photons.
  const double shift = std::abs(detector::effective_beams(cfg).displacement);
  const double n3 = static_cast<double>(est.with_interference);
  CHECK(std::pow(std::sqrt(n3) - shift, 2) >= static_cast<double>(est.with_loss) * (1 - 1e-12));
  CHECK(std::pow(std::sqrt(n3 - 1) - shift, 2) < static_cast<double>(est.with_loss));
  CHECK_THROWS_AS(detector::estimate_truncation(strong_lo_apd()), InputError);
  CHECK_THROWS_AS(detector::estimate_truncation(cfg, 0.0), InputError);
}
