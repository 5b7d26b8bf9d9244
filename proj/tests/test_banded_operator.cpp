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

#include <random>

#include "qdt/banded_operator.hpp"
#include "qdt/errors.hpp"

using namespace qdt;

namespace {

BandedOperator sample(std::size_t dim, std::size_t bands, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  BandedOperator op(dim, bands);
  for (std::size_t l = 0; l <= bands; ++l)
    for (std::size_t j = 0; j + l < dim; ++j) op.set(j, l, {g(rng), l == 0 ? 0.0 : g(rng)});
  return op;
}

}  // namespace

TEST_CASE("shape invariants") {
  const BandedOperator op(7, 3);
  CHECK(op.dim() == 7);
  CHECK(op.bands() == 3);
  for (std::size_t l = 0; l <= 3; ++l) CHECK(op.diag(l).size() == 7 - l);
  CHECK_THROWS_AS(BandedOperator(4, 4), InputError);
  CHECK_THROWS_AS(BandedOperator(0, 0), InputError);
  CHECK_THROWS_AS(op.diag(4), InputError);
}

TEST_CASE("dense expansion is Hermitian and consistent with at()") {
  const BandedOperator op = sample(9, 4, 1);
  const Eigen::MatrixXcd m = op.to_dense();
  CHECK((m - m.adjoint()).cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t j = 0; j < 9; ++j)
    for (std::size_t k = 0; k < 9; ++k) {
      CHECK(op.at(j, k) == m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)));
      if (j > k + 4 || k > j + 4) CHECK(op.at(j, k) == cdouble(0.0));
    }
  CHECK(op.at(2, 5) == std::conj(op.at(5, 2)));
}

TEST_CASE("from_dense keeps the upper bands") {
  const BandedOperator op = sample(6, 5, 2);
  const BandedOperator back = BandedOperator::from_dense(op.to_dense(), 5);
  CHECK((back.to_dense() - op.to_dense()).cwiseAbs().maxCoeff() == 0.0);
  const BandedOperator cut = BandedOperator::from_dense(op.to_dense(), 2);
  CHECK(cut.bands() == 2);
  CHECK(cut.at(0, 3) == cdouble(0.0));
  CHECK(cut.at(0, 2) == op.at(0, 2));
}

TEST_CASE("constructors") {
  const auto id = BandedOperator::identity(5, 2);
  CHECK(id.trace() == 5.0);
  CHECK(id.at(1, 2) == cdouble(0.0));
  const auto p = BandedOperator::fock_projector(3, 5);
  CHECK(p.trace() == 1.0);
  CHECK(p.at(3, 3) == cdouble(1.0));
  CHECK_THROWS_AS(BandedOperator::fock_projector(5, 5), InputError);
  const std::vector<double> d{1.0, 0.5, 0.25};
  const auto dg = BandedOperator::diagonal(d, 1);
  CHECK(dg.diagonal_values() == d);
  CHECK(dg.is_real());
}

TEST_CASE("Hilbert-Schmidt quantities match dense algebra") {
  const BandedOperator a = sample(8, 3, 3);
  const BandedOperator b = sample(8, 5, 4);
  const Eigen::MatrixXcd da = a.to_dense();
  const Eigen::MatrixXcd db = b.to_dense();
  CHECK(hs_inner(a, b) == doctest::Approx((da * db).trace().real()).epsilon(1e-12));
  CHECK(a.hs_norm() == doctest::Approx(da.norm()).epsilon(1e-12));
  CHECK(a.trace() == doctest::Approx(da.trace().real()).epsilon(1e-14));
  CHECK(a.max_abs() == doctest::Approx(da.cwiseAbs().maxCoeff()));
}

TEST_CASE("arithmetic and band changes") {
  const BandedOperator a = sample(6, 2, 5);
  const BandedOperator b = sample(6, 2, 6);
  CHECK(((a + b) - b).to_dense().isApprox(a.to_dense(), 1e-14));
  CHECK((2.0 * a).to_dense().isApprox(2.0 * a.to_dense()));
  const BandedOperator wide = a.with_bands(4);
  CHECK(wide.bands() == 4);
  CHECK(wide.to_dense() == a.to_dense());
  CHECK(wide.with_bands(1).at(0, 2) == cdouble(0.0));
  CHECK_THROWS_AS(a + BandedOperator(7, 2), InputError);
  POVMSet set{{a, b}};
  CHECK(set.total().to_dense().isApprox(a.to_dense() + b.to_dense()));
}

TEST_CASE("dense expansion is size-checked") {
  const BandedOperator big(BandedOperator::kMaxDenseDim + 1, 0);
  CHECK_THROWS_AS(big.to_dense(), InputError);
}
