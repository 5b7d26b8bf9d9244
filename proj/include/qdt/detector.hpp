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

// Forward physics of weak-homodyne detectors: a probe mode mixed with a
// local oscillator (LO) on a beam splitter, followed by either a threshold
// detector (APD) or a time-multiplexed detector (TMD) built from B bins.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qdt/banded_operator.hpp"

namespace qdt::detector {

struct Architecture {
  enum class Type { kApd, kTmd };

  Type type = Type::kApd;
  /// Per-bin photon routing probabilities (TMD only).
  std::vector<double> weights;

  static Architecture apd() { return {}; }
  static Architecture tmd(std::size_t bins);
  static Architecture tmd(std::vector<double> weights);

  std::size_t bins() const noexcept { return type == Type::kApd ? 1 : weights.size(); }
  std::size_t outcomes() const noexcept { return bins() + 1; }
};

struct DetectorConfig {
  /// Fraction of the probe transmitted to the detector, (0, 1].
  double transmissivity = 0.655;
  /// Mode overlap between probe and LO, [0, 1].
  double mode_overlap = 1.0;
  /// Detector quantum efficiency, (0, 1].
  double efficiency = 1.0;
  /// |alpha_LO|^2 in photons.
  double lo_mean_photons = 0.0;
  double lo_phase = 0.0;
  Architecture architecture;
  /// Fock truncation d (number of basis states).
  std::size_t truncation = 40;
  /// Stored off-diagonals of synthesized POVMs.
  std::size_t bands = 6;

  std::size_t outcomes() const noexcept { return architecture.outcomes(); }
  /// Throws PhysicsError on any violated invariant.
  void validate() const;
};

struct EffectiveBeams {
  /// Signal-mode displacement sqrt((1-T) M / T) alpha_LO.
  cdouble displacement;
  /// Mean detected photons from the unmatched LO fraction.
  double background = 0.0;
  /// Overall signal transmission eta T.
  double signal_transmission = 1.0;
};

EffectiveBeams effective_beams(const DetectorConfig& cfg);

/// Mean detected photon number for coherent probe `alpha`; the probe at
/// phase 0 interferes destructively with an LO at phase 0.
double detected_mean(const DetectorConfig& cfg, cdouble alpha);

/// Outcome probabilities for a coherent probe. Throws PhysicsError when
/// |alpha|^2 exceeds the truncation (the data model would not hold).
std::vector<double> forward_probabilities(const DetectorConfig& cfg, cdouble alpha);

/// L(m, n) = C(n, m) t^m (1-t)^(n-m): probability that m of n input photons
/// survive transmission t. Columns sum to one.
Eigen::MatrixXd loss_matrix(double transmission, std::size_t dim);

/// Pulls a diagonal POVM over detected photon number back to the input:
/// out[k][n] = sum_m L(m, n) detected[k][m]. `detected` rows must cover
/// photon numbers 0..dim-1.
std::vector<std::vector<double>> loss_povm_map(
    double transmission, const std::vector<std::vector<double>>& detected,
    std::size_t dim);

/// C(k, n) = P(k bins click | n photons), n = 0..max_photons, for photons
/// routed independently to bins with the given weights.
Eigen::MatrixXd tmd_click_matrix(std::span<const double> weights,
                                 std::size_t max_photons);

/// P(outcome k | t detected photons) for t = 0..max_photons, including the
/// Poisson background photons routed through the same bins.
Eigen::MatrixXd click_response(const DetectorConfig& cfg, std::size_t max_photons);

/// Theoretical POVM on the first cfg.truncation Fock states with
/// cfg.bands stored off-diagonals:
///   Pi_k = D(delta) [sum_m P(k | m + background) Loss_{eta T}(m)] D(delta)^+.
/// Throws PhysicsError when the displaced vacuum leaves more than 1e-3 of
/// its mass beyond the truncation.
POVMSet theory_povm(const DetectorConfig& cfg);

struct TruncationEstimate {
  /// Fewest photons saturating all bins with the requested probability.
  std::size_t lossless = 0;
  /// Fewest input photons for which enough survive transmission T eta.
  std::size_t with_loss = 0;
  /// Inflation for worst-case destructive interference with the LO.
  std::size_t with_interference = 0;

  std::size_t dimension() const noexcept { return with_interference; }
};

TruncationEstimate estimate_truncation(const DetectorConfig& cfg,
                                       double saturation_prob = 0.99);

/// Smallest n with P(all bins click | n photons) >= saturation_prob.
std::size_t saturation_photons(std::span<const double> weights, double saturation_prob);
/// Smallest m with P(Binomial(m, transmission) >= needed) >= saturation_prob.
std::size_t loss_inflated_photons(std::size_t needed, double transmission,
                                  double saturation_prob);

}  // namespace qdt::detector
