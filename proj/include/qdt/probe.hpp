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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qdt/detector.hpp"

namespace qdt::probe {

/// Pulses per setting: 256.752 kHz repetition rate for 0.5 s.
inline constexpr std::uint64_t kDefaultTrials = 128376;
inline constexpr std::size_t kDefaultPhases = 40;
inline constexpr std::size_t kDefaultAmplitudes = 50;

struct ProbeSetting {
  double amplitude = 0.0;  ///< |alpha|
  double phase = 0.0;      ///< theta in [0, 2 pi)
  std::uint64_t trials = 0;  ///< 0 for exact (infinite-trial) statistics
};

struct Ensemble {
  std::vector<ProbeSetting> settings;
  /// Amplitudes equal to zero, whose phase settings all coincide.
  std::size_t degenerate_amplitudes = 0;
};

/// amplitudes x {2 pi k / n_phases}, amplitude-major.
Ensemble generate_ensemble(std::span<const double> amplitudes,
                           std::size_t n_phases = kDefaultPhases);

/// `count` amplitudes with |alpha|^2 from 0 to d/2. Half of the spacing is
/// linear in |alpha|^2, half geometric, so low photon numbers are sampled
/// more densely.
std::vector<double> default_amplitude_grid(std::size_t d,
                                           std::size_t count = kDefaultAmplitudes);

struct OutcomeStatistics {
  enum class Mode { kExact, kSampled };

  std::vector<ProbeSetting> settings;
  std::size_t outcomes = 0;
  /// Probabilities (exact) or counts (sampled), one row per setting.
  std::vector<std::vector<double>> table;
  Mode mode = Mode::kExact;
  std::optional<std::uint64_t> seed;

  /// Row-normalized frequencies regardless of mode.
  std::vector<std::vector<double>> frequencies() const;
  /// Throws InputError if rows do not match settings or fail to sum.
  void validate() const;
};

/// Exact statistics when trials == 0, otherwise one multinomial draw per
/// setting. Each setting draws from its own mt19937_64 seeded with
/// seed_seq{seed_lo, seed_hi, index_lo, index_hi}, so the table does not
/// depend on evaluation order. Sampled mode requires a seed.
OutcomeStatistics simulate_statistics(const detector::DetectorConfig& cfg,
                                      std::span<const ProbeSetting> settings,
                                      std::uint64_t trials,
                                      std::optional<std::uint64_t> seed);

/// Multinomial draw of `trials` over `probabilities` with the per-setting
/// stream for (seed, index).
std::vector<std::uint64_t> sample_counts(std::span<const double> probabilities,
                                         std::uint64_t trials, std::uint64_t seed,
                                         std::uint64_t index);

}  // namespace qdt::probe
