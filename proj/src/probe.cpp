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

#include "qdt/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "qdt/errors.hpp"

namespace qdt::probe {

Ensemble generate_ensemble(std::span<const double> amplitudes, std::size_t n_phases) {
  if (amplitudes.empty()) throw InputError("generate_ensemble: empty amplitude grid");
  if (n_phases == 0) throw InputError("generate_ensemble: need at least one phase");
  Ensemble ens;
  ens.settings.reserve(amplitudes.size() * n_phases);
  for (double a : amplitudes) {
    if (!(a >= 0.0) || !std::isfinite(a))
      throw InputError("generate_ensemble: amplitudes must be finite and >= 0");
    if (a == 0.0) ++ens.degenerate_amplitudes;
    for (std::size_t k = 0; k < n_phases; ++k) {
      const double theta =
          2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_phases);
      ens.settings.push_back({a, theta, 0});
    }
  }
  return ens;
}

std::vector<double> default_amplitude_grid(std::size_t d, std::size_t count) {
  if (d == 0 || count == 0) throw InputError("default_amplitude_grid: empty grid");
  std::vector<double> amps(count, 0.0);
  if (count == 1) return amps;
  const double top = 0.5 * static_cast<double>(d);
  const double growth = std::log1p(top);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(count - 1);
    const double linear = u;
    const double geometric = std::expm1(growth * u) / top;
    const double photons = top * 0.5 * (linear + geometric);
    amps[i] = std::sqrt(photons);
  }
  return amps;
}

std::vector<std::vector<double>> OutcomeStatistics::frequencies() const {
  std::vector<std::vector<double>> out = table;
  if (mode == Mode::kExact) return out;
  for (auto& row : out) {
    double total = 0.0;
    for (double v : row) total += v;
    if (total > 0.0)
      for (double& v : row) v /= total;
  }
  return out;
}

void OutcomeStatistics::validate() const {
  if (settings.empty()) throw InputError("statistics: no probe settings");
  if (outcomes == 0) throw InputError("statistics: no outcomes");
  if (table.size() != settings.size())
    throw InputError("statistics: table rows do not match settings");
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table[i];
    if (row.size() != outcomes)
      throw InputError("statistics: row " + std::to_string(i) + " has the wrong width");
    double sum = 0.0;
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw InputError("statistics: negative or non-finite entry in row " +
                         std::to_string(i));
      sum += v;
    }
    const double target =
        mode == Mode::kExact ? 1.0 : static_cast<double>(settings[i].trials);
    if (std::abs(sum - target) > 1e-9 * std::max(1.0, target))
      throw InputError("statistics: row " + std::to_string(i) + " does not sum to " +
                       (mode == Mode::kExact ? std::string("1") : std::string("its trials")));
    if (!(settings[i].amplitude >= 0.0) || !std::isfinite(settings[i].phase))
      throw InputError("statistics: invalid probe setting in row " + std::to_string(i));
  }
}

std::vector<std::uint64_t> sample_counts(std::span<const double> probabilities,
                                         std::uint64_t trials, std::uint64_t seed,
                                         std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::vector<std::uint64_t> counts(probabilities.size(), 0);
  std::uint64_t remaining = trials;
  double mass = 1.0;
  for (std::size_t k = 0; k + 1 < probabilities.size() && remaining > 0; ++k) {
    const double p = mass > 0.0 ? std::clamp(probabilities[k] / mass, 0.0, 1.0) : 0.0;
    std::binomial_distribution<std::uint64_t> draw(remaining, p);
    counts[k] = draw(rng);
    remaining -= counts[k];
    mass -= probabilities[k];
  }
  if (!probabilities.empty()) counts.back() += remaining;
  return counts;
}

OutcomeStatistics simulate_statistics(const detector::DetectorConfig& cfg,
                                      std::span<const ProbeSetting> settings,
                                      std::uint64_t trials,
                                      std::optional<std::uint64_t> seed) {
  cfg.validate();
  if (settings.empty()) throw InputError("simulate_statistics: empty ensemble");
  if (trials > 0 && !seed)
    throw InputError("simulate_statistics: sampled mode needs an explicit seed");
  OutcomeStatistics stats;
  stats.outcomes = cfg.outcomes();
  stats.mode = trials == 0 ? OutcomeStatistics::Mode::kExact : OutcomeStatistics::Mode::kSampled;
  stats.seed = trials == 0 ? std::nullopt : seed;
  stats.settings.assign(settings.begin(), settings.end());
  stats.table.reserve(settings.size());
  for (std::size_t i = 0; i < settings.size(); ++i) {
    auto& s = stats.settings[i];
    s.trials = trials;
    const auto probs = detector::forward_probabilities(cfg, std::polar(s.amplitude, s.phase));
    if (trials == 0) {
      stats.table.push_back(probs);
      continue;
    }
    const auto counts = sample_counts(probs, trials, *seed, i);
    stats.table.emplace_back(counts.begin(), counts.end());
  }
  return stats;
}

}  // namespace qdt::probe
