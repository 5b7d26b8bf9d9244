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

#include "qdt/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qdt/errors.hpp"
#include "qdt/fock.hpp"

namespace qdt::detector {

Architecture Architecture::tmd(std::size_t bins) {
  if (bins == 0) throw InputError("TMD needs at least one bin");
  return tmd(std::vector<double>(bins, 1.0 / static_cast<double>(bins)));
}

Architecture Architecture::tmd(std::vector<double> weights) {
  Architecture a;
  a.type = Type::kTmd;
  a.weights = std::move(weights);
  return a;
}

void DetectorConfig::validate() const {
  auto fail = [](const std::string& what) { throw PhysicsError("detector config: " + what); };
  if (!(transmissivity > 0.0 && transmissivity <= 1.0)) fail("transmissivity must be in (0, 1]");
  if (!(mode_overlap >= 0.0 && mode_overlap <= 1.0)) fail("mode_overlap must be in [0, 1]");
  if (!(efficiency > 0.0 && efficiency <= 1.0)) fail("efficiency must be in (0, 1]");
  if (!(lo_mean_photons >= 0.0) || !std::isfinite(lo_mean_photons))
    fail("lo_mean_photons must be finite and >= 0");
  if (!std::isfinite(lo_phase)) fail("lo_phase must be finite");
  if (truncation == 0) fail("truncation must be positive");
  if (bands >= truncation) fail("bands must be below the truncation");
  if (architecture.type == Architecture::Type::kTmd) {
    if (architecture.weights.empty()) fail("TMD needs at least one bin");
    double sum = 0.0;
    for (double w : architecture.weights) {
      if (!(w > 0.0)) fail("TMD bin weights must be positive");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail("TMD bin weights must sum to 1");
  }
}

EffectiveBeams effective_beams(const DetectorConfig& cfg) {
  cfg.validate();
  const double t = cfg.transmissivity;
  const double m = cfg.mode_overlap;
  const double lo_amp = std::sqrt(cfg.lo_mean_photons);
  EffectiveBeams eb;
  eb.displacement = std::polar(std::sqrt((1.0 - t) * m / t) * lo_amp, cfg.lo_phase);
  eb.background = cfg.efficiency * (1.0 - t) * (1.0 - m) * cfg.lo_mean_photons;
  eb.signal_transmission = cfg.efficiency * t;
  return eb;
}

double detected_mean(const DetectorConfig& cfg, cdouble alpha) {
  const double eta = cfg.efficiency;
  const double t = cfg.transmissivity;
  const cdouble lo = std::polar(std::sqrt(cfg.lo_mean_photons), cfg.lo_phase);
  const cdouble field =
      std::sqrt(eta * t) * alpha - std::sqrt(eta * (1.0 - t) * cfg.mode_overlap) * lo;
  const double background = eta * (1.0 - t) * (1.0 - cfg.mode_overlap) * cfg.lo_mean_photons;
  return std::norm(field) + background;
}

std::vector<double> forward_probabilities(const DetectorConfig& cfg, cdouble alpha) {
  cfg.validate();
  if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()))
    throw InputError("forward_probabilities: non-finite probe amplitude");
  if (std::norm(alpha) > static_cast<double>(cfg.truncation))
    throw PhysicsError("probe |alpha|^2 = " + std::to_string(std::norm(alpha)) +
                       " exceeds the truncation d = " + std::to_string(cfg.truncation));
  const double mu = detected_mean(cfg, alpha);
  if (cfg.architecture.type == Architecture::Type::kApd) {
    return {std::exp(-mu), -std::expm1(-mu)};
  }
  // Each bin sees an independent Poisson stream; the click count is the
  // Poisson-binomial over bins.
  const auto& w = cfg.architecture.weights;
  std::vector<double> dist(w.size() + 1, 0.0);
  dist[0] = 1.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double click = -std::expm1(-w[i] * mu);
    for (std::size_t k = i + 1; k >= 1; --k)
      dist[k] = dist[k] * (1.0 - click) + dist[k - 1] * click;
    dist[0] *= 1.0 - click;
  }
  return dist;
}

Eigen::MatrixXd loss_matrix(double transmission, std::size_t dim) {
  if (!(transmission >= 0.0 && transmission <= 1.0))
    throw InputError("loss_matrix: transmission must be in [0, 1]");
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t n = 0; n < dim; ++n)
    for (std::size_t m = 0; m <= n; ++m)
      l(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) =
          std::exp(fock::log_binomial_pmf(m, n, transmission));
  return l;
}

std::vector<std::vector<double>> loss_povm_map(
    double transmission, const std::vector<std::vector<double>>& detected,
    std::size_t dim) {
  const Eigen::MatrixXd l = loss_matrix(transmission, dim);
  std::vector<std::vector<double>> out;
  out.reserve(detected.size());
  for (const auto& element : detected) {
    if (element.size() < dim)
      throw InputError("loss_povm_map: detected POVM shorter than target dimension");
    std::vector<double> mapped(dim, 0.0);
    for (std::size_t n = 0; n < dim; ++n) {
      double acc = 0.0;
      for (std::size_t m = 0; m <= n; ++m)
        acc += l(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) * element[m];
      mapped[n] = acc;
    }
    out.push_back(std::move(mapped));
  }
  return out;
}

Eigen::MatrixXd tmd_click_matrix(std::span<const double> weights, std::size_t max_photons) {
  const std::size_t bins = weights.size();
  if (bins == 0) throw InputError("tmd_click_matrix: need at least one bin");
  for (double w : weights)
    if (!(w > 0.0)) throw InputError("tmd_click_matrix: weights must be positive");
  const std::size_t np = max_photons + 1;
  // g(k, n): k clicks among the bins processed so far (the tail of the
  // list), given n photons routed into them. Start with the last bin alone.
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(bins + 1),
                                            static_cast<Eigen::Index>(np));
  g(0, 0) = 1.0;
  for (std::size_t n = 1; n < np; ++n) g(1, static_cast<Eigen::Index>(n)) = 1.0;
  double tail_weight = weights[bins - 1];
  for (std::size_t b = bins - 1; b-- > 0;) {
    tail_weight += weights[b];
    const double p = weights[b] / tail_weight;
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(g.rows(), g.cols());
    for (std::size_t n = 0; n < np; ++n) {
      for (std::size_t m = 0; m <= n; ++m) {
        const double pm = std::exp(fock::log_binomial_pmf(m, n, p));
        if (pm == 0.0) continue;
        const auto rest = static_cast<Eigen::Index>(n - m);
        const Eigen::Index shift = m > 0 ? 1 : 0;
        for (Eigen::Index k = 0; k + shift < g.rows(); ++k)
          next(k + shift, static_cast<Eigen::Index>(n)) += pm * g(k, rest);
      }
    }
    g = std::move(next);
  }
  return g;
}

namespace {

std::size_t poisson_cutoff(double mean) {
  if (mean <= 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(mean + 12.0 * std::sqrt(mean) + 30.0));
}

}  // namespace

Eigen::MatrixXd click_response(const DetectorConfig& cfg, std::size_t max_photons) {
  cfg.validate();
  const double bg = effective_beams(cfg).background;
  const std::size_t r_max = poisson_cutoff(bg);
  const std::size_t nout = cfg.outcomes();
  const auto np = static_cast<Eigen::Index>(max_photons + 1);
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nout), np);
  if (cfg.architecture.type == Architecture::Type::kApd) {
    resp(0, 0) = std::exp(-bg);
    resp(1, 0) = -std::expm1(-bg);
    for (Eigen::Index t = 1; t < np; ++t) resp(1, t) = 1.0;
    return resp;
  }
  const Eigen::MatrixXd c = tmd_click_matrix(cfg.architecture.weights, max_photons + r_max);
  for (std::size_t r = 0; r <= r_max; ++r) {
    const double pr = std::exp(fock::log_poisson_pmf(r, bg));
    if (pr == 0.0) continue;
    for (Eigen::Index t = 0; t < np; ++t)
      resp.col(t) += pr * c.col(t + static_cast<Eigen::Index>(r));
  }
  return resp;
}

POVMSet theory_povm(const DetectorConfig& cfg) {
  cfg.validate();
  const EffectiveBeams eb = effective_beams(cfg);
  const std::size_t d = cfg.truncation;
  const double shift = std::norm(eb.displacement);
  if (shift > 0.0) {
    double inside = 0.0;
    for (std::size_t m = 0; m < d; ++m) inside += std::exp(fock::log_poisson_pmf(m, shift));
    if (1.0 - inside > 1e-3)
      throw PhysicsError("truncation d = " + std::to_string(d) +
                         " too small: displaced vacuum leaves " +
                         std::to_string(1.0 - inside) + " of its mass beyond row d-1");
  }
  const std::size_t width = fock::displacement_padding(eb.displacement, d);
  const double tau = eb.signal_transmission;
  const std::size_t nout = cfg.outcomes();

  // Undisplaced diagonals over input photon number n < width.
  std::vector<std::vector<double>> q(nout, std::vector<double>(width, 0.0));
  if (cfg.architecture.type == Architecture::Type::kApd) {
    for (std::size_t n = 0; n < width; ++n) {
      const double log_none = static_cast<double>(n) * std::log1p(-tau) - eb.background;
      q[0][n] = tau >= 1.0 ? (n == 0 ? std::exp(-eb.background) : 0.0) : std::exp(log_none);
      q[1][n] = tau >= 1.0 ? 1.0 - q[0][n] : -std::expm1(log_none);
    }
  } else {
    const Eigen::MatrixXd resp = click_response(cfg, width - 1);
    for (std::size_t n = 0; n < width; ++n) {
      for (std::size_t m = 0; m <= n; ++m) {
        const double pm = std::exp(fock::log_binomial_pmf(m, n, tau));
        if (pm == 0.0) continue;
        for (std::size_t k = 0; k < nout; ++k)
          q[k][n] += pm * resp(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m));
      }
    }
  }

  POVMSet povm;
  povm.elements.reserve(nout);
  for (std::size_t k = 0; k < nout; ++k)
    povm.elements.push_back(fock::displaced_diagonal(q[k], eb.displacement, d, cfg.bands));
  return povm;
}

std::size_t saturation_photons(std::span<const double> weights, double saturation_prob) {
  if (!(saturation_prob > 0.0 && saturation_prob < 1.0))
    throw InputError("saturation probability must be in (0, 1)");
  const auto bins = static_cast<Eigen::Index>(weights.size());
  for (std::size_t max_n = 64;; max_n *= 2) {
    if (max_n > (1u << 16)) throw PhysicsError("bins never saturate");
    const Eigen::MatrixXd c = tmd_click_matrix(weights, max_n);
    for (std::size_t n = 0; n <= max_n; ++n)
      if (c(bins, static_cast<Eigen::Index>(n)) >= saturation_prob) return n;
  }
}

std::size_t loss_inflated_photons(std::size_t needed, double transmission,
                                  double saturation_prob) {
  if (!(saturation_prob > 0.0 && saturation_prob < 1.0))
    throw InputError("saturation probability must be in (0, 1)");
  if (!(transmission > 0.0 && transmission <= 1.0))
    throw InputError("transmission must be in (0, 1]");
  for (std::size_t m = needed;; ++m) {
    // Upper tail summed from the far end (small terms first).
    double tail = 0.0;
    for (std::size_t k = m + 1; k-- > needed;)
      tail += std::exp(fock::log_binomial_pmf(k, m, transmission));
    if (tail >= saturation_prob) return m;
    if (m > needed * 1000 + 100000) throw PhysicsError("loss inflation diverged");
  }
}

TruncationEstimate estimate_truncation(const DetectorConfig& cfg, double saturation_prob) {
  if (!(saturation_prob > 0.0 && saturation_prob < 1.0))
    throw InputError("saturation probability must be in (0, 1)");
  cfg.validate();
  if (cfg.architecture.type != Architecture::Type::kTmd)
    throw InputError("estimate_truncation needs a TMD architecture");
  const EffectiveBeams eb = effective_beams(cfg);
  TruncationEstimate est;
  est.lossless = saturation_photons(cfg.architecture.weights, saturation_prob);
  est.with_loss = loss_inflated_photons(est.lossless, eb.signal_transmission, saturation_prob);
  // Worst case: the probe amplitude is reduced by |delta| through
  // destructive interference; the remainder must still meet the
  // loss-inflated count.
  const double target = static_cast<double>(est.with_loss);
  const double shift = std::abs(eb.displacement);
  auto n = static_cast<std::size_t>(std::floor(std::pow(std::sqrt(target) + shift, 2.0)));
  if (n > 0) --n;
  while (true) {
    const double amp = std::sqrt(static_cast<double>(n)) - shift;
    if (amp >= 0.0 && amp * amp >= target * (1.0 - 1e-14)) break;
    ++n;
  }
  est.with_interference = n;
  return est;
}

}  // namespace qdt::detector
