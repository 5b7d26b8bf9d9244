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

#include "qdt/io.hpp"

#include <unistd.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>

#include "qdt/errors.hpp"

namespace qdt::io {

namespace {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("field '") + key + "': " + e.what());
  }
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const char* where) {
  if (!j.is_object()) throw InputError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw InputError(std::string("unknown field '") + key + "' in " + where);
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_real(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw InputError("statistics CSV line " + std::to_string(line) + ": bad number '" +
                     std::string(s) + "'");
  return v;
}

std::uint64_t parse_count(std::string_view s, std::size_t line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw InputError("statistics CSV line " + std::to_string(line) + ": bad count '" +
                     std::string(s) + "'");
  return v;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw InputError("error reading '" + path + "'");
  return ss.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw InputError("error writing '" + path + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InputError("cannot replace '" + path + "'");
  }
}

void save_json(const std::string& path, const json& j) { write_atomic(path, j.dump(2) + "\n"); }

json load_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

// ---- detector configuration ---------------------------------------------

json to_json(const detector::DetectorConfig& cfg) {
  json arch;
  if (cfg.architecture.type == detector::Architecture::Type::kApd) {
    arch = {{"type", "apd"}, {"bins", 1}};
  } else {
    arch = {{"type", "tmd"}, {"bins", cfg.architecture.bins()}, {"weights", cfg.architecture.weights}};
  }
  return {{"transmissivity", cfg.transmissivity},
          {"mode_overlap", cfg.mode_overlap},
          {"efficiency", cfg.efficiency},
          {"lo_mean_photons", cfg.lo_mean_photons},
          {"lo_phase", cfg.lo_phase},
          {"architecture", arch},
          {"truncation", cfg.truncation},
          {"bands", cfg.bands}};
}

detector::DetectorConfig detector_config_from_json(const json& j) {
  check_keys(j,
             {"transmissivity", "mode_overlap", "efficiency", "lo_mean_photons", "lo_phase",
              "architecture", "truncation", "bands"},
             "detector config");
  detector::DetectorConfig cfg;
  cfg.transmissivity = field(j, "transmissivity", cfg.transmissivity);
  cfg.mode_overlap = field(j, "mode_overlap", cfg.mode_overlap);
  cfg.efficiency = field(j, "efficiency", cfg.efficiency);
  cfg.lo_mean_photons = field(j, "lo_mean_photons", cfg.lo_mean_photons);
  cfg.lo_phase = field(j, "lo_phase", cfg.lo_phase);
  cfg.truncation = field(j, "truncation", cfg.truncation);
  cfg.bands = field(j, "bands", cfg.bands);
  if (j.contains("architecture")) {
    const json& a = j.at("architecture");
    check_keys(a, {"type", "bins", "weights"}, "architecture");
    const auto type = field<std::string>(a, "type", "apd");
    const auto bins = field<std::size_t>(a, "bins", 0);
    const auto weights = field<std::vector<double>>(a, "weights", {});
    if (type == "apd") {
      if (bins > 1 || !weights.empty())
        throw InputError("architecture: an APD has a single bin and no weights");
      cfg.architecture = detector::Architecture::apd();
    } else if (type == "tmd") {
      if (!weights.empty()) {
        if (bins != 0 && bins != weights.size())
          throw InputError("architecture: bins does not match the number of weights");
        cfg.architecture = detector::Architecture::tmd(weights);
      } else {
        if (bins == 0) throw InputError("architecture: a TMD needs bins or weights");
        cfg.architecture = detector::Architecture::tmd(bins);
      }
    } else {
      throw InputError("architecture: unknown type '" + type + "'");
    }
  }
  return cfg;
}

// ---- run configuration --------------------------------------------------

std::vector<double> RunConfig::amplitudes() const {
  if (!ensemble.amplitudes.empty()) return ensemble.amplitudes;
  return probe::default_amplitude_grid(detector.truncation, ensemble.n_amplitudes);
}

void RunConfig::validate() const {
  detector.validate();
  if (ensemble.n_phases == 0) throw InputError("ensemble: n_phases must be at least 1");
  if (ensemble.amplitudes.empty() && ensemble.n_amplitudes == 0)
    throw InputError("ensemble: empty amplitude grid");
  for (double a : ensemble.amplitudes) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw InputError("ensemble: amplitudes must be >= 0");
    if (a * a > static_cast<double>(detector.truncation))
      throw PhysicsError("ensemble: |alpha|^2 = " + std::to_string(a * a) +
                         " exceeds the truncation d = " + std::to_string(detector.truncation));
  }
  if (reconstruction.dim == 0 || reconstruction.bands >= reconstruction.dim)
    throw InputError("reconstruction: need 0 <= bands < dim");
  if (!(reconstruction.gamma >= 0.0)) throw InputError("reconstruction: gamma must be >= 0");
  if (!(reconstruction.tolerance > 0.0)) throw InputError("reconstruction: tolerance must be > 0");
}

json to_json(const RunConfig& cfg) {
  json j;
  j["detector"] = to_json(cfg.detector);
  j["ensemble"] = {{"n_amplitudes", cfg.ensemble.n_amplitudes},
                   {"n_phases", cfg.ensemble.n_phases}};
  if (!cfg.ensemble.amplitudes.empty()) j["ensemble"]["amplitudes"] = cfg.ensemble.amplitudes;
  const auto& r = cfg.reconstruction;
  j["reconstruction"] = {{"dim", r.dim},
                         {"bands", r.bands},
                         {"gamma", r.gamma},
                         {"tolerance", r.tolerance},
                         {"max_iterations", r.max_iterations},
                         {"real_bands", r.real_bands},
                         {"psd_tolerance", r.psd_tolerance},
                         {"polish", r.polish}};
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  json outputs = json::object();
  if (cfg.stats_path) outputs["stats"] = *cfg.stats_path;
  if (cfg.povm_path) outputs["povm"] = *cfg.povm_path;
  j["outputs"] = outputs;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw InputError("configuration must be a JSON object");
  RunConfig cfg;
  if (!j.contains("detector")) {
    cfg.detector = detector_config_from_json(j);
  } else {
    check_keys(j, {"detector", "ensemble", "reconstruction", "trials", "seed", "outputs"},
               "run config");
    cfg.detector = detector_config_from_json(j.at("detector"));
  }
  cfg.reconstruction.dim = cfg.detector.truncation;
  cfg.reconstruction.bands = cfg.detector.bands;
  cfg.reconstruction.real_bands = cfg.detector.lo_phase == 0.0;
  if (j.contains("detector")) {
    if (j.contains("ensemble")) {
      const json& e = j.at("ensemble");
      check_keys(e, {"amplitudes", "n_amplitudes", "n_phases"}, "ensemble");
      cfg.ensemble.amplitudes = field(e, "amplitudes", cfg.ensemble.amplitudes);
      cfg.ensemble.n_amplitudes = field(e, "n_amplitudes", cfg.ensemble.n_amplitudes);
      cfg.ensemble.n_phases = field(e, "n_phases", cfg.ensemble.n_phases);
    }
    if (j.contains("reconstruction")) {
      const json& r = j.at("reconstruction");
      check_keys(r,
                 {"dim", "bands", "gamma", "tolerance", "max_iterations", "real_bands",
                  "psd_tolerance", "polish"},
                 "reconstruction");
      auto& o = cfg.reconstruction;
      o.dim = field(r, "dim", o.dim);
      o.bands = field(r, "bands", o.bands);
      o.gamma = field(r, "gamma", o.gamma);
      o.tolerance = field(r, "tolerance", o.tolerance);
      o.max_iterations = field(r, "max_iterations", o.max_iterations);
      o.real_bands = field(r, "real_bands", o.real_bands);
      o.psd_tolerance = field(r, "psd_tolerance", o.psd_tolerance);
      o.polish = field(r, "polish", o.polish);
    }
    cfg.trials = field(j, "trials", cfg.trials);
    if (j.contains("seed") && !j.at("seed").is_null())
      cfg.seed = field<std::uint64_t>(j, "seed", 0);
    if (j.contains("outputs")) {
      const json& o = j.at("outputs");
      check_keys(o, {"stats", "povm"}, "outputs");
      if (o.contains("stats")) cfg.stats_path = field<std::string>(o, "stats", "");
      if (o.contains("povm")) cfg.povm_path = field<std::string>(o, "povm", "");
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return run_config_from_json(load_json(path));
}

// ---- statistics CSV -----------------------------------------------------

std::string format_statistics(const probe::OutcomeStatistics& stats) {
  stats.validate();
  const bool exact = stats.mode == probe::OutcomeStatistics::Mode::kExact;
  std::string out = "amplitude,phase_rad,trials";
  for (std::size_t n = 0; n < stats.outcomes; ++n)
    out += (exact ? ",p" : ",c") + std::to_string(n);
  out += '\n';
  for (std::size_t i = 0; i < stats.settings.size(); ++i) {
    const auto& s = stats.settings[i];
    out += format_real(s.amplitude) + ',' + format_real(s.phase) + ',' +
           std::to_string(exact ? 0 : s.trials);
    for (double v : stats.table[i]) {
      out += ',';
      out += exact ? format_real(v) : std::to_string(static_cast<std::uint64_t>(v));
    }
    out += '\n';
  }
  return out;
}

probe::OutcomeStatistics parse_statistics(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  probe::OutcomeStatistics stats;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto cells = split(view, ',');
    if (!have_header) {
      if (cells.size() < 4 || cells[0] != "amplitude" || cells[1] != "phase_rad" ||
          cells[2] != "trials")
        throw InputError("statistics CSV: header must start with amplitude,phase_rad,trials");
      const char prefix = cells[3].empty() ? '\0' : cells[3][0];
      if (prefix != 'p' && prefix != 'c')
        throw InputError("statistics CSV: outcome columns must be p0.. or c0..");
      for (std::size_t n = 3; n < cells.size(); ++n)
        if (cells[n] != std::string(1, prefix) + std::to_string(n - 3))
          throw InputError("statistics CSV: unexpected column '" + std::string(cells[n]) + "'");
      stats.mode = prefix == 'p' ? probe::OutcomeStatistics::Mode::kExact
                                 : probe::OutcomeStatistics::Mode::kSampled;
      stats.outcomes = cells.size() - 3;
      have_header = true;
      continue;
    }
    if (cells.size() != stats.outcomes + 3)
      throw InputError("statistics CSV line " + std::to_string(line_no) + ": expected " +
                       std::to_string(stats.outcomes + 3) + " fields, found " +
                       std::to_string(cells.size()));
    probe::ProbeSetting s;
    s.amplitude = parse_real(cells[0], line_no);
    s.phase = parse_real(cells[1], line_no);
    s.trials = parse_count(cells[2], line_no);
    std::vector<double> row;
    row.reserve(stats.outcomes);
    for (std::size_t n = 0; n < stats.outcomes; ++n) {
      if (stats.mode == probe::OutcomeStatistics::Mode::kExact)
        row.push_back(parse_real(cells[n + 3], line_no));
      else
        row.push_back(static_cast<double>(parse_count(cells[n + 3], line_no)));
    }
    stats.settings.push_back(s);
    stats.table.push_back(std::move(row));
  }
  if (!have_header) throw InputError("statistics CSV: missing header");
  if (stats.settings.empty()) throw InputError("statistics CSV: no data rows");
  stats.validate();
  return stats;
}

void save_statistics(const std::string& path, const probe::OutcomeStatistics& stats) {
  write_atomic(path, format_statistics(stats));
}

probe::OutcomeStatistics load_statistics(const std::string& path) {
  try {
    return parse_statistics(read_file(path));
  } catch (const InputError& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

// ---- POVM JSON ----------------------------------------------------------

json to_json(const POVMSet& povm, std::optional<double> lo_phase) {
  json diagonals = json::array();
  for (const auto& e : povm.elements) {
    json bands = json::array();
    for (std::size_t l = 0; l <= e.bands(); ++l) {
      json band = json::array();
      for (const cdouble& v : e.diag(l)) band.push_back({v.real(), v.imag()});
      bands.push_back(std::move(band));
    }
    diagonals.push_back(std::move(bands));
  }
  return {{"dim", povm.dim()},
          {"outcomes", povm.outcomes()},
          {"bands", povm.bands()},
          {"lo_phase_convention", lo_phase ? json(*lo_phase) : json(nullptr)},
          {"diagonals", diagonals}};
}

POVMSet povm_from_json(const json& j) {
  check_keys(j, {"dim", "outcomes", "bands", "lo_phase_convention", "diagonals"}, "POVM");
  const auto dim = field<std::size_t>(j, "dim", 0);
  const auto outcomes = field<std::size_t>(j, "outcomes", 0);
  const auto bands = field<std::size_t>(j, "bands", 0);
  if (dim == 0 || outcomes == 0) throw InputError("POVM: dim and outcomes must be positive");
  if (bands >= dim) throw InputError("POVM: bands must be below dim");
  if (!j.contains("diagonals") || !j.at("diagonals").is_array() ||
      j.at("diagonals").size() != outcomes)
    throw InputError("POVM: diagonals must list one entry per outcome");
  POVMSet povm;
  for (std::size_t n = 0; n < outcomes; ++n) {
    const json& el = j.at("diagonals").at(n);
    if (!el.is_array() || el.size() != bands + 1)
      throw InputError("POVM: outcome " + std::to_string(n) + " must list bands + 1 diagonals");
    BandedOperator op(dim, bands);
    for (std::size_t l = 0; l <= bands; ++l) {
      const json& band = el.at(l);
      if (!band.is_array() || band.size() != dim - l)
        throw InputError("POVM: outcome " + std::to_string(n) + " diagonal " +
                         std::to_string(l) + " must hold dim - l entries");
      auto dst = op.diag(l);
      for (std::size_t i = 0; i < dim - l; ++i) {
        const json& pair = band.at(i);
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
          throw InputError("POVM: entries must be [re, im] pairs");
        dst[i] = {pair[0].get<double>(), l == 0 ? 0.0 : pair[1].get<double>()};
      }
    }
    povm.elements.push_back(std::move(op));
  }
  return povm;
}

void save_povm(const std::string& path, const POVMSet& povm, std::optional<double> lo_phase) {
  write_atomic(path, to_json(povm, lo_phase).dump() + "\n");
}

POVMSet load_povm(const std::string& path) {
  try {
    return povm_from_json(load_json(path));
  } catch (const InputError& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

// ---- reports ------------------------------------------------------------

json to_json(const recon::Diagnostics& diag) {
  json bands = json::array();
  json residuals = json::array();
  json conditions = json::array();
  json iterations = json::array();
  for (const auto& b : diag.bands) {
    bands.push_back({{"l", b.l},
                     {"misfit", b.misfit},
                     {"kkt_residual", b.kkt_residual},
                     {"condition_number", b.condition_number},
                     {"iterations", b.iterations},
                     {"unknowns", b.unknowns},
                     {"polished", b.polished}});
    residuals.push_back(b.kkt_residual);
    conditions.push_back(b.condition_number);
    iterations.push_back(b.iterations);
  }
  return {{"gamma", diag.gamma},
          {"clipped_mass", diag.clipped_mass},
          {"completeness_residual", diag.completeness_residual},
          {"min_eigenvalue", diag.min_eigenvalue},
          {"born_rms", diag.born_rms},
          {"repair_rounds", diag.repair_rounds},
          {"residuals", residuals},
          {"condition_numbers", conditions},
          {"solver_iterations", iterations},
          {"bands", bands}};
}

json to_json(const analysis::Report& report) {
  json j;
  j["fidelities"] = report.fidelities;
  j["completeness_residual"] = report.completeness_residual;
  if (report.dip) {
    const auto& d = *report.dip;
    j["dip"] = {{"displacement", d.displacement},
                {"location", {d.location.real(), d.location.imag()}},
                {"error_bar", d.error_bar},
                {"value", d.value},
                {"on_boundary", d.on_boundary}};
  }
  if (report.wigner_min) j["wigner_min"] = *report.wigner_min;
  if (report.distance) j["distance"] = *report.distance;
  if (report.overlap) j["overlap"] = *report.overlap;
  return j;
}

json to_json(const detector::TruncationEstimate& est) {
  return {{"lossless", est.lossless},
          {"with_loss", est.with_loss},
          {"with_interference", est.with_interference},
          {"dimension", est.dimension()}};
}

std::string format_wigner(const fock::WignerGrid& grid) {
  std::string out = "x,p,W\n";
  for (Eigen::Index r = 0; r < grid.values.rows(); ++r)
    for (Eigen::Index c = 0; c < grid.values.cols(); ++c)
      out += format_real(grid.x.value(static_cast<std::size_t>(c))) + ',' +
             format_real(grid.p.value(static_cast<std::size_t>(r))) + ',' +
             format_real(grid.values(r, c)) + '\n';
  return out;
}

}  // namespace qdt::io
