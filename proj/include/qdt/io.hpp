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
// File formats: JSON for configurations and operators, CSV for tables.
// Every writer goes through write_atomic, so a reader never observes a
// partially written file.
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qdt/analysis.hpp"
#include "qdt/banded_operator.hpp"
#include "qdt/detector.hpp"
#include "qdt/fock.hpp"
#include "qdt/probe.hpp"
#include "qdt/reconstruction.hpp"

namespace qdt::io {

using nlohmann::json;

struct EnsembleSpec {
  /// Explicit |alpha| values; empty means the default grid for the truncation.
  std::vector<double> amplitudes;
  std::size_t n_amplitudes = probe::kDefaultAmplitudes;
  std::size_t n_phases = probe::kDefaultPhases;
};

struct RunConfig {
  detector::DetectorConfig detector;
  EnsembleSpec ensemble;
  recon::ReconstructionOptions reconstruction;
  std::uint64_t trials = probe::kDefaultTrials;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> stats_path;
  std::optional<std::string> povm_path;

  /// The amplitudes the ensemble resolves to.
  std::vector<double> amplitudes() const;
  /// Runs every embedded validation. Throws PhysicsError or InputError.
  void validate() const;
};

std::string read_file(const std::string& path);
/// Writes to a temporary sibling and renames it over `path`.
void write_atomic(const std::string& path, const std::string& content);

json to_json(const detector::DetectorConfig& cfg);
detector::DetectorConfig detector_config_from_json(const json& j);

json to_json(const RunConfig& cfg);
/// Accepts a full run configuration or a bare detector configuration.
RunConfig run_config_from_json(const json& j);
RunConfig load_run_config(const std::string& path);

/// Reals are written with 17 significant digits.
std::string format_statistics(const probe::OutcomeStatistics& stats);
probe::OutcomeStatistics parse_statistics(const std::string& text);
void save_statistics(const std::string& path, const probe::OutcomeStatistics& stats);
probe::OutcomeStatistics load_statistics(const std::string& path);

/// `lo_phase` is recorded when the stored bands are real in the frame of
/// an LO at that phase; complex POVMs carry null.
json to_json(const POVMSet& povm, std::optional<double> lo_phase);
POVMSet povm_from_json(const json& j);
void save_povm(const std::string& path, const POVMSet& povm, std::optional<double> lo_phase);
POVMSet load_povm(const std::string& path);

json to_json(const recon::Diagnostics& diag);
json to_json(const analysis::Report& report);
json to_json(const detector::TruncationEstimate& est);

/// Long format: one `x,p,W` row per sample, x varying fastest.
std::string format_wigner(const fock::WignerGrid& grid);

/// JSON with two-space indentation and a trailing newline.
void save_json(const std::string& path, const json& j);
json load_json(const std::string& path);

}  // namespace qdt::io
