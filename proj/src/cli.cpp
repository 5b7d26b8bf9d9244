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

#include "qdt/cli.hpp"

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qdt/analysis.hpp"
#include "qdt/detector.hpp"
#include "qdt/errors.hpp"
#include "qdt/fock.hpp"
#include "qdt/io.hpp"
#include "qdt/probe.hpp"
#include "qdt/reconstruction.hpp"

namespace qdt::cli {

namespace {

constexpr int kExitInput = 1;
constexpr int kExitSolver = 2;
constexpr int kExitPhysics = 3;

std::string sidecar_path(const std::string& out) {
  const std::string ext = ".json";
  if (out.size() > ext.size() && out.compare(out.size() - ext.size(), ext.size(), ext) == 0)
    return out.substr(0, out.size() - ext.size()) + ".diagnostics.json";
  return out + ".diagnostics.json";
}

struct SimulateArgs {
  std::string config;
  bool exact = false;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  io::RunConfig cfg = io::load_run_config(a.config);
  cfg.validate();
  const std::uint64_t trials = a.exact ? 0 : a.trials.value_or(cfg.trials);
  const auto seed = a.seed ? a.seed : cfg.seed;
  if (trials > 0 && !seed)
    throw InputError("sampled mode needs --seed (or use --exact)");
  const auto amps = cfg.amplitudes();
  const auto ensemble = probe::generate_ensemble(amps, cfg.ensemble.n_phases);
  const auto stats = probe::simulate_statistics(cfg.detector, ensemble.settings, trials, seed);
  const std::string out = a.out.empty() ? cfg.stats_path.value_or("") : a.out;
  if (out.empty()) throw InputError("no output path: pass --out");
  io::save_statistics(out, stats);
  std::cout << "settings " << stats.settings.size() << " mode "
            << (trials == 0 ? "exact" : "sampled") << " outcomes " << stats.outcomes;
  if (trials > 0) std::cout << " trials " << trials << " seed " << *seed;
  if (ensemble.degenerate_amplitudes > 0)
    std::cout << " degenerate_amplitudes " << ensemble.degenerate_amplitudes;
  std::cout << "\n";
  return 0;
}

struct ReconstructArgs {
  std::string stats;
  std::size_t dim = 40;
  std::size_t bands = 6;
  double gamma = 1e-2;
  double tolerance = 1e-9;
  std::size_t max_iterations = 40000;
  bool complex_bands = false;
  std::string out;
  std::string diagnostics;
};

int cmd_reconstruct(const ReconstructArgs& a) {
  const auto stats = io::load_statistics(a.stats);
  recon::ReconstructionOptions opts;
  opts.dim = a.dim;
  opts.bands = a.bands;
  opts.gamma = a.gamma;
  opts.tolerance = a.tolerance;
  opts.max_iterations = a.max_iterations;
  opts.real_bands = !a.complex_bands;
  const auto result = recon::reconstruct(stats, opts);
  for (const auto& b : result.diagnostics.bands)
    std::printf("band %zu misfit %.3e kkt %.3e cond %.3e iterations %zu\n", b.l, b.misfit,
                b.kkt_residual, b.condition_number, b.iterations);
  std::printf("completeness %.3e min_eigenvalue %.3e clipped %.3e born_rms %.3e\n",
              result.diagnostics.completeness_residual, result.diagnostics.min_eigenvalue,
              result.diagnostics.clipped_mass, result.diagnostics.born_rms);
  io::save_povm(a.out, result.povm,
                opts.real_bands ? std::optional<double>(0.0) : std::nullopt);
  io::save_json(a.diagnostics.empty() ? sidecar_path(a.out) : a.diagnostics,
                io::to_json(result.diagnostics));
  return 0;
}

struct TheoryArgs {
  std::string config;
  std::optional<std::size_t> dim;
  std::optional<std::size_t> bands;
  std::string out;
};

int cmd_theory(const TheoryArgs& a) {
  io::RunConfig cfg = io::load_run_config(a.config);
  if (a.dim) cfg.detector.truncation = *a.dim;
  if (a.bands) cfg.detector.bands = *a.bands;
  cfg.detector.validate();
  const auto beams = detector::effective_beams(cfg.detector);
  const auto povm = detector::theory_povm(cfg.detector);
  const bool real = cfg.detector.lo_phase == 0.0;
  io::save_povm(a.out, povm, real ? std::optional<double>(0.0) : std::nullopt);
  std::printf("outcomes %zu dim %zu bands %zu displacement %.6f background %.6f\n",
              povm.outcomes(), povm.dim(), povm.bands(), std::abs(beams.displacement),
              beams.background);
  return 0;
}

struct AnalyzeArgs {
  std::string povm;
  std::string reference;
  std::optional<std::size_t> outcome;
  double range = 3.0;
  double step = 0.05;
  bool no_wigner = false;
  std::optional<double> overlap_displacement;
  double loss = 0.843;
  std::size_t fock = 1;
  std::string out;
};

int cmd_analyze(const AnalyzeArgs& a) {
  const POVMSet povm = io::load_povm(a.povm);
  analysis::Report report;
  report.completeness_residual = analysis::completeness_residual(povm);
  std::printf("completeness_residual %.6e\n", report.completeness_residual);
  if (!a.reference.empty()) {
    const POVMSet ref = io::load_povm(a.reference);
    if (ref.outcomes() != povm.outcomes() || ref.dim() != povm.dim())
      throw InputError("reference POVM has a different shape");
    for (std::size_t n = 0; n < povm.outcomes(); ++n) {
      report.fidelities.push_back(analysis::fidelity(povm.elements[n], ref.elements[n]));
      std::printf("fidelity %zu %.10f\n", n, report.fidelities.back());
    }
    report.distance = analysis::povm_distance(ref, povm);
    std::printf("distance %.6e\n", *report.distance);
  }
  const std::size_t outcome = a.outcome.value_or(povm.outcomes() > 1 ? 1 : 0);
  if (outcome >= povm.outcomes()) throw InputError("--outcome is out of range");
  if (!a.no_wigner) {
    if (!(a.range > 0.0) || !(a.step > 0.0)) throw InputError("--range and --step must be > 0");
    fock::GridSpec spec{{-a.range, a.range, a.step}, {-a.range, a.range, a.step}};
    const auto grid = fock::wigner(povm.elements[outcome], spec);
    report.dip = analysis::wigner_dip(grid);
    report.wigner_min = analysis::wigner_min(grid);
    std::printf("dip %.6f +- %.6f%s\nwigner_min %.6e\n", report.dip->displacement,
                report.dip->error_bar, report.dip->on_boundary ? " (on boundary, unreliable)" : "",
                *report.wigner_min);
  }
  if (a.overlap_displacement) {
    report.overlap = analysis::displaced_lossy_fock_overlap(
        povm.elements[outcome], *a.overlap_displacement, a.loss, a.fock);
    std::printf("overlap %.6f\n", *report.overlap);
  }
  if (!a.out.empty()) io::save_json(a.out, io::to_json(report));
  return 0;
}

struct WignerArgs {
  std::string povm;
  std::size_t outcome = 0;
  double xmin = -3.0, xmax = 3.0, pmin = -3.0, pmax = 3.0, step = 0.05;
  std::string tail = "auto";
  std::string out;
};

int cmd_wigner(const WignerArgs& a) {
  const POVMSet povm = io::load_povm(a.povm);
  if (a.outcome >= povm.outcomes()) throw InputError("--outcome is out of range");
  fock::TailMode tail = fock::TailMode::kAuto;
  if (a.tail == "truncate") tail = fock::TailMode::kTruncate;
  else if (a.tail == "complement") tail = fock::TailMode::kComplement;
  else if (a.tail != "auto") throw InputError("--tail must be auto, truncate or complement");
  const fock::GridSpec spec{{a.xmin, a.xmax, a.step}, {a.pmin, a.pmax, a.step}};
  const auto grid = fock::wigner(povm.elements[a.outcome], spec, tail);
  io::write_atomic(a.out, io::format_wigner(grid));
  std::printf("points %zu min %.6e\n", static_cast<std::size_t>(grid.values.size()),
              analysis::wigner_min(grid));
  return 0;
}

struct EstimateArgs {
  std::string config;
  double probability = 0.99;
  std::string out;
};

int cmd_estimate_dim(const EstimateArgs& a) {
  const io::RunConfig cfg = io::load_run_config(a.config);
  cfg.detector.validate();
  const auto est = detector::estimate_truncation(cfg.detector, a.probability);
  std::printf("stage1_lossless %zu\nstage2_with_loss %zu\nstage3_with_interference %zu\n",
              est.lossless, est.with_loss, est.with_interference);
  if (!a.out.empty()) io::save_json(a.out, io::to_json(est));
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Detector tomography for weak-homodyne detectors"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate coherent-probe statistics");
  s->add_option("config", sim.config, "Run or detector configuration (JSON)")->required();
  auto* exact = s->add_flag("--exact", sim.exact, "Exact (infinite-trial) probabilities");
  s->add_option("--trials", sim.trials, "Pulses per setting")->excludes(exact);
  s->add_option("--seed", sim.seed, "Seed for sampled mode")->excludes(exact);
  s->add_option("--out", sim.out, "Statistics CSV");

  ReconstructArgs rec;
  auto* r = app.add_subcommand("reconstruct", "Reconstruct a POVM from statistics");
  r->add_option("--stats", rec.stats, "Statistics CSV")->required();
  r->add_option("--d", rec.dim, "Fock truncation")->capture_default_str();
  r->add_option("--bands", rec.bands, "Leading off-diagonals")->capture_default_str();
  r->add_option("--gamma", rec.gamma, "Smoothing weight")->capture_default_str();
  r->add_option("--tolerance", rec.tolerance, "KKT tolerance")->capture_default_str();
  r->add_option("--max-iterations", rec.max_iterations, "Solver budget")->capture_default_str();
  r->add_flag("--complex", rec.complex_bands, "Allow complex off-diagonals");
  r->add_option("--out", rec.out, "POVM JSON")->required();
  r->add_option("--diagnostics", rec.diagnostics, "Diagnostics JSON (default: sidecar)");

  TheoryArgs th;
  auto* t = app.add_subcommand("theory", "Write the model POVM of a detector");
  t->add_option("config", th.config, "Run or detector configuration (JSON)")->required();
  t->add_option("--d", th.dim, "Override the truncation");
  t->add_option("--bands", th.bands, "Override the stored bands");
  t->add_option("--out", th.out, "POVM JSON")->required();

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "Figures of merit of a POVM");
  a->add_option("--povm", an.povm, "POVM JSON")->required();
  a->add_option("--reference", an.reference, "Reference POVM for fidelity and distance");
  a->add_option("--outcome", an.outcome, "Element for the Wigner and overlap checks");
  a->add_option("--range", an.range, "Half-width of the phase-space grid")->capture_default_str();
  a->add_option("--step", an.step, "Grid step")->capture_default_str();
  a->add_flag("--no-wigner", an.no_wigner, "Skip the Wigner dip and minimum");
  a->add_option("--overlap-displacement", an.overlap_displacement,
                "Overlap with a displaced lossy Fock operator at this displacement");
  a->add_option("--loss", an.loss, "Loss of the overlap reference")->capture_default_str();
  a->add_option("--fock", an.fock, "Photon number of the overlap reference")->capture_default_str();
  a->add_option("--out", an.out, "Report JSON");

  WignerArgs wg;
  auto* w = app.add_subcommand("wigner", "Sample the Wigner function of one POVM element");
  w->add_option("--povm", wg.povm, "POVM JSON")->required();
  w->add_option("--outcome", wg.outcome, "Outcome index")->capture_default_str();
  w->add_option("--xmin", wg.xmin)->capture_default_str();
  w->add_option("--xmax", wg.xmax)->capture_default_str();
  w->add_option("--pmin", wg.pmin)->capture_default_str();
  w->add_option("--pmax", wg.pmax)->capture_default_str();
  w->add_option("--step", wg.step)->capture_default_str();
  w->add_option("--tail", wg.tail, "auto, truncate or complement")->capture_default_str();
  w->add_option("--out", wg.out, "Grid CSV")->required();

  EstimateArgs es;
  auto* e = app.add_subcommand("estimate-dim", "Estimate the Fock truncation a detector needs");
  e->add_option("config", es.config, "Run or detector configuration (JSON)")->required();
  e->add_option("--probability", es.probability, "Saturation probability")->capture_default_str();
  e->add_option("--out", es.out, "Estimate JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (s->parsed()) return cmd_simulate(sim);
    if (r->parsed()) return cmd_reconstruct(rec);
    if (t->parsed()) return cmd_theory(th);
    if (a->parsed()) return cmd_analyze(an);
    if (w->parsed()) return cmd_wigner(wg);
    if (e->parsed()) return cmd_estimate_dim(es);
  } catch (const SolverError& err) {
    std::cerr << "solver error: " << err.what() << " (residual " << err.residual() << ")\n";
    return kExitSolver;
  } catch (const PhysicsError& err) {
    std::cerr << "physics error: " << err.what() << "\n";
    return kExitPhysics;
  } catch (const OverflowError& err) {
    std::cerr << "overflow: " << err.what() << "\n";
    return kExitPhysics;
  } catch (const InputError& err) {
    std::cerr << "input error: " << err.what() << "\n";
    return kExitInput;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace qdt::cli
