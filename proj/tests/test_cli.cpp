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

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "qdt/io.hpp"

namespace fs = std::filesystem;
using namespace qdt;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

Run qdt_run(const std::string& args) {
  const std::string cmd = std::string("\"") + QDT_CLI_PATH + "\" " + args + " 2>&1";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe)) r.output += buf.data();
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("qdt_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(path(name)) << content;
    return path(name);
  }
};

const char* kSmallConfig = R"({
  "detector": {"transmissivity": 0.655, "mode_overlap": 0.99, "efficiency": 0.39,
               "lo_mean_photons": 0.8, "truncation": 12, "bands": 3},
  "ensemble": {"n_amplitudes": 12, "n_phases": 8},
  "reconstruction": {"gamma": 0.01},
  "seed": 17
})";

std::string first_line_with(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(key, 0) == 0) return line;
  return {};
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(qdt_run("--help").code == 0);
  CHECK(qdt_run("simulate --help").code == 0);
  CHECK(qdt_run("").code == 1);
  CHECK(qdt_run("frobnicate").code == 1);
  CHECK(qdt_run("reconstruct --stats").code == 1);
}

TEST_CASE("missing input files are named in the error") {
  const Run r = qdt_run("simulate /nonexistent/config.json --exact --out /tmp/x.csv");
  CHECK(r.code == 1);
  CHECK(r.output.find("/nonexistent/config.json") != std::string::npos);
}

TEST_CASE("simulate defaults and modes") {
  Workspace w;
  const std::string cfg = w.write("c.json", kSmallConfig);
  const Run r = qdt_run("simulate " + cfg + " --out " + w.path("s.csv"));
  REQUIRE(r.code == 0);
  CHECK(r.output.find("mode sampled") != std::string::npos);
  const auto stats = io::load_statistics(w.path("s.csv"));
  CHECK(stats.settings.size() == 96);
  CHECK(stats.settings[0].trials == 128376);

  CHECK(qdt_run("simulate " + cfg + " --exact --out " + w.path("e.csv")).code == 0);
  CHECK(io::load_statistics(w.path("e.csv")).settings[5].trials == 0);

  const std::string noseed = w.write("n.json", R"({"truncation": 12})");
  CHECK(qdt_run("simulate " + noseed + " --out " + w.path("n.csv")).code == 1);
  CHECK(qdt_run("simulate " + noseed + " --trials 10 --seed 1 --out " + w.path("n.csv")).code ==
        0);
}

TEST_CASE("physics violations exit with 3") {
  Workspace w;
  const std::string cfg =
      w.write("big.json", R"({"detector": {"truncation": 12}, "ensemble": {"amplitudes": [0, 5]},
                              "seed": 1})");
  const Run r = qdt_run("simulate " + cfg + " --exact --out " + w.path("s.csv"));
  CHECK(r.code == 3);
  const std::string bad = w.write("t.json", R"({"transmissivity": 1.5})");
  CHECK(qdt_run("theory " + bad + " --out " + w.path("p.json")).code == 3);
}

TEST_CASE("reconstruct exit codes and messages") {
  Workspace w;
  const std::string cfg = w.write("c.json", kSmallConfig);
  REQUIRE(qdt_run("simulate " + cfg + " --exact --out " + w.path("s.csv")).code == 0);

  const Run alias =
      qdt_run("reconstruct --stats " + w.path("s.csv") + " --d 12 --bands 4 --out " +
              w.path("p.json"));
  CHECK(alias.code == 1);
  CHECK(alias.output.find("aliasing") != std::string::npos);

  const Run budget = qdt_run("reconstruct --stats " + w.path("s.csv") +
                             " --d 12 --bands 2 --max-iterations 1 --tolerance 1e-300 --out " +
                             w.path("p.json"));
  CHECK(budget.code == 2);

  const Run small_d =
      qdt_run("reconstruct --stats " + w.path("s.csv") + " --d 4 --bands 2 --out " +
              w.path("p.json"));
  CHECK(small_d.code == 3);

  w.write("g.csv", "amplitude,phase_rad,trials,p0,p1\n0,0,0,zero,1\n");
  const Run garbage =
      qdt_run("reconstruct --stats " + w.path("g.csv") + " --d 12 --bands 2 --out " +
              w.path("p.json"));
  CHECK(garbage.code == 1);
  CHECK(garbage.output.find("line 2") != std::string::npos);
}

TEST_CASE("full pipeline through files") {
  Workspace w;
  const std::string cfg = w.write("c.json", kSmallConfig);
  REQUIRE(qdt_run("simulate " + cfg + " --exact --out " + w.path("s.csv")).code == 0);
  const Run rec = qdt_run("reconstruct --stats " + w.path("s.csv") +
                          " --d 12 --bands 3 --gamma 0.01 --out " + w.path("p.json"));
  REQUIRE(rec.code == 0);
  CHECK(rec.output.find("band 3") != std::string::npos);
  CHECK(fs::exists(w.path("p.diagnostics.json")));
  const auto diag = io::load_json(w.path("p.diagnostics.json"));
  CHECK(diag.at("bands").size() == 4);
  CHECK(diag.at("completeness_residual").get<double>() < 1e-6);

  REQUIRE(qdt_run("theory " + cfg + " --bands 11 --out " + w.path("t.json")).code == 0);
  const Run an = qdt_run("analyze --povm " + w.path("p.json") + " --reference " +
                         w.path("t.json") + " --outcome 0 --out " + w.path("r.json"));
  REQUIRE(an.code == 0);
  const std::string fid = first_line_with(an.output, "fidelity 0");
  REQUIRE(!fid.empty());
  CHECK(std::stod(fid.substr(11)) > 0.99);
  CHECK(!first_line_with(an.output, "dip").empty());
  CHECK(io::load_json(w.path("r.json")).contains("fidelities"));

  const Run self =
      qdt_run("analyze --povm " + w.path("p.json") + " --reference " + w.path("p.json") +
              " --no-wigner");
  REQUIRE(self.code == 0);
  CHECK(first_line_with(self.output, "fidelity 0") == "fidelity 0 1.0000000000");
  CHECK(first_line_with(self.output, "fidelity 1") == "fidelity 1 1.0000000000");
}

TEST_CASE("wigner of a single-photon projector") {
  Workspace w;
  POVMSet p;
  const auto one = BandedOperator::fock_projector(1, 6, 1);
  p.elements = {one, BandedOperator::identity(6, 1) - one};
  io::save_povm(w.path("p.json"), p, 0.0);
  REQUIRE(qdt_run("wigner --povm " + w.path("p.json") +
                  " --outcome 0 --xmin -1 --xmax 1 --pmin -1 --pmax 1 --step 0.5 --out " +
                  w.path("w.csv"))
              .code == 0);
  std::ifstream in(w.path("w.csv"));
  std::string line;
  bool found = false;
  while (std::getline(in, line)) {
    if (line.rfind("0,0,", 0) == 0) {
      found = true;
      CHECK(std::stod(line.substr(4)) == doctest::Approx(-2 / std::numbers::pi).epsilon(1e-12));
    }
  }
  CHECK(found);
  CHECK(qdt_run("wigner --povm " + w.path("p.json") + " --outcome 5 --out " + w.path("x.csv"))
            .code == 1);
}

TEST_CASE("estimate-dim prints the three stages") {
  const Run r = qdt_run(std::string("estimate-dim ") + QDT_CONFIG_DIR + "/tmd8_full.json");
  REQUIRE(r.code == 0);
  CHECK(!first_line_with(r.output, "stage1_lossless").empty());
  CHECK(!first_line_with(r.output, "stage2_with_loss").empty());
  CHECK(!first_line_with(r.output, "stage3_with_interference").empty());
  CHECK(qdt_run(std::string("estimate-dim ") + QDT_CONFIG_DIR + "/apd_strong_lo.json").code == 1);
}
