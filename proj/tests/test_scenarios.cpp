#include <doctest.h>

#include <sys/wait.h>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rfpi/scenarios.hpp"

using namespace rfpi;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rfpi_test_scenarios") / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || !(std::isdigit(line[0]) || line[0] == '-')) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

int cli(const std::string& args) {
  const std::string cmd = std::string(RFPI_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

Json corridor_config() {
  return Json::parse(R"({
    "scenario": "corridor",
    "grid": {"dim": 1, "lo_length": [-20], "hi_length": [20], "points": [256]},
    "initial_state": {"packets": [{"center_length": [0.0], "momentum_hbar_per_length": [1.0]}]},
    "weight": {"kind": "corridor", "delta_length": 2.0,
               "trajectories": [{"kind": "linear", "velocity_length_per_time": [1.0]}]},
    "time": {"t_final_time": 1.0, "dt_time": 0.01},
    "corridor": {"product_nu": 16}
  })");
}

const Property* find(const ScenarioResult& r, const std::string& name) {
  for (const auto& p : r.properties)
    if (p.name == name) return &p;
  return nullptr;
}

}  // namespace

TEST_CASE("cross_correlation_shift recovers a sub-sample lag") {
  const int n = 200;
  const double lag = 3.4;
  std::vector<double> a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a[i] = std::exp(-std::pow((i - 100.0) / 12.0, 2));
    b[i] = std::exp(-std::pow((i - 100.0 - lag) / 12.0, 2));
  }
  CHECK(cross_correlation_shift(a, b) == doctest::Approx(lag).epsilon(0.02));
  CHECK(cross_correlation_shift(b, a) == doctest::Approx(-lag).epsilon(0.02));
  CHECK(std::abs(cross_correlation_shift(a, a)) < 1e-12);
  CHECK_THROWS_AS(cross_correlation_shift(a, std::vector<double>(n - 1)), Error);
}

TEST_CASE("fringe_visibility of a cosine profile") {
  std::vector<double> x, intensity;
  for (int i = 0; i <= 400; ++i) {
    x.push_back(-10.0 + 0.05 * i);
    intensity.push_back(1.0 + 0.5 * std::cos(2.0 * x.back()));
  }
  CHECK(fringe_visibility(x, intensity, 0.0, 4.0) == doctest::Approx(0.5).epsilon(1e-3));
  // window too narrow to reach a minimum
  CHECK(fringe_visibility(x, intensity, 0.0, 0.1) < 0.01);
  CHECK_THROWS_AS(fringe_visibility(x, intensity, 50.0, 1.0), Error);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("config errors") {
  const fs::path out = scratch("errors");
  Json c = corridor_config();
  c["scenario"] = "tunnelling";
  CHECK_THROWS_AS(run_scenario(c, out), ConfigError);

  c = corridor_config();
  c["corridor"]["nu"] = 4;
  CHECK_THROWS_AS(run_scenario(c, out), ConfigError);

  c = corridor_config();
  c["grid"]["points"] = Json::array({0});
  CHECK_THROWS_AS(run_scenario(c, out), Error);

  c = corridor_config();
  apply_override(c, "corridor.product_nu=8");
  CHECK(c["corridor"]["product_nu"] == 8);
}

TEST_CASE("corridor with zero weight keeps the norm and writes a manifest") {
  const fs::path out = scratch("corridor_zero");
  Json c = corridor_config();
  c["weight"] = Json::parse(R"({"kind": "zero"})");
  const ScenarioResult r = run_scenario(c, out);
  CHECK(r.valid);
  CHECK(r.exit_code() == 0);
  CHECK(fs::exists(out / "manifest.json"));
  const auto rows = read_csv(out / "timeseries.csv");
  REQUIRE(rows.size() > 10);
  for (const auto& row : rows) CHECK(row[1] == doctest::Approx(1.0).epsilon(1e-12));
  std::ifstream in(out / "manifest.json");
  const Json m = Json::parse(in);
  CHECK(m["scenario"] == "corridor");
  CHECK(m.contains("config"));
}

TEST_CASE("corridor weight contracts") {
  const fs::path out = scratch("corridor");
  const ScenarioResult r = run_scenario(corridor_config(), out);
  CHECK(r.exit_code() == 0);
  const Property* p = find(r, "contraction_max_step_ratio");
  REQUIRE(p);
  CHECK(p->value <= 1.0 + 1e-10);
  const auto rows = read_csv(out / "timeseries.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][1] <= rows[i - 1][1] * (1.0 + 1e-10));
}

TEST_CASE("packet at the box edge marks the run invalid") {
  const fs::path out = scratch("invalid");
  Json c = corridor_config();
  c["initial_state"]["packets"][0]["center_length"] = Json::array({17.0});
  const ScenarioResult r = run_scenario(c, out);
  CHECK_FALSE(r.valid);
  CHECK(r.exit_code() == 2);
  CHECK(first_line(out / "timeseries.csv").rfind("# INVALID:", 0) == 0);
}

TEST_CASE("scenario preconditions") {
  const fs::path out = scratch("pre");
  Json z = Json::parse(R"({
    "scenario": "zeno",
    "grid": {"dim": 2, "lo_length": [-10, -10], "hi_length": [10, 10], "points": [32, 32]},
    "initial_state": {"packets": [{"center_length": [5.0, 5.0], "width_length": 0.5}]},
    "weight": {"kind": "ball", "centers_length": [[0.0, 0.0]], "radii_length": [1.0]},
    "time": {"t_final_time": 0.1, "dt_time": 0.01}
  })");
  CHECK_THROWS_AS(run_scenario(z, out), Error);

  Json m = Json::parse(R"({
    "scenario": "multislit",
    "grid": {"dim": 2, "lo_length": [-10, -10], "hi_length": [10, 10], "points": [32, 32]},
    "initial_state": {"packets": [{"center_length": [0.0, -1.0]}]},
    "weight": {"kind": "multislit", "hole_centers_length": [[0.0]]},
    "time": {"t_final_time": 0.1, "dt_time": 0.01},
    "multislit": {"screen_position_length": 3.0}
  })");
  CHECK_THROWS_AS(run_scenario(m, out), Error);
}

TEST_CASE("cli exit codes") {
  const fs::path dir = scratch("cli");
  write(dir / "broken.json", "{\"scenario\": \"corridor\",");
  CHECK(cli("run --config " + (dir / "broken.json").string() + " --out " + (dir / "a").string()) == 1);

  Json c = corridor_config();
  c["colour"] = "blue";
  write(dir / "unknown.json", c.dump());
  CHECK(cli("run --config " + (dir / "unknown.json").string() + " --out " + (dir / "b").string()) == 1);

  CHECK(cli("run --out " + (dir / "c").string()) != 0);

  Json conv = corridor_config();
  conv.erase("corridor");
  conv["weight"] = Json::parse(R"({"kind": "zero"})");
  conv["convergence"] = Json::parse(R"({"nus": [4, 8, 16], "saturation_floor": 1e-7})");
  write(dir / "conv.json", conv.dump());
  CHECK(cli("converge --config " + (dir / "conv.json").string() + " --out " + (dir / "d").string()) == 0);
  CHECK(fs::exists(dir / "d" / "manifest.json"));

  Json vw = corridor_config();
  vw.erase("corridor");
  write(dir / "vw.json", vw.dump());
  CHECK(cli("verify-weights --config " + (dir / "vw.json").string() + " --out " + (dir / "e").string()) == 0);

  Json bad = corridor_config();
  bad["initial_state"]["packets"][0]["center_length"] = Json::array({17.0});
  write(dir / "bad.json", bad.dump());
  CHECK(cli("run --config " + (dir / "bad.json").string() + " --out " + (dir / "f").string()) == 2);
}

TEST_CASE("shipped configs parse") {
  for (const auto& entry : fs::directory_iterator(RFPI_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    const Json c = load_config(entry.path().string());
    CHECK(c.contains("scenario"));
  }
}

TEST_CASE("convergence and oracle_compare example configs pass") {
  for (const char* name : {"convergence", "oracle_compare", "verify_weights", "corridor"}) {
    CAPTURE(name);
    const fs::path out = scratch(std::string("cfg_") + name);
    const ScenarioResult r = run_scenario(load_config(std::string(RFPI_CONFIG_DIR) + "/" + name + ".json"), out);
    CHECK(r.exit_code() == 0);
  }
}
