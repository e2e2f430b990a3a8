#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rfpi/config.hpp"

namespace rfpi {

inline constexpr const char* kVersion = "0.1.0";

/// One asserted (or reported) property of a run.
struct Property {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // "<=", ">=", "<", "==", or "" for report-only
  bool asserted = true;
  bool pass = true;
};

struct ScenarioResult {
  std::string scenario;
  Json resolved;                   // config with every default filled in
  Json summary = Json::object();   // scenario-specific numbers
  std::vector<Property> properties;
  bool valid = true;               // boundary-mass and reference checks
  double boundary_mass = 0.0;
  std::vector<std::string> validity_notes;
  std::vector<std::string> warnings;
  std::vector<std::string> files;
  double wall_clock_seconds = 0.0;

  bool properties_pass() const;
  /// 0: valid and every asserted property passes; 2 otherwise.
  int exit_code() const { return valid && properties_pass() ? 0 : 2; }
};

/// Runs the scenario named by the config's "scenario" key (or `forced` when
/// non-empty) and writes its outputs plus manifest.json into out_dir.
ScenarioResult run_scenario(const Json& config, const std::filesystem::path& out_dir,
                            const std::string& forced = "");

ScenarioResult run_corridor(const Json& config, const std::filesystem::path& out_dir);
ScenarioResult run_multislit(const Json& config, const std::filesystem::path& out_dir);
ScenarioResult run_zeno(const Json& config, const std::filesystem::path& out_dir);
ScenarioResult run_aharonov_bohm(const Json& config, const std::filesystem::path& out_dir);
ScenarioResult run_convergence(const Json& config, const std::filesystem::path& out_dir);
ScenarioResult run_oracle_compare(const Json& config, const std::filesystem::path& out_dir);
ScenarioResult run_verify_weights(const Json& config, const std::filesystem::path& out_dir);

/// 17 significant digits.
std::string format_double(double v);

/// Shift s (in samples) maximizing sum_i a[i] b[i - s] over integer lags,
/// refined by a 3-point parabola through the peak. Positive s: b lags a.
double cross_correlation_shift(const std::vector<double>& a, const std::vector<double>& b);

/// (I_max - I_min) / (I_max + I_min) over the samples whose coordinate lies
/// in [center - half_width, center + half_width].
double fringe_visibility(const std::vector<double>& coords, const std::vector<double>& intensity, double center,
                         double half_width);

}  // namespace rfpi
