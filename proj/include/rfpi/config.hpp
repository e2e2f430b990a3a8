#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfpi/path_oracle.hpp"
#include "rfpi/product_formula.hpp"
#include "rfpi/propagator.hpp"
#include "rfpi/weights.hpp"

namespace rfpi {

using Json = nlohmann::json;

/// Invalid configuration: unknown key, wrong type, or value out of range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Strict reader over one JSON object. Every accessor records the value it
/// used (defaults included) into a resolved tree; finish() rejects keys that
/// were never read.
class Section {
 public:
  Section(const Json& node, Json& resolved, std::string path);

  bool has(const std::string& key) const;
  double number(const std::string& key, std::optional<double> fallback = std::nullopt);
  int integer(const std::string& key, std::optional<int> fallback = std::nullopt);
  bool boolean(const std::string& key, std::optional<bool> fallback = std::nullopt);
  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt);
  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt);
  std::vector<std::string> texts(const std::string& key,
                                 std::optional<std::vector<std::string>> fallback = std::nullopt);
  std::vector<int> integers(const std::string& key, std::optional<std::vector<int>> fallback = std::nullopt);
  Point point(const std::string& key, int dim, std::optional<Point> fallback = std::nullopt);
  std::vector<Point> points(const std::string& key, int dim);

  Section child(const std::string& key);
  std::vector<Section> children(const std::string& key);

  /// Throws ConfigError naming the first unread key.
  void finish() const;

  const std::string& path() const { return path_; }
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

 private:
  const Json& raw(const std::string& key);
  std::string key_path(const std::string& key) const;

  const Json& node_;
  Json& resolved_;
  std::string path_;
  std::set<std::string> used_;
};

/// Parses a JSON document; syntax errors become ConfigError with line and column.
Json parse_config_text(const std::string& text, const std::string& origin);
Json load_config(const std::string& path);

/// Sets a dotted path (a.b.c) to a JSON-parsed value (falls back to a string).
void apply_override(Json& config, const std::string& assignment);

struct ParticleConstants {
  double mass = 1.0;
  double charge = 1.0;
  double hbar = 1.0;
};

Grid build_grid(Section s);
ParticleConstants build_particle(Section s);
Potential build_potential(Section s, int dim, const ParticleConstants& pc);
SpinorField build_initial_state(Section s, const Grid& grid, double hbar, bool* wide);
std::vector<Trajectory> build_trajectories(Section& parent, const std::string& key, int dim);

struct BuiltWeight {
  WeightSpec spec;
  std::optional<MultislitParams> multislit;
  std::vector<std::string> warnings;
};

/// Registry: zero, constant, corridor, ball, multislit, bump.
BuiltWeight build_weight(Section s, const Grid& grid, int spin_dim, double horizon);

/// kind zero or constant; constant reads row-major real_per_time and imag_per_time.
SpinTerm build_spin_term(Section s, int spin_dim);

PropagatorConfig build_propagator_config(Section s, Backend backend, double t1);
SliceKernelConfig build_kernel_config(Section s);
std::optional<OmegaSchedule> build_omega(Section s);

}  // namespace rfpi
