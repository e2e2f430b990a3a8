#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rfpi/propagator.hpp"

namespace rfpi {

/// Partition 0 = tau_0 < ... < tau_nu = t with evaluation points
/// kappa_j, kappa'_j in [tau_j, tau_{j+1}].
struct Subdivision {
  double t_end = 0.0;
  std::vector<double> taus;
  std::vector<double> kappas;
  std::vector<double> kappa_primes;

  int nu() const { return static_cast<int>(taus.size()) - 1; }
  double mesh() const;
  double width(int j) const { return taus[j + 1] - taus[j]; }
};

enum class TauScheme { uniform, random_jitter };
enum class KappaScheme { left, right, midpoint, random };

TauScheme parse_tau_scheme(const std::string& name);
KappaScheme parse_kappa_scheme(const std::string& name);
std::string kappa_scheme_name(KappaScheme s);

/// Random schemes draw from a 64-bit Mersenne twister seeded with `seed`;
/// kappas and kappa_primes use independent streams. Jittered nodes move by
/// at most a quarter of the uniform width.
Subdivision make_subdivision(double t, int nu, TauScheme tau_scheme, KappaScheme kappa_scheme,
                             std::uint64_t seed = 0);

/// Throws unless the subdivision satisfies its ordering and membership rules.
void validate_subdivision(const Subdivision& sub);

/// Exposure schedule omega(rho). Linear: omega = rho. Power: c rho^{1+sigma}.
struct OmegaSchedule {
  bool power = false;
  double sigma = 0.0;
  double coefficient = 1.0;

  static OmegaSchedule linear() { return {}; }
  /// Throws for sigma <= 0 or c <= 0.
  static OmegaSchedule power_law(double sigma, double coefficient = 1.0);

  double operator()(double rho) const;
  double derivative(double rho) const;
  /// omega'(rho) >= rho on (0, rho_max], sampled. False for sigma > 1:
  /// omega' then vanishes faster than rho at 0 for every coefficient.
  bool condition_holds(double rho_max) const;
};

/// Right to left: U(kappa_0, 0), exp(-rho_0 W_s(kappa'_0)), U(kappa_1, kappa_0),
/// ..., U(t, kappa_{nu-1}) with rho_j = tau_{j+1} - tau_j (or omega of it).
/// Unitary legs use the configured backend with dt <= (tau_{j+1} - tau_j)/4.
SpinorField interleaved_evolution(const SpinorField& f, const Potential& p, const SpinTerm& hs,
                                  const WeightSpec& w, const Subdivision& sub,
                                  const std::optional<OmegaSchedule>& omega, const PropagatorConfig& cfg);

/// Pointwise exp(-rho W_s(t, x)) f(x).
SpinorField apply_damping(const SpinorField& f, const WeightSpec& w, double t, double rho);

struct ConvergenceRecord {
  int nu = 0;
  double mesh = 0.0;
  double err_l2 = 0.0;
  std::optional<double> err_b1;
};

/// Least-squares slope of log(err) against log(mesh) over the finest half
/// (the last ceil(n/2) records).
double fitted_order(const std::vector<ConvergenceRecord>& records);

struct StudyOptions {
  TauScheme tau_scheme = TauScheme::uniform;
  KappaScheme kappa_scheme = KappaScheme::left;
  std::uint64_t seed = 0;
  std::optional<OmegaSchedule> omega;
  bool with_b1 = true;
  double saturation_floor = 1e-9;  // errors below this count as saturated
};

struct ConvergenceStudy {
  std::vector<ConvergenceRecord> records;
  double order = 0.0;
  bool saturated = false;
  bool strictly_decreasing = false;
  bool nonincreasing = false;          // within a 10% allowance
  std::string reference;               // description of the reference solution
  double reference_gap = 0.0;          // two-reference difference (grid references only)
  bool reference_consistent = true;
  std::vector<std::string> warnings;
};

/// Reference: evolve_damped (omega absent) or evolve_unitary (omega present),
/// by dense_oracle when the grid has at most 8192 unknowns, otherwise by the
/// grid backend at dt = min mesh / 64 with a dt/2 consistency run.
ConvergenceStudy convergence_study(const SpinorField& f, const Potential& p, const SpinTerm& hs,
                                   const WeightSpec& w, double t, const std::vector<int>& nus,
                                   const StudyOptions& options, const PropagatorConfig& cfg);

struct KappaSensitivity {
  int nu = 0;
  double max_pairwise = 0.0;
};

/// Max pairwise L2 distance of interleaved_evolution across kappa schemes
/// (shared uniform taus; kappa' follows the same scheme) for each nu.
std::vector<KappaSensitivity> kappa_sensitivity(const SpinorField& f, const Potential& p, const SpinTerm& hs,
                                                const WeightSpec& w, double t, const std::vector<int>& nus,
                                                const std::vector<KappaScheme>& schemes, std::uint64_t seed,
                                                const std::optional<OmegaSchedule>& omega,
                                                const PropagatorConfig& cfg);

}  // namespace rfpi
