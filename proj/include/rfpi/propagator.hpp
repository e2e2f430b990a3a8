#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include "rfpi/potential.hpp"
#include "rfpi/spinor_field.hpp"
#include "rfpi/weights.hpp"

namespace rfpi {

/// Hermitian spin term H_s(t,x) (frequency units).
struct SpinTerm {
  int spin_dim = 1;
  MatrixFieldFn eval;  // empty: H_s = 0
  bool time_dependent = false;

  bool is_zero() const { return !eval; }
  SpinMatrix operator()(double t, const Point& x) const {
    return eval ? eval(t, x) : SpinMatrix(SpinMatrix::Zero(spin_dim, spin_dim));
  }
};

SpinTerm zero_spin_term(int spin_dim = 1);

/// Constant Hermitian spin term.
SpinTerm constant_spin_term(const SpinMatrix& h);

enum class Backend { spectral_strang, mol_rk4, dense_oracle };

Backend parse_backend(const std::string& name);
std::string backend_name(Backend b);

using StepObserver = std::function<void(double t, const SpinorField& u)>;

struct PropagatorConfig {
  Backend backend = Backend::spectral_strang;
  double dt = 1e-3;
  double t0 = 0.0;
  double t1 = 0.0;
  double tolerance = 1e-11;              // dense_oracle local error target
  int checkpoint_every = 0;              // 0: off
  std::filesystem::path checkpoint_stem;
  StepObserver observer;                 // called after every step (and at t0)
};

/// Largest mol_rk4 step allowed on this grid: min over axes of
/// 0.5 m dx^2 / hbar * (2 / pi^2).
double mol_rk4_max_dt(const Grid& grid, const Potential& p);

/// Approximates U(t1,t0) f. Equivalent to evolve_damped with a zero weight.
SpinorField evolve_unitary(const SpinorField& f, const Potential& p, const SpinTerm& hs,
                           const PropagatorConfig& cfg);

/// Approximates U_w(t1,t0) f for i hbar u_t = [H + hbar H_s - i hbar W_s] u.
SpinorField evolve_damped(const SpinorField& f, const Potential& p, const SpinTerm& hs, const WeightSpec& w,
                          const PropagatorConfig& cfg);

/// <x> = sum x |f|^2 vol / ||f||^2. Throws for the zero field.
Point expectation_position(const SpinorField& f);

/// sum over grid points in the region of |f|^2 vol.
double survival_mass(const SpinorField& f, const std::function<bool(const Point&)>& region);

}  // namespace rfpi
