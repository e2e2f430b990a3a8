#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rfpi/grid.hpp"

namespace rfpi {

using ScalarFn = std::function<double(double t, const Point& x)>;
using VectorFn = std::function<Point(double t, const Point& x)>;

/// Electromagnetic potential (V, A) together with the particle constants.
/// H(t) = (1/2m) sum_j (-i hbar d_j - q A_j)^2 + q V.
struct Potential {
  int dim = 1;
  ScalarFn scalar;      // V; empty means V = 0
  VectorFn vector;      // A; empty means A = 0
  VectorFn vector_dt;   // dA/dt if known analytically
  double mass = 1.0;
  double charge = 1.0;
  double hbar = 1.0;
  std::string name = "free";
  bool time_independent = false;  // set when V and A ignore t; lets propagators cache them

  double V(double t, const Point& x) const { return scalar ? scalar(t, x) : 0.0; }
  Point A(double t, const Point& x) const { return vector ? vector(t, x) : Point::Zero(x.size()); }
  bool magnetic() const { return static_cast<bool>(vector); }
};

Potential free_particle(int dim, double mass = 1.0, double charge = 1.0, double hbar = 1.0);

/// V(x) = -E.x, i.e. a uniform electric field E.
Potential uniform_electric_field(const Point& field, double mass = 1.0, double charge = 1.0, double hbar = 1.0);

/// V(x) = m omega^2 |x - c|^2 / 2.
Potential harmonic(const Point& center, double omega, double mass = 1.0, double charge = 1.0, double hbar = 1.0);

/// d = 2 symmetric gauge A = (B0/2)(-x2, x1): uniform B12 = B0.
Potential symmetric_gauge(double b0, double mass = 1.0, double charge = 1.0, double hbar = 1.0);

/// d = 2 idealized solenoid carrying flux alpha. Outside radius r0,
/// A = (alpha/2pi)(-x2, x1)/|x|^2 (curl free); inside, the linear ramp
/// (alpha/2pi)(-x2, x1)/r0^2 (uniform B = alpha/(pi r0^2)).
Potential solenoid(double alpha, double core_radius, double mass = 1.0, double charge = 1.0, double hbar = 1.0);

/// Real gauge function psi(t, x) with optional analytic derivatives.
struct GaugeFunction {
  ScalarFn psi;
  ScalarFn dpsi_dt;   // empty: centered difference
  VectorFn grad_psi;  // empty: centered difference

  double value(double t, const Point& x) const { return psi(t, x); }
  double time_derivative(double t, const Point& x) const;
  Point gradient(double t, const Point& x) const;
};

/// psi = beta.x + c t.
GaugeFunction linear_gauge(const Point& beta, double rate = 0.0);
/// psi = beta |x|^2 + c t^2.
GaugeFunction quadratic_gauge(double beta, double rate = 0.0);

/// V' = V - dpsi/dt, A' = A + grad psi.
Potential gauge_transform(const Potential& p, const GaugeFunction& g);

/// Largest relative mismatch between supplied derivatives of psi and a
/// finite-difference estimate at the given sample points.
double gauge_derivative_mismatch(const GaugeFunction& g, const std::vector<double>& times,
                                 const std::vector<Point>& points);

struct ElectromagneticField {
  std::vector<Eigen::ArrayXd> electric;  // d arrays over the grid
  std::vector<Eigen::ArrayXd> magnetic;  // B_jk for j < k, d(d-1)/2 arrays
};

/// E = -dA/dt - grad V and B_jk = d_j A_k - d_k A_j on the grid at time t.
/// Spatial derivatives use fourth-order differences of the closed-form
/// potential; dA/dt uses a centered difference with step 1e-6 * horizon
/// unless vector_dt is supplied.
ElectromagneticField fields_from_potential(const Potential& p, const Grid& grid, double t, double horizon);

/// m/2 |v|^2 + q v.A(t,x) - q V(t,x).
double lagrangian(const Potential& p, double t, const Point& x, const Point& v);

}  // namespace rfpi
