#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rfpi/grid.hpp"
#include "rfpi/potential.hpp"

namespace rfpi {

using MatrixFieldFn = std::function<SpinMatrix(double t, const Point& x)>;
using Trajectory = std::function<Point(double t)>;

/// Measurement weight: Hermitian l x l field W_s(t,x), a scalar lower bound
/// w(t,x) >= 0 and shift C_W with W_s >= (w - C_W) I.
struct WeightSpec {
  int spin_dim = 1;
  MatrixFieldFn eval;                        // empty: W_s = 0
  ScalarFn lower_bound;                      // empty: w = 0
  double shift = 0.0;                        // C_W
  std::function<double(double)> time_modulus;  // optional sigma(rho)
  bool time_dependent = false;
  bool diagonal = true;
  std::string name = "zero";

  bool is_zero() const { return !eval; }
  SpinMatrix operator()(double t, const Point& x) const {
    return eval ? eval(t, x) : SpinMatrix(SpinMatrix::Zero(spin_dim, spin_dim));
  }
  double w(double t, const Point& x) const { return lower_bound ? lower_bound(t, x) : 0.0; }
};

WeightSpec zero_weight(int spin_dim = 1);

/// W_s = c I (time independent).
WeightSpec constant_weight(int spin_dim, double c);

/// C-infinity cutoff: exp(-1/t) for t > 0, 0 otherwise.
double mollifier_f(double t);

/// Smooth monotone step: 0 for z <= 0, 1 for z >= 1, C-infinity in between.
double smooth_step(double z);

/// Hole/wall profile h: |y|^2/2 for |y| <= 1, |y| for |y| >= 2, joined by a
/// smooth_step blend (so h >= 1/2 whenever |y| >= 1).
double hole_profile(double r);

/// Diagonal corridor weight w_jj = |x - a_j(t)|^2 / (2 delta^2) with
/// w = |x|^2/(4 delta^2) and C_W = A^2/delta^2, A = max_j max_t |a_j(t)|
/// sampled on [0, horizon]. The time modulus is
/// sigma(rho) = max(1, 2 gamma L (1 + A)) rho with L the sampled Lipschitz
/// constant of the trajectories.
WeightSpec corridor_weight(const std::vector<Trajectory>& trajectories, double delta, double horizon);

/// Diagonal weight n |x - a_i|^2 f(|x - a_i| - b_i) with w = n |x|^2 f(|x|)/2;
/// C_W = 1.1 max(n(w - w_ii))_+ sampled on `sample_grid`.
WeightSpec ball_confinement_weight(const std::vector<Point>& centers, const std::vector<double>& radii,
                                   double strength, const Grid& sample_grid);

/// Thin wall with N holes, scalar weight
///   W(x) = log N - k(x_d) log sum_j exp(-h1(x' - a'_j))
/// (log-sum-exp shifted by min_j h1). With `wall_h2` set, k = exp(-h2(x_d))
/// and the lower bound is <x'> exp(-h2(x_d)) / C* with C* sampled on the grid.
struct MultislitParams {
  std::vector<Point> hole_centers;            // points of R^{d-1}
  std::function<double(const Point&)> h1;      // h1 >= 0, h1(0) = 0
  std::function<double(double)> wall_k;        // 0 <= k <= 1
  std::function<double(double)> wall_h2;       // alternative: k = exp(-h2)
  bool subtract_offset = false;
  double scale = 1.0;                          // n in n W
};

/// Example profile of a hole of radius `hole_width` in a wall of thickness
/// `wall_width`: h1(y) = hole_profile(|y|/hole_width) * hole_strength and
/// h2(x_d) = hole_profile(x_d / wall_width).
MultislitParams standard_multislit(std::vector<Point> hole_centers, double hole_width, double wall_width,
                                   double hole_strength = 1.0, double scale = 1.0);

struct MultislitWeight {
  WeightSpec spec;
  double c_star = 0.0;              // sampled constant of <x'> e^{-h2} <= C*(1 + W)
  std::vector<std::string> warnings;
};

/// Evaluates the mask at one point (scaled, offset applied if requested).
double multislit_value(const MultislitParams& params, const Point& x);

MultislitWeight multislit_weight(const MultislitParams& params, const Grid& sample_grid);

/// Radial C-infinity bump: 1 for |x - c| <= inner, 0 for |x - c| >= outer.
std::function<double(const Point&)> radial_bump(const Point& center, double inner, double outer);

/// Scalar (replicated on the diagonal) weight n h_O(x); w = 0, C_W = 0.
WeightSpec bump_region_weight(std::function<double(const Point&)> h_o, double strength, int spin_dim = 1);

/// c W_s with lower bound c w and shift c C_W (c >= 0; c = 0 gives zero).
WeightSpec scale_weight(const WeightSpec& w, double c);

/// Pointwise sum; lower bounds and shifts add.
WeightSpec sum_weights(const std::vector<WeightSpec>& ws);

/// exp(-rho W_s(t,x)) via Hermitian eigendecomposition. Throws if W_s(t,x)
/// is not Hermitian to 1e-12 relative or rho < 0.
SpinMatrix damping_factor(const WeightSpec& w, double t, const Point& x, double rho);

}  // namespace rfpi
