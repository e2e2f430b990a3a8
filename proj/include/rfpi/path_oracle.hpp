#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rfpi/path.hpp"
#include "rfpi/product_formula.hpp"

namespace rfpi {

/// Time-ordered solution of dU/dtheta = -(i H_s + W_s)(theta, q(theta)) U,
/// U(s) = I, along a polyline, plus the bound exp(-int (w - C_W)) evaluated
/// with the same midpoint nodes.
struct OrderedFactor {
  SpinMatrix value;
  double bound = 1.0;
  int substeps = 0;
};

/// Product of midpoint exponentials, `substeps` per polyline segment
/// overlapping [s, t]; later factors multiply from the left.
OrderedFactor ordered_weight_factor(const PathPolyline& path, const WeightSpec& w, const SpinTerm& hs, double s,
                                    double t, int substeps);

enum class KernelQuadrature { damped_gauss, filon_gauss };

KernelQuadrature parse_kernel_quadrature(const std::string& name);
std::string kernel_quadrature_name(KernelQuadrature q);

/// Regularization policy for the one-step oscillatory integral. The y
/// integral runs over |x - y| < R, R = window * sqrt(hbar rho / m), with a
/// smooth taper (1 up to R/2, 0 at R) and the factor exp(-cutoff_width |x-y|^2).
/// f is interpolated trigonometrically onto nodes spaced at most
/// 2R / quad_points.
struct SliceKernelConfig {
  KernelQuadrature quadrature = KernelQuadrature::damped_gauss;
  double cutoff_width = 1e-4;
  int quad_points = 1024;
  double window = 16.0;
  int action_points = 8;
  int factor_substeps = 16;
};

void validate_kernel_config(const SliceKernelConfig& cfg);

/// Largest oracle grid and slice count.
inline constexpr int kOracleMaxPoints = 512;
inline constexpr int kOracleMaxSlices = 8;

/// One time slice: sqrt(m / (2 pi i hbar rho)) int exp(i S / hbar) F_w f(y) dy
/// with S and F_w along the straight path from (s, y) to (t, x). d = 1 only.
SpinorField one_step_kernel_apply(const SpinorField& f, const Potential& p, const WeightSpec& w,
                                  const SpinTerm& hs, double s, double t, const SliceKernelConfig& cfg);

/// Composition of one-step kernels over the subdivision (nu <= 8).
SpinorField sliced_kernel_apply(const SpinorField& f, const Potential& p, const WeightSpec& w, const SpinTerm& hs,
                                const Subdivision& sub, const SliceKernelConfig& cfg);

using ObservableFn = std::function<SpinMatrix(const Point& x)>;

struct Insertion {
  double time = 0.0;
  ObservableFn z;
};

/// Sliced kernel with multiplications by Z_j(q(t_j)) inserted. By default
/// each t_j snaps to the nearest slice boundary, where q(t_j) is the grid
/// vertex. With `within_slice`, a t_j inside a slice splits the ordered
/// factor of that slice at t_j and evaluates Z_j on the straight path.
SpinorField insert_observables(const SpinorField& f, const Potential& p, const WeightSpec& w, const SpinTerm& hs,
                               const Subdivision& sub, const std::vector<Insertion>& insertions,
                               const SliceKernelConfig& cfg, bool within_slice = false);

}  // namespace rfpi
