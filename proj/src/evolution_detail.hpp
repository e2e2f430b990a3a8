#pragma once

// Shared pointwise coefficient sampling for the grid propagators and the
// dense oracle. Internal to the library.

#include <optional>
#include <vector>

#include "rfpi/propagator.hpp"

namespace rfpi::detail {

/// Multiplicative data at one time: qV and A on the grid, and the spin
/// block G = i H_s + W_s per point (scalar array when l = 1).
struct Coefficients {
  double t = 0.0;
  Eigen::ArrayXd qv;
  std::vector<Eigen::ArrayXd> a;
  bool magnetic = false;
  bool has_spin_block = false;
  Eigen::ArrayXcd g_scalar;
  std::vector<SpinMatrix> g_matrix;
};

class CoefficientCache {
 public:
  CoefficientCache(const Grid& grid, const Potential& p, const SpinTerm& hs, const WeightSpec& w);

  /// Coefficients at time t; recomputes only the time-dependent parts.
  const Coefficients& at(double t);

  int spin_dim() const { return l_; }

 private:
  void fill_fields(double t);
  void fill_spin(double t);

  const Grid& grid_;
  const Potential& p_;
  const SpinTerm& hs_;
  const WeightSpec& w_;
  int l_;
  bool fields_static_;
  bool spin_static_;
  bool fields_ready_ = false;
  bool spin_ready_ = false;
  Coefficients c_;
};

/// out -= G(p) u(p) at every point.
void subtract_spin_block(const Coefficients& c, const Eigen::MatrixXcd& u, Eigen::MatrixXcd& out);

void check_spin_dims(const SpinorField& f, const SpinTerm& hs, const WeightSpec& w);

}  // namespace rfpi::detail
