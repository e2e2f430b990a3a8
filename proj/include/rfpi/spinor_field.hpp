#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfpi/grid.hpp"

namespace rfpi {

/// l-component complex wavefunction sampled on a Grid.
///
/// Values are an l x N matrix (column = grid point), so the flat memory
/// layout is grid-point major with the spin component varying fastest.
class SpinorField {
 public:
  SpinorField() = default;
  SpinorField(Grid grid, int spin_dim);
  SpinorField(Grid grid, Eigen::MatrixXcd values);

  const Grid& grid() const { return grid_; }
  int spin_dim() const { return static_cast<int>(values_.rows()); }

  Eigen::MatrixXcd& values() { return values_; }
  const Eigen::MatrixXcd& values() const { return values_; }

  /// One spin component as a flat array over the grid.
  Eigen::ArrayXcd component(int c) const { return values_.row(c).transpose().array(); }
  void set_component(int c, const Eigen::ArrayXcd& v) { values_.row(c) = v.matrix().transpose(); }

  bool all_finite() const { return values_.allFinite(); }

  SpinorField& operator+=(const SpinorField& other);
  SpinorField& operator-=(const SpinorField& other);
  SpinorField& operator*=(Complex s);

 private:
  Grid grid_;
  Eigen::MatrixXcd values_;
};

SpinorField operator+(SpinorField a, const SpinorField& b);
SpinorField operator-(SpinorField a, const SpinorField& b);
SpinorField operator*(Complex s, SpinorField a);

/// Throws unless both fields share grid and spin dimension.
void require_compatible(const SpinorField& f, const SpinorField& g, const char* what);

/// Pairwise (fixed binary tree) summation; bit-reproducible for a given length.
double pairwise_sum(std::span<const double> values);
Complex pairwise_sum(std::span<const Complex> values);

/// (f, g) = sum over points and components of f * conj(g), times the cell volume.
Complex inner_product(const SpinorField& f, const SpinorField& g);

double l2_norm(const SpinorField& f);

/// Weighted Sobolev norm of order a in {0,1,2}:
///   ||f_j||_a = ||f_j|| + sum_{|alpha|=a} (||x^alpha f_j|| + ||d^alpha f_j||)
/// combined over components as sqrt(sum_j ||f_j||_a^2). Derivatives are spectral.
double sobolev_norm(const SpinorField& f, int order);

struct NormReport {
  double l2 = 0.0;
  double b1 = 0.0;
  std::optional<double> b2;
};

NormReport norm_report(const SpinorField& f, bool with_b2 = true);

struct PacketSpec {
  Point center;
  Point momentum;
  double width = 1.0;
  std::vector<Complex> component_weights{Complex(1.0)};
  double hbar = 1.0;
};

/// Normalized Gaussian packet exp(-|x-c|^2/(4 width^2) + i p.x/hbar), spread
/// over spin components by the (normalized) weights. `wide` is set when the
/// packet is wider than a third of the box on some axis.
SpinorField gaussian_packet(const Grid& grid, const PacketSpec& spec, bool* wide = nullptr);

/// Probability mass in the outer `fraction` of the box (on any axis).
double boundary_mass(const SpinorField& f, double fraction = 0.1);

/// Multiplies every spin component pointwise by a scalar function of x.
SpinorField multiply_pointwise(const SpinorField& f, const std::function<Complex(const Point&)>& g);

}  // namespace rfpi
