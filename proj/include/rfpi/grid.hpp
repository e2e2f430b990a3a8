#pragma once

#include <array>
#include <utility>
#include <vector>

#include "rfpi/types.hpp"

namespace rfpi {

/// Regular periodic grid on a box in R^d (d = 1 or 2).
///
/// Points are stored row-major: the last axis varies fastest. The sample
/// coordinate of index i on an axis is lo + i * spacing, so hi itself is
/// the periodic image of lo and is not sampled.
class Grid {
 public:
  Grid() = default;

  int dim() const { return dim_; }
  Eigen::Index size() const { return size_; }
  int points(int axis) const { return points_[axis]; }
  double lo(int axis) const { return lo_[axis]; }
  double hi(int axis) const { return hi_[axis]; }
  double length(int axis) const { return hi_[axis] - lo_[axis]; }
  double spacing(int axis) const { return length(axis) / points_[axis]; }
  double cell_volume() const { return cell_volume_; }

  double coordinate(int axis, int i) const { return lo_[axis] + i * spacing(axis); }
  Point point(Eigen::Index flat) const;

  /// Multi-index of a flat index (axis 0 first).
  std::array<int, 2> unflatten(Eigen::Index flat) const;
  Eigen::Index flatten(int i0, int i1 = 0) const { return dim_ == 1 ? i0 : Eigen::Index(i0) * points_[1] + i1; }

  /// Angular wavenumbers of an axis in FFT ordering (0, 1, ..., -1) * 2 pi / L.
  const Eigen::ArrayXd& wavenumbers(int axis) const { return k_[axis]; }

  /// |k|^2 at every flat index, FFT ordering on each axis.
  const Eigen::ArrayXd& wavenumber_squared() const { return k2_; }

  bool operator==(const Grid& other) const;
  bool operator!=(const Grid& other) const { return !(*this == other); }

  friend Grid make_grid(int dim, const std::vector<std::pair<double, double>>& extents,
                        const std::vector<int>& points);

 private:
  int dim_ = 0;
  Eigen::Index size_ = 0;
  std::array<int, 2> points_{1, 1};
  std::array<double, 2> lo_{0.0, 0.0};
  std::array<double, 2> hi_{1.0, 1.0};
  double cell_volume_ = 0.0;
  std::array<Eigen::ArrayXd, 2> k_;
  Eigen::ArrayXd k2_;
};

/// Builds a grid; throws Error for d outside {1,2}, lo >= hi or fewer than 8 points.
Grid make_grid(int dim, const std::vector<std::pair<double, double>>& extents,
               const std::vector<int>& points);

/// Convenience overload with the same extent and point count on every axis.
Grid make_grid(int dim, double lo, double hi, int points);

}  // namespace rfpi
