#include "rfpi/grid.hpp"

#include <cmath>
#include <string>

namespace rfpi {

Point Grid::point(Eigen::Index flat) const {
  const auto idx = unflatten(flat);
  Point x(dim_);
  for (int a = 0; a < dim_; ++a) x[a] = coordinate(a, idx[a]);
  return x;
}

std::array<int, 2> Grid::unflatten(Eigen::Index flat) const {
  if (dim_ == 1) return {static_cast<int>(flat), 0};
  return {static_cast<int>(flat / points_[1]), static_cast<int>(flat % points_[1])};
}

bool Grid::operator==(const Grid& other) const {
  if (dim_ != other.dim_) return false;
  for (int a = 0; a < dim_; ++a) {
    if (points_[a] != other.points_[a] || lo_[a] != other.lo_[a] || hi_[a] != other.hi_[a]) return false;
  }
  return true;
}

Grid make_grid(int dim, const std::vector<std::pair<double, double>>& extents,
               const std::vector<int>& points) {
  if (dim != 1 && dim != 2) throw Error("unsupported dimension " + std::to_string(dim));
  if (static_cast<int>(extents.size()) != dim || static_cast<int>(points.size()) != dim)
    throw Error("grid: extents and points must have one entry per axis");

  Grid g;
  g.dim_ = dim;
  g.size_ = 1;
  g.cell_volume_ = 1.0;
  for (int a = 0; a < dim; ++a) {
    const auto [lo, hi] = extents[a];
    if (!(std::isfinite(lo) && std::isfinite(hi)) || !(lo < hi))
      throw Error("grid: extent must satisfy lo < hi on axis " + std::to_string(a));
    if (points[a] < 8) throw Error("grid: need at least 8 points per axis");
    g.lo_[a] = lo;
    g.hi_[a] = hi;
    g.points_[a] = points[a];
    g.size_ *= points[a];
    g.cell_volume_ *= (hi - lo) / points[a];

    const int n = points[a];
    Eigen::ArrayXd k(n);
    for (int i = 0; i < n; ++i) {
      const int m = (i <= (n - 1) / 2) ? i : i - n;  // Nyquist mode (even n) gets -n/2
      k[i] = 2.0 * kPi * m / (hi - lo);
    }
    g.k_[a] = k;
  }

  g.k2_.resize(g.size_);
  for (Eigen::Index f = 0; f < g.size_; ++f) {
    const auto idx = g.unflatten(f);
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += g.k_[a][idx[a]] * g.k_[a][idx[a]];
    g.k2_[f] = s;
  }
  return g;
}

Grid make_grid(int dim, double lo, double hi, int points) {
  return make_grid(dim, std::vector<std::pair<double, double>>(dim, {lo, hi}), std::vector<int>(dim, points));
}

}  // namespace rfpi
