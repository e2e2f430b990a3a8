#pragma once

#include <utility>
#include <vector>

#include "rfpi/potential.hpp"

namespace rfpi {

/// Piecewise straight path through (times[j], vertices[j]).
class PathPolyline {
 public:
  PathPolyline(std::vector<double> times, std::vector<Point> vertices);

  const std::vector<double>& times() const { return times_; }
  const std::vector<Point>& vertices() const { return vertices_; }
  double start() const { return times_.front(); }
  double end() const { return times_.back(); }
  int segments() const { return static_cast<int>(times_.size()) - 1; }
  int dim() const { return static_cast<int>(vertices_.front().size()); }

  /// Linear interpolation inside the containing segment.
  Point operator()(double theta) const;
  /// Constant velocity of a segment.
  Point velocity(int segment) const;
  /// Segment index containing theta (last segment for theta == end()).
  int segment_of(double theta) const;

 private:
  std::vector<double> times_;
  std::vector<Point> vertices_;
};

/// q(theta) = y + (theta - s)/(t - s) (x - y); throws unless s < t.
PathPolyline straight_path(double t, double s, const Point& x, const Point& y);

/// Joins two polylines sharing the vertex a.end() == b.start().
PathPolyline concatenate(const PathPolyline& a, const PathPolyline& b);

/// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

/// Classical action: sum over segments of the Gauss-Legendre integral of the
/// Lagrangian with `quad_points` nodes per segment.
double action_along(const Potential& p, const PathPolyline& path, int quad_points);

}  // namespace rfpi
