#include "rfpi/path.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace rfpi {

PathPolyline::PathPolyline(std::vector<double> times, std::vector<Point> vertices)
    : times_(std::move(times)), vertices_(std::move(vertices)) {
  if (times_.size() < 2) throw Error("path: need at least two vertices");
  if (times_.size() != vertices_.size()) throw Error("path: times and vertices differ in length");
  for (std::size_t j = 1; j < times_.size(); ++j) {
    if (!(times_[j] > times_[j - 1])) throw Error("path: times must be strictly increasing");
    if (vertices_[j].size() != vertices_[0].size()) throw Error("path: vertex dimension mismatch");
  }
}

int PathPolyline::segment_of(double theta) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), theta);
  int seg = static_cast<int>(it - times_.begin()) - 1;
  return std::clamp(seg, 0, segments() - 1);
}

Point PathPolyline::operator()(double theta) const {
  const int j = segment_of(theta);
  const double r = (theta - times_[j]) / (times_[j + 1] - times_[j]);
  return Point(vertices_[j] + r * (vertices_[j + 1] - vertices_[j]));
}

Point PathPolyline::velocity(int segment) const {
  return Point((vertices_[segment + 1] - vertices_[segment]) / (times_[segment + 1] - times_[segment]));
}

PathPolyline straight_path(double t, double s, const Point& x, const Point& y) {
  if (!(s < t)) throw Error("straight_path: need s < t");
  if (x.size() != y.size()) throw Error("straight_path: endpoint dimension mismatch");
  return PathPolyline({s, t}, {y, x});
}

PathPolyline concatenate(const PathPolyline& a, const PathPolyline& b) {
  if (a.end() != b.start() || (a.vertices().back() - b.vertices().front()).norm() != 0.0)
    throw Error("concatenate: paths do not share the junction vertex");
  std::vector<double> times = a.times();
  std::vector<Point> verts = a.vertices();
  times.insert(times.end(), b.times().begin() + 1, b.times().end());
  verts.insert(verts.end(), b.vertices().begin() + 1, b.vertices().end());
  return PathPolyline(std::move(times), std::move(verts));
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw Error("gauss_legendre: need at least one node");
  static std::mutex mu;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find(n); it != cache.end()) return it->second;

  std::vector<double> x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = 0.0;
    for (int k = 1; k <= n; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
  cache[n] = {x, w};
  return {x, w};
}

double action_along(const Potential& p, const PathPolyline& path, int quad_points) {
  if (quad_points < 2) throw Error("action_along: need at least two quadrature points");
  const auto [nodes, weights] = gauss_legendre(quad_points);
  double total = 0.0;
  for (int j = 0; j < path.segments(); ++j) {
    const double a = path.times()[j];
    const double b = path.times()[j + 1];
    const double half = 0.5 * (b - a);
    const Point v = path.velocity(j);
    double seg = 0.0;
    for (int i = 0; i < quad_points; ++i) {
      const double theta = a + half * (nodes[i] + 1.0);
      const double r = (theta - a) / (b - a);
      const Point q = path.vertices()[j] + r * (path.vertices()[j + 1] - path.vertices()[j]);
      seg += weights[i] * lagrangian(p, theta, q, v);
    }
    total += half * seg;
  }
  return total;
}

}  // namespace rfpi
