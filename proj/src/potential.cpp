#include "rfpi/potential.hpp"

#include <algorithm>
#include <cmath>

namespace rfpi {

namespace {

constexpr double kSpaceStep = 1e-3;

template <typename F>
auto fourth_order_diff(F&& f, double h) {
  return (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h);
}

Potential base(int dim, double mass, double charge, double hbar, std::string name) {
  if (dim != 1 && dim != 2) throw Error("potential: unsupported dimension");
  if (!(mass > 0.0)) throw Error("potential: mass must be positive");
  if (!(hbar > 0.0)) throw Error("potential: hbar must be positive");
  Potential p;
  p.dim = dim;
  p.mass = mass;
  p.charge = charge;
  p.hbar = hbar;
  p.name = std::move(name);
  p.time_independent = true;
  return p;
}

}  // namespace

Potential free_particle(int dim, double mass, double charge, double hbar) {
  return base(dim, mass, charge, hbar, "free");
}

Potential uniform_electric_field(const Point& field, double mass, double charge, double hbar) {
  Potential p = base(static_cast<int>(field.size()), mass, charge, hbar, "uniform_field");
  p.scalar = [field](double, const Point& x) { return -field.dot(x); };
  return p;
}

Potential harmonic(const Point& center, double omega, double mass, double charge, double hbar) {
  Potential p = base(static_cast<int>(center.size()), mass, charge, hbar, "harmonic");
  p.scalar = [center, omega, mass](double, const Point& x) {
    return 0.5 * mass * omega * omega * (x - center).squaredNorm();
  };
  return p;
}

Potential symmetric_gauge(double b0, double mass, double charge, double hbar) {
  Potential p = base(2, mass, charge, hbar, "symmetric_gauge");
  p.vector = [b0](double, const Point& x) {
    Point a(2);
    a << -0.5 * b0 * x[1], 0.5 * b0 * x[0];
    return a;
  };
  p.vector_dt = [](double, const Point& x) { return Point::Zero(x.size()); };
  return p;
}

Potential solenoid(double alpha, double core_radius, double mass, double charge, double hbar) {
  if (!(core_radius > 0.0)) throw Error("solenoid: core radius must be positive");
  Potential p = base(2, mass, charge, hbar, "solenoid");
  p.vector = [alpha, core_radius](double, const Point& x) {
    const double r2 = std::max(x.squaredNorm(), core_radius * core_radius);
    const double s = alpha / (2.0 * kPi * r2);
    Point a(2);
    a << -s * x[1], s * x[0];
    return a;
  };
  p.vector_dt = [](double, const Point& x) { return Point::Zero(x.size()); };
  return p;
}

double GaugeFunction::time_derivative(double t, const Point& x) const {
  if (dpsi_dt) return dpsi_dt(t, x);
  const double h = 1e-4 * std::max(1.0, std::abs(t));
  return (psi(t + h, x) - psi(t - h, x)) / (2.0 * h);
}

Point GaugeFunction::gradient(double t, const Point& x) const {
  if (grad_psi) return grad_psi(t, x);
  Point g(x.size());
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    g[a] = fourth_order_diff(
        [&](double h) {
          Point y = x;
          y[a] += h;
          return psi(t, y);
        },
        kSpaceStep);
  }
  return g;
}

GaugeFunction linear_gauge(const Point& beta, double rate) {
  GaugeFunction g;
  g.psi = [beta, rate](double t, const Point& x) { return beta.dot(x) + rate * t; };
  g.dpsi_dt = [rate](double, const Point&) { return rate; };
  g.grad_psi = [beta](double, const Point&) { return beta; };
  return g;
}

GaugeFunction quadratic_gauge(double beta, double rate) {
  GaugeFunction g;
  g.psi = [beta, rate](double t, const Point& x) { return beta * x.squaredNorm() + rate * t * t; };
  g.dpsi_dt = [rate](double t, const Point&) { return 2.0 * rate * t; };
  g.grad_psi = [beta](double, const Point& x) { return Point(2.0 * beta * x); };
  return g;
}

Potential gauge_transform(const Potential& p, const GaugeFunction& g) {
  Potential q = p;
  q.name = p.name + "+gauge";
  q.time_independent = false;
  q.scalar = [p, g](double t, const Point& x) { return p.V(t, x) - g.time_derivative(t, x); };
  q.vector = [p, g](double t, const Point& x) { return Point(p.A(t, x) + g.gradient(t, x)); };
  if (p.vector_dt || !p.vector) {
    // d/dt grad psi by centered difference of the gradient
    q.vector_dt = [p, g](double t, const Point& x) {
      const double h = 1e-5 * std::max(1.0, std::abs(t));
      Point dgrad = (g.gradient(t + h, x) - g.gradient(t - h, x)) / (2.0 * h);
      if (p.vector_dt) dgrad += p.vector_dt(t, x);
      return dgrad;
    };
  } else {
    q.vector_dt = nullptr;
  }
  return q;
}

double gauge_derivative_mismatch(const GaugeFunction& g, const std::vector<double>& times,
                                 const std::vector<Point>& points) {
  GaugeFunction numeric;
  numeric.psi = g.psi;
  double worst = 0.0;
  for (double t : times) {
    for (const Point& x : points) {
      const double dt_a = g.time_derivative(t, x);
      const double dt_n = numeric.time_derivative(t, x);
      worst = std::max(worst, std::abs(dt_a - dt_n) / std::max(1.0, std::abs(dt_n)));
      const Point ga = g.gradient(t, x);
      const Point gn = numeric.gradient(t, x);
      worst = std::max(worst, (ga - gn).norm() / std::max(1.0, gn.norm()));
    }
  }
  return worst;
}

ElectromagneticField fields_from_potential(const Potential& p, const Grid& grid, double t, double horizon) {
  if (grid.dim() != p.dim) throw Error("fields_from_potential: dimension mismatch");
  const int d = grid.dim();
  ElectromagneticField out;
  out.electric.assign(d, Eigen::ArrayXd::Zero(grid.size()));
  out.magnetic.assign(d * (d - 1) / 2, Eigen::ArrayXd::Zero(grid.size()));
  const double ht = 1e-6 * std::max(horizon, 1e-300);

  for (Eigen::Index f = 0; f < grid.size(); ++f) {
    const Point x = grid.point(f);
    Point dadt = Point::Zero(d);
    if (p.magnetic()) {
      dadt = p.vector_dt ? p.vector_dt(t, x) : Point((p.A(t + ht, x) - p.A(t - ht, x)) / (2.0 * ht));
    }
    for (int j = 0; j < d; ++j) {
      const double dv = fourth_order_diff(
          [&](double h) {
            Point y = x;
            y[j] += h;
            return p.V(t, y);
          },
          kSpaceStep);
      out.electric[j][f] = -dadt[j] - dv;
    }
    if (d == 2 && p.magnetic()) {
      // B_12 = d_1 A_2 - d_2 A_1
      const double d1a2 = fourth_order_diff(
          [&](double h) {
            Point y = x;
            y[0] += h;
            return p.A(t, y)[1];
          },
          kSpaceStep);
      const double d2a1 = fourth_order_diff(
          [&](double h) {
            Point y = x;
            y[1] += h;
            return p.A(t, y)[0];
          },
          kSpaceStep);
      out.magnetic[0][f] = d1a2 - d2a1;
    }
  }
  return out;
}

double lagrangian(const Potential& p, double t, const Point& x, const Point& v) {
  double l = 0.5 * p.mass * v.squaredNorm() - p.charge * p.V(t, x);
  if (p.magnetic()) l += p.charge * v.dot(p.A(t, x));
  return l;
}

}  // namespace rfpi
