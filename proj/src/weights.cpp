#include "rfpi/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rfpi/matrix_exp.hpp"

namespace rfpi {

namespace {

std::function<double(double)> identity_modulus() {
  return [](double rho) { return rho; };
}

double japanese(const Point& x) { return std::sqrt(1.0 + x.squaredNorm()); }

}  // namespace

WeightSpec zero_weight(int spin_dim) {
  if (spin_dim < 1 || spin_dim > kMaxSpin) throw Error("weight: spin dimension out of range");
  WeightSpec w;
  w.spin_dim = spin_dim;
  w.time_modulus = identity_modulus();
  return w;
}

WeightSpec constant_weight(int spin_dim, double c) {
  WeightSpec w = zero_weight(spin_dim);
  w.eval = [spin_dim, c](double, const Point&) {
    return SpinMatrix(c * SpinMatrix::Identity(spin_dim, spin_dim));
  };
  const double wv = std::max(c, 0.0);
  w.lower_bound = [wv](double, const Point&) { return wv; };
  w.shift = std::max(-c, 0.0);
  w.name = "constant";
  return w;
}

double mollifier_f(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

double smooth_step(double z) {
  if (z <= 0.0) return 0.0;
  if (z >= 1.0) return 1.0;
  const double a = mollifier_f(z);
  const double b = mollifier_f(1.0 - z);
  return a / (a + b);
}

double hole_profile(double r) {
  r = std::abs(r);
  const double s = smooth_step(r - 1.0);
  return (1.0 - s) * 0.5 * r * r + s * r;
}

WeightSpec corridor_weight(const std::vector<Trajectory>& trajectories, double delta, double horizon) {
  if (!(delta > 0.0)) throw Error("corridor_weight: delta must be positive");
  if (trajectories.empty()) throw Error("corridor_weight: need at least one trajectory");
  if (!(horizon > 0.0)) throw Error("corridor_weight: horizon must be positive");
  const int l = static_cast<int>(trajectories.size());
  if (l > kMaxSpin) throw Error("corridor_weight: too many trajectories");

  constexpr int samples = 2000;
  double amax = 0.0;
  double lip = 0.0;
  for (const auto& a : trajectories) {
    Point prev = a(0.0);
    amax = std::max(amax, prev.norm());
    for (int k = 1; k <= samples; ++k) {
      const double t = horizon * k / samples;
      const Point cur = a(t);
      if (!cur.allFinite()) throw Error("corridor_weight: trajectory is not finite");
      amax = std::max(amax, cur.norm());
      lip = std::max(lip, (cur - prev).norm() / (horizon / samples));
      prev = cur;
    }
  }

  const double gamma = 1.0 / (2.0 * delta * delta);
  WeightSpec w;
  w.spin_dim = l;
  w.eval = [trajectories, gamma, l](double t, const Point& x) {
    SpinMatrix m = SpinMatrix::Zero(l, l);
    for (int j = 0; j < l; ++j) m(j, j) = gamma * (x - trajectories[j](t)).squaredNorm();
    return m;
  };
  w.lower_bound = [delta](double, const Point& x) { return x.squaredNorm() / (4.0 * delta * delta); };
  w.shift = amax * amax / (delta * delta);
  // |W(t) - W(s)| <= 2 gamma L |t-s| (|x| + A), measured against <x>^2
  const double slope = std::max(1.0, 2.0 * gamma * lip * (1.0 + amax));
  w.time_modulus = [slope](double rho) { return slope * rho; };
  w.time_dependent = true;
  w.name = "corridor";
  return w;
}

WeightSpec ball_confinement_weight(const std::vector<Point>& centers, const std::vector<double>& radii,
                                   double strength, const Grid& sample_grid) {
  if (centers.empty() || centers.size() != radii.size())
    throw Error("ball_confinement_weight: centers and radii differ in length");
  if (static_cast<int>(centers.size()) > kMaxSpin) throw Error("ball_confinement_weight: too many balls");
  for (double b : radii)
    if (b < 0.0) throw Error("ball_confinement_weight: radii must be nonnegative");
  if (strength < 0.0) throw Error("ball_confinement_weight: strength must be nonnegative");
  const int l = static_cast<int>(centers.size());

  auto diag = [centers, radii, strength](int i, const Point& x) {
    const double r = (x - centers[i]).norm();
    return strength * r * r * mollifier_f(r - radii[i]);
  };
  auto lower = [strength](const Point& x) {
    const double r = x.norm();
    return 0.5 * strength * r * r * mollifier_f(r);
  };

  double worst = 0.0;
  for (Eigen::Index f = 0; f < sample_grid.size(); ++f) {
    const Point x = sample_grid.point(f);
    double mn = std::numeric_limits<double>::infinity();
    for (int i = 0; i < l; ++i) mn = std::min(mn, diag(i, x));
    worst = std::max(worst, lower(x) - mn);
  }

  WeightSpec w;
  w.spin_dim = l;
  w.eval = [diag, l](double, const Point& x) {
    SpinMatrix m = SpinMatrix::Zero(l, l);
    for (int i = 0; i < l; ++i) m(i, i) = diag(i, x);
    return m;
  };
  w.lower_bound = [lower](double, const Point& x) { return lower(x); };
  w.shift = 1.1 * worst;
  w.time_modulus = identity_modulus();
  w.name = "ball_confinement";
  return w;
}

MultislitParams standard_multislit(std::vector<Point> hole_centers, double hole_width, double wall_width,
                                   double hole_strength, double scale) {
  if (!(hole_width > 0.0) || !(wall_width > 0.0)) throw Error("multislit: widths must be positive");
  MultislitParams p;
  p.hole_centers = std::move(hole_centers);
  p.h1 = [hole_width, hole_strength](const Point& y) { return hole_strength * hole_profile(y.norm() / hole_width); };
  p.wall_h2 = [wall_width](double xd) { return hole_profile(xd / wall_width); };
  p.scale = scale;
  return p;
}

namespace {

double wall_factor(const MultislitParams& p, double xd) {
  if (p.wall_h2) return std::exp(-p.wall_h2(xd));
  return p.wall_k ? p.wall_k(xd) : 1.0;
}

Point transverse(const Point& x) {
  const Eigen::Index d = x.size();
  if (d == 1) return Point::Zero(0);
  return Point(x.head(d - 1));
}

double raw_multislit(const MultislitParams& p, const Point& x) {
  const Point xp = transverse(x);
  const int n = static_cast<int>(p.hole_centers.size());
  double hmin = std::numeric_limits<double>::infinity();
  std::vector<double> h(n);
  for (int j = 0; j < n; ++j) {
    h[j] = p.h1(Point(xp - p.hole_centers[j]));
    hmin = std::min(hmin, h[j]);
  }
  double sum = 0.0;
  for (int j = 0; j < n; ++j) sum += std::exp(-(h[j] - hmin));
  // log sum_j e^{-h_j} = -hmin + log sum_j e^{-(h_j - hmin)}
  const double lse = -hmin + std::log(sum);
  return std::log(static_cast<double>(n)) - wall_factor(p, x[x.size() - 1]) * lse;
}

}  // namespace

double multislit_value(const MultislitParams& params, const Point& x) {
  double v = raw_multislit(params, x);
  if (params.subtract_offset) v -= std::log(static_cast<double>(params.hole_centers.size()));
  return params.scale * v;
}

MultislitWeight multislit_weight(const MultislitParams& params, const Grid& sample_grid) {
  if (params.hole_centers.empty()) throw Error("multislit_weight: need at least one hole");
  if (!params.h1) throw Error("multislit_weight: missing hole profile h1");
  if (params.scale < 0.0) throw Error("multislit_weight: scale must be nonnegative");
  if (sample_grid.dim() < 1) throw Error("multislit_weight: invalid sample grid");
  const Eigen::Index dprime = sample_grid.dim() - 1;
  for (const Point& a : params.hole_centers)
    if (a.size() != dprime) throw Error("multislit_weight: hole centers must live in R^{d-1}");

  MultislitWeight out;
  if (std::abs(params.h1(Point::Zero(dprime))) > 1e-12)
    out.warnings.push_back("h1(0) != 0: holes are not fully transparent");
  for (int i = 0; i < sample_grid.points(sample_grid.dim() - 1); ++i) {
    const double k = wall_factor(params, sample_grid.coordinate(sample_grid.dim() - 1, i));
    if (k < -1e-12 || k > 1.0 + 1e-12) throw Error("multislit_weight: wall profile k outside [0,1]");
  }

  const double log_n = std::log(static_cast<double>(params.hole_centers.size()));
  const double n = params.scale;
  WeightSpec w;
  w.spin_dim = 1;
  w.eval = [params](double, const Point& x) {
    SpinMatrix m(1, 1);
    m(0, 0) = multislit_value(params, x);
    return m;
  };
  w.time_modulus = identity_modulus();
  w.name = "multislit";
  const double offset = params.subtract_offset ? n * log_n : 0.0;

  if (params.wall_h2) {
    double cstar = 0.0;
    for (Eigen::Index f = 0; f < sample_grid.size(); ++f) {
      const Point x = sample_grid.point(f);
      const double lhs = japanese(transverse(x)) * std::exp(-params.wall_h2(x[x.size() - 1]));
      cstar = std::max(cstar, lhs / (1.0 + raw_multislit(params, x)));
    }
    cstar *= 1.1;
    out.c_star = cstar;
    auto h2 = params.wall_h2;
    w.lower_bound = [h2, cstar, n](double, const Point& x) {
      return n * japanese(transverse(x)) * std::exp(-h2(x[x.size() - 1])) / cstar;
    };
    w.shift = n + offset;
  } else {
    w.shift = offset;
  }
  out.spec = std::move(w);
  return out;
}

std::function<double(const Point&)> radial_bump(const Point& center, double inner, double outer) {
  if (!(inner >= 0.0) || !(outer > inner)) throw Error("radial_bump: need 0 <= inner < outer");
  return [center, inner, outer](const Point& x) {
    return 1.0 - smooth_step(((x - center).norm() - inner) / (outer - inner));
  };
}

WeightSpec bump_region_weight(std::function<double(const Point&)> h_o, double strength, int spin_dim) {
  if (strength < 0.0) throw Error("bump_region_weight: strength must be nonnegative");
  WeightSpec w = zero_weight(spin_dim);
  w.name = "bump_region";
  if (strength == 0.0) return w;
  w.eval = [h_o = std::move(h_o), strength, spin_dim](double, const Point& x) {
    return SpinMatrix(strength * h_o(x) * SpinMatrix::Identity(spin_dim, spin_dim));
  };
  return w;
}

WeightSpec scale_weight(const WeightSpec& w, double c) {
  if (c < 0.0) throw Error("scale_weight: factor must be nonnegative");
  if (c == 0.0 || w.is_zero()) return zero_weight(w.spin_dim);
  WeightSpec out = w;
  out.eval = [inner = w.eval, c](double t, const Point& x) { return SpinMatrix(c * inner(t, x)); };
  if (w.lower_bound) out.lower_bound = [inner = w.lower_bound, c](double t, const Point& x) { return c * inner(t, x); };
  out.shift = c * w.shift;
  if (w.time_modulus) out.time_modulus = [inner = w.time_modulus, c](double rho) { return std::max(rho, c * inner(rho)); };
  return out;
}

WeightSpec sum_weights(const std::vector<WeightSpec>& ws) {
  if (ws.empty()) throw Error("sum_weights: empty list");
  const int l = ws.front().spin_dim;
  for (const auto& w : ws)
    if (w.spin_dim != l) throw Error("sum_weights: mixed spin dimensions");
  if (ws.size() == 1) return ws.front();

  WeightSpec out = zero_weight(l);
  out.name = "sum";
  bool any_eval = false, any_lower = false, modulus_known = true;
  for (const auto& w : ws) {
    any_eval = any_eval || !w.is_zero();
    any_lower = any_lower || static_cast<bool>(w.lower_bound);
    out.shift += w.shift;
    out.time_dependent = out.time_dependent || w.time_dependent;
    out.diagonal = out.diagonal && w.diagonal;
    if (w.time_dependent && !w.time_modulus) modulus_known = false;
  }
  if (any_eval) {
    out.eval = [ws, l](double t, const Point& x) {
      SpinMatrix m = SpinMatrix::Zero(l, l);
      for (const auto& w : ws)
        if (!w.is_zero()) m += w(t, x);
      return m;
    };
  }
  if (any_lower) {
    out.lower_bound = [ws](double t, const Point& x) {
      double s = 0.0;
      for (const auto& w : ws) s += w.w(t, x);
      return s;
    };
  }
  if (modulus_known) {
    out.time_modulus = [ws](double rho) {
      double s = 0.0;
      for (const auto& w : ws) s += w.time_modulus ? w.time_modulus(rho) : rho;
      return s;
    };
  } else {
    out.time_modulus = nullptr;
  }
  return out;
}

SpinMatrix damping_factor(const WeightSpec& w, double t, const Point& x, double rho) {
  if (rho < 0.0) throw Error("damping_factor: rho must be nonnegative");
  const int l = w.spin_dim;
  if (w.is_zero()) return SpinMatrix::Identity(l, l);
  const SpinMatrix m = w(t, x);
  if (m.rows() != l || m.cols() != l) throw Error("damping_factor: weight returned wrong shape");
  if (w.diagonal && m.isDiagonal(0.0)) {
    SpinMatrix r = SpinMatrix::Zero(l, l);
    for (int i = 0; i < l; ++i) r(i, i) = std::exp(-rho * m(i, i).real());
    return r;
  }
  if (hermiticity_defect(m) > 1e-12) throw Error("damping_factor: weight is not Hermitian");
  return hermitian_exp(m, -rho);
}

}  // namespace rfpi
