#include "rfpi/weight_checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "rfpi/matrix_exp.hpp"

namespace rfpi {

namespace {

template <typename F>
auto shifted(F&& f, const Point& x, int a, double ha, int b = 0, double hb = 0.0) {
  Point y = x;
  y[a] += ha;
  if (hb != 0.0) y[b] += hb;
  return f(y);
}

// ||d^alpha F|| for |alpha| = 1 (max over axes) and |alpha| = 2 (max over pairs).
template <typename F>
std::array<double, 2> derivative_norms(F&& f, const Point& x, double h) {
  const int d = static_cast<int>(x.size());
  std::array<double, 2> out{0.0, 0.0};
  const SpinMatrix f0 = f(x);
  for (int a = 0; a < d; ++a) {
    const SpinMatrix fp = shifted(f, x, a, h);
    const SpinMatrix fm = shifted(f, x, a, -h);
    out[0] = std::max(out[0], hermitian_norm((fp - fm) / (2.0 * h)));
    out[1] = std::max(out[1], hermitian_norm((fp - 2.0 * f0 + fm) / (h * h)));
    for (int b = a + 1; b < d; ++b) {
      const SpinMatrix mixed = (shifted(f, x, a, h, b, h) - shifted(f, x, a, h, b, -h) - shifted(f, x, a, -h, b, h) +
                          shifted(f, x, a, -h, b, -h)) /
                         (4.0 * h * h);
      out[1] = std::max(out[1], hermitian_norm(mixed));
    }
  }
  return out;
}

double japanese(const Point& x) { return std::sqrt(1.0 + x.squaredNorm()); }

}  // namespace

std::string format_key_values(const KeyValues& kv) {
  std::string s;
  char buf[64];
  for (const auto& [k, v] : kv) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    s += k + "=" + buf + "\n";
  }
  return s;
}

KeyValues AssumptionReport::key_values() const {
  return {{"min_margin", min_margin},
          {"max_hermiticity_defect", max_hermiticity_defect},
          {"growth_ratio_order1", growth_ratio[0]},
          {"growth_ratio_order2", growth_ratio[1]},
          {"linear_ratio_order1", linear_ratio[0]},
          {"linear_ratio_order2", linear_ratio[1]},
          {"time_modulus_ratio", time_modulus_ratio},
          {"pass", pass ? 1.0 : 0.0}};
}

AssumptionReport verify_assumption_2d(const WeightSpec& w, const Grid& grid, const std::vector<double>& times,
                                      double fd_step) {
  if (!(fd_step > 0.0)) throw Error("verify_assumption_2d: fd_step must be positive");
  if (times.empty()) throw Error("verify_assumption_2d: need at least one time");
  AssumptionReport r;
  r.min_margin = std::numeric_limits<double>::infinity();
  const int l = w.spin_dim;
  for (double t : times) {
    auto field = [&w, t](const Point& y) { return w(t, y); };
    for (Eigen::Index f = 0; f < grid.size(); ++f) {
      const Point x = grid.point(f);
      const SpinMatrix m = w(t, x);
      r.max_hermiticity_defect = std::max(r.max_hermiticity_defect, m.isZero(0.0) ? 0.0 : hermiticity_defect(m));
      const double lower = w.w(t, x);
      const SpinMatrix shifted_m = m - (lower - w.shift) * SpinMatrix::Identity(l, l);
      r.min_margin = std::min(r.min_margin, min_eigenvalue(SpinMatrix(0.5 * (shifted_m + shifted_m.adjoint()))));
      if (w.is_zero()) continue;
      const auto dn = derivative_norms(field, x, fd_step);
      for (int o = 0; o < 2; ++o) {
        r.growth_ratio[o] = std::max(r.growth_ratio[o], dn[o] / (1.0 + lower));
        r.linear_ratio[o] = std::max(r.linear_ratio[o], dn[o] / japanese(x));
      }
    }
  }
  if (w.time_dependent && w.time_modulus && times.size() >= 2) {
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
      for (std::size_t j = i + 1; j < times.size(); ++j) {
        const double sigma = w.time_modulus(std::abs(times[j] - times[i]));
        if (!(sigma > 0.0)) continue;
        for (Eigen::Index f = 0; f < grid.size(); ++f) {
          const Point x = grid.point(f);
          const double diff = hermitian_norm(SpinMatrix(w(times[j], x) - w(times[i], x)));
          r.time_modulus_ratio = std::max(r.time_modulus_ratio, diff / (1.0 + x.squaredNorm()) / sigma);
        }
      }
    }
  }
  r.pass = r.min_margin >= -1e-8 && r.max_hermiticity_defect <= 1e-12;
  return r;
}

KeyValues MultislitReport::key_values() const {
  return {{"min_value", min_value},
          {"min_hole_margin", min_hole_margin},
          {"c_alpha_beta_order1", c_alpha_beta[0]},
          {"c_alpha_beta_order2", c_alpha_beta[1]},
          {"c_star", c_star},
          {"pass", pass ? 1.0 : 0.0}};
}

MultislitReport verify_multislit_bounds(const MultislitParams& params, const Grid& grid, double fd_step) {
  if (params.subtract_offset) throw Error("verify_multislit_bounds: weight must keep the log N offset");
  if (params.scale != 1.0) throw Error("verify_multislit_bounds: weight must be unscaled");
  if (!(fd_step > 0.0)) throw Error("verify_multislit_bounds: fd_step must be positive");
  const int d = grid.dim();
  auto k_of = [&params](double xd) {
    if (params.wall_h2) return std::exp(-params.wall_h2(xd));
    return params.wall_k ? params.wall_k(xd) : 1.0;
  };
  auto value = [&params](const Point& y) {
    SpinMatrix m(1, 1);
    m(0, 0) = multislit_value(params, y);
    return m;
  };

  MultislitReport r;
  r.min_value = std::numeric_limits<double>::infinity();
  r.min_hole_margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index f = 0; f < grid.size(); ++f) {
    const Point x = grid.point(f);
    const Point xp = d == 1 ? Point(Point::Zero(0)) : Point(x.head(d - 1));
    const double wv = multislit_value(params, x);
    const double k = k_of(x[d - 1]);
    r.min_value = std::min(r.min_value, wv);
    double hmin = std::numeric_limits<double>::infinity();
    for (const Point& a : params.hole_centers) hmin = std::min(hmin, params.h1(Point(xp - a)));
    r.min_hole_margin = std::min(r.min_hole_margin, wv - hmin * k);
    const auto dn = derivative_norms(value, x, fd_step);
    for (int o = 0; o < 2; ++o) r.c_alpha_beta[o] = std::max(r.c_alpha_beta[o], dn[o] / japanese(xp));
    r.c_star = std::max(r.c_star, japanese(xp) * k / (1.0 + wv));
  }
  r.pass = r.min_value >= -1e-10 && r.min_hole_margin >= -1e-8;
  return r;
}

}  // namespace rfpi
