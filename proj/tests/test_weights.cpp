#include <doctest.h>

#include <cmath>
#include <random>

#include "rfpi/matrix_exp.hpp"
#include "rfpi/weight_checks.hpp"
#include "rfpi/weights.hpp"

using namespace rfpi;

namespace {

Point pt(double x) {
  Point p(1);
  p[0] = x;
  return p;
}

Point pt(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

WeightSpec fixed_weight(const SpinMatrix& m) {
  WeightSpec w;
  w.spin_dim = static_cast<int>(m.rows());
  w.eval = [m](double, const Point&) { return m; };
  w.name = "fixed";
  return w;
}

SpinMatrix random_hermitian(std::mt19937_64& rng, int l) {
  std::normal_distribution<double> n(0.0, 1.0);
  SpinMatrix a(l, l);
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < l; ++j) a(i, j) = Complex(n(rng), n(rng));
  return SpinMatrix(0.5 * (a + a.adjoint()));
}

// Taylor series with scaling and squaring.
SpinMatrix series_exp(const SpinMatrix& a, int terms) {
  int squarings = 0;
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  while (std::ldexp(norm, -squarings) > 0.25) ++squarings;
  const SpinMatrix s = a * std::ldexp(1.0, -squarings);
  SpinMatrix result = SpinMatrix::Identity(a.rows(), a.cols());
  SpinMatrix term = result;
  for (int k = 1; k < terms; ++k) {
    term = (term * s / double(k)).eval();
    result += term;
  }
  for (int i = 0; i < squarings; ++i) result = (result * result).eval();
  return result;
}

// Two-hole mask with a compactly supported wall profile (k = 0 for |x_d| >= 1).
MultislitParams compact_mask(std::vector<Point> holes) {
  MultislitParams p;
  p.hole_centers = std::move(holes);
  p.h1 = [](const Point& y) { return hole_profile(y.norm() / 0.5); };
  p.wall_k = [](double xd) { return smooth_step(2.0 * (1.0 - std::abs(xd))); };
  return p;
}

}  // namespace

TEST_CASE("corridor weight entries") {
  const WeightSpec w = corridor_weight({[](double t) { return pt(std::sin(t), 0.0); }}, 1.5, 2.0);
  const double t = 0.7;
  const Point a = pt(std::sin(t), 0.0);
  CHECK(std::abs(w(t, a)(0, 0)) == 0.0);
  const Point at_delta = a + pt(0.6, std::sqrt(1.5 * 1.5 - 0.6 * 0.6));
  CHECK(w(t, at_delta)(0, 0).real() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(w.shift == doctest::Approx(1.0 / (1.5 * 1.5)).epsilon(1e-6));
  CHECK(w.time_dependent);
  CHECK_THROWS_AS(corridor_weight({[](double) { return pt(0.0); }}, 0.0, 1.0), Error);
}

TEST_CASE("corridor weight satisfies the semidefinite bound on a 32^2 lattice") {
  const WeightSpec w = corridor_weight({[](double t) { return pt(std::sin(t), 0.0); }}, 1.0, 2.0);
  const Grid g = make_grid(2, -6.0, 6.0, 32);
  double margin = 1e300;
  for (double t : {0.0, 0.5, 1.0, 1.5, 2.0})
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const Point x = g.point(i);
      margin = std::min(margin, min_eigenvalue(w(t, x)) - (w.w(t, x) - w.shift));
    }
  CHECK(margin >= -1e-10);
  const AssumptionReport r = verify_assumption_2d(w, g, {0.0, 0.5, 1.0, 1.5, 2.0}, g.spacing(0) / 8);
  CHECK(r.pass);
  CHECK(r.min_margin == doctest::Approx(margin).epsilon(1e-12));
}

TEST_CASE("mollifier") {
  CHECK(mollifier_f(-1.0) == 0.0);
  CHECK(mollifier_f(0.0) == 0.0);
  CHECK(mollifier_f(1.0) == doctest::Approx(0.3678794412).epsilon(1e-10));
  const double h = 1e-3;
  CHECK(std::abs((mollifier_f(h) - mollifier_f(0.0)) / h) < 1e-8);
  CHECK(std::abs((mollifier_f(0.0) - mollifier_f(-h)) / h) < 1e-8);
  CHECK(smooth_step(-0.1) == 0.0);
  CHECK(smooth_step(1.1) == 1.0);
  CHECK(smooth_step(0.5) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("hole profile") {
  CHECK(hole_profile(0.0) == 0.0);
  CHECK(hole_profile(0.6) == doctest::Approx(0.18));
  CHECK(hole_profile(3.0) == doctest::Approx(3.0));
  for (double r = 1.0; r < 2.0; r += 0.05) CHECK(hole_profile(r) >= 0.5);
}

TEST_CASE("ball confinement weight") {
  const Grid g = make_grid(2, -4.0, 4.0, 32);
  const Point a = pt(0.5, -0.2);
  const double b = 1.2;
  const WeightSpec w = ball_confinement_weight({a}, {b}, 1.0, g);
  // inside the ball the damping is exactly 1
  for (double r : {0.0, 0.5, b}) {
    const Point x = a + pt(r * 0.6, r * 0.8);
    CHECK(damping_factor(w, 0.0, x, 1.0)(0, 0) == Complex(1.0));
  }
  for (double lambda : {0.1, 0.5, 1.3}) {
    const Point x = a + pt(0.0, b + lambda);
    const double expected = std::exp(-(b + lambda) * (b + lambda) * std::exp(-1.0 / lambda));
    CHECK(damping_factor(w, 0.0, x, 1.0)(0, 0).real() == doctest::Approx(expected).epsilon(1e-13));
  }
  const WeightSpec w2 = ball_confinement_weight({a}, {b}, 2.0, g);
  for (Eigen::Index i = 0; i < g.size(); i += 7)
    CHECK(w2(0.0, g.point(i))(0, 0).real() == doctest::Approx(2.0 * w(0.0, g.point(i))(0, 0).real()));
  CHECK(w2.shift == doctest::Approx(2.0 * w.shift));
  CHECK_THROWS_AS(ball_confinement_weight({a}, {-1.0}, 1.0, g), Error);
}

TEST_CASE("ball confinement bound holds on the sampling lattice") {
  const Grid g = make_grid(1, -6.0, 6.0, 64);
  const WeightSpec w = ball_confinement_weight({pt(0.0), pt(1.0)}, {1.0, 0.5}, 10.0, g);
  const AssumptionReport r = verify_assumption_2d(w, g, {0.0}, g.spacing(0) / 8);
  CHECK(r.pass);
  CHECK(std::isfinite(r.growth_ratio[0]));
  CHECK(std::isfinite(r.growth_ratio[1]));
  CHECK(r.growth_ratio[0] > 0.0);
}

TEST_CASE("multislit mask values") {
  const Grid g = make_grid(2, -6.0, 6.0, 32);
  const MultislitParams one = compact_mask({pt(0.0)});
  CHECK(multislit_value(one, pt(2.0, 1.5)) == 0.0);
  CHECK(multislit_value(one, pt(0.0, 0.0)) == 0.0);
  CHECK(multislit_value(one, pt(3.0, 0.0)) == doctest::Approx(hole_profile(6.0)));

  const MultislitParams two = compact_mask({pt(-3.0), pt(3.0)});
  // the other hole contributes exp(-h1(6 / 0.5)) = exp(-12) < 1e-5 relative
  CHECK(multislit_value(two, pt(-3.0, 0.0)) == doctest::Approx(std::log(2.0) - std::log1p(std::exp(-12.0))).epsilon(1e-12));
  CHECK(std::abs(multislit_value(two, pt(-3.0, 0.0)) - std::log(2.0)) < 1e-5);

  MultislitParams offset = two;
  offset.subtract_offset = true;
  CHECK(multislit_value(offset, pt(0.7, 0.3)) == doctest::Approx(multislit_value(two, pt(0.7, 0.3)) - std::log(2.0)));
  MultislitParams scaled = two;
  scaled.scale = 3.0;
  CHECK(multislit_value(scaled, pt(0.7, 0.3)) == doctest::Approx(3.0 * multislit_value(two, pt(0.7, 0.3))));

  const MultislitWeight mw = multislit_weight(two, g);
  CHECK(mw.warnings.empty());
  CHECK(mw.spec(0.0, pt(1.0, 0.2))(0, 0).real() == doctest::Approx(multislit_value(two, pt(1.0, 0.2))));
}

TEST_CASE("multislit mask warnings and errors") {
  const Grid g = make_grid(2, -6.0, 6.0, 32);
  MultislitParams p = compact_mask({pt(0.0)});
  p.h1 = [](const Point& y) { return 0.1 + y.squaredNorm(); };
  CHECK_FALSE(multislit_weight(p, g).warnings.empty());
  p = compact_mask({pt(0.0)});
  p.wall_k = [](double) { return 1.5; };
  CHECK_THROWS_AS(multislit_weight(p, g), Error);
  p = compact_mask({pt(0.0, 0.0)});
  CHECK_THROWS_AS(multislit_weight(p, g), Error);
}

TEST_CASE("multislit bounds on sampled lattices") {
  const Grid g = make_grid(2, -6.0, 6.0, 64);
  const Grid g2 = make_grid(2, -6.0, 6.0, 128);
  const double fd = g.spacing(0) / 8;
  const MultislitParams one = standard_multislit({pt(0.0)}, 2.0, 1.0);
  const MultislitReport r1 = verify_multislit_bounds(one, g, fd);
  CHECK(r1.min_value >= 0.0);
  CHECK(r1.pass);

  const MultislitParams two = standard_multislit({pt(-2.5), pt(2.5)}, 1.0, 1.0);
  const MultislitReport r2 = verify_multislit_bounds(two, g, fd);
  CHECK(r2.min_hole_margin >= -1e-8);
  CHECK(r2.pass);
  const MultislitReport r2b = verify_multislit_bounds(two, g2, fd);
  CHECK(std::isfinite(r2.c_star));
  CHECK(std::abs(r2b.c_star - r2.c_star) <= 0.1 * r2.c_star);

  MultislitParams offset = two;
  offset.subtract_offset = true;
  CHECK_THROWS_AS(verify_multislit_bounds(offset, g, fd), Error);
}

TEST_CASE("bump region weight") {
  const auto h = radial_bump(pt(0.0, 0.0), 0.5, 1.0);
  CHECK(h(pt(0.3, 0.0)) == 1.0);
  CHECK(h(pt(0.0, 1.0)) == 0.0);
  CHECK(h(pt(0.75, 0.0)) > 0.0);
  CHECK(h(pt(0.75, 0.0)) < 1.0);
  const WeightSpec w = bump_region_weight(h, 4.0, 2);
  const SpinMatrix inside = damping_factor(w, 0.0, pt(0.2, 0.1), 1.0);
  CHECK((inside - std::exp(-4.0) * SpinMatrix::Identity(2, 2)).norm() < 1e-15);
  CHECK(w(0.0, pt(1.5, 0.0)).isZero(0.0));
  CHECK(w.w(0.0, pt(0.0, 0.0)) == 0.0);
  CHECK(w.shift == 0.0);
  const WeightSpec off = bump_region_weight(h, 0.0);
  CHECK(damping_factor(off, 0.0, pt(0.0, 0.0), 3.0)(0, 0) == Complex(1.0));
}

TEST_CASE("sum of weights") {
  const Grid g = make_grid(1, -4.0, 4.0, 32);
  const WeightSpec a = corridor_weight({[](double t) { return pt(t); }}, 1.0, 1.0);
  const WeightSpec b = ball_confinement_weight({pt(0.5)}, {1.0}, 2.0, g);
  const Point x = pt(1.7);
  CHECK(sum_weights({a})(0.3, x)(0, 0) == a(0.3, x)(0, 0));
  CHECK(sum_weights({a, zero_weight(1)})(0.3, x)(0, 0) == a(0.3, x)(0, 0));
  const WeightSpec s = sum_weights({a, b});
  CHECK(std::abs(s(0.3, x)(0, 0) - a(0.3, x)(0, 0) - b(0.3, x)(0, 0)) < 1e-12);
  CHECK(s.shift == doctest::Approx(a.shift + b.shift));
  CHECK(s.w(0.3, x) == doctest::Approx(a.w(0.3, x) + b.w(0.3, x)));
  CHECK_THROWS_AS(sum_weights({a, zero_weight(2)}), Error);
  CHECK_THROWS_AS(sum_weights({}), Error);
}

TEST_CASE("scale_weight") {
  const WeightSpec a = corridor_weight({[](double t) { return pt(t); }}, 1.0, 1.0);
  const WeightSpec s = scale_weight(a, 2.5);
  CHECK(s(0.4, pt(1.0))(0, 0).real() == doctest::Approx(2.5 * a(0.4, pt(1.0))(0, 0).real()));
  CHECK(s.shift == doctest::Approx(2.5 * a.shift));
  CHECK(scale_weight(a, 0.0).is_zero());
  CHECK_THROWS_AS(scale_weight(a, -1.0), Error);
}

TEST_CASE("damping factor") {
  const Point x = pt(0.2);
  CHECK(damping_factor(zero_weight(3), 0.0, x, 2.0) == SpinMatrix::Identity(3, 3));

  SpinMatrix d = SpinMatrix::Zero(3, 3);
  d.diagonal() << 0.5, 1.0, 2.0;
  const SpinMatrix e = damping_factor(fixed_weight(d), 0.0, x, 0.7);
  for (int i = 0; i < 3; ++i) CHECK(e(i, i).real() == doctest::Approx(std::exp(-0.7 * d(i, i).real())).epsilon(1e-14));

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const SpinMatrix h = random_hermitian(rng, 3);
    const SpinMatrix got = damping_factor(fixed_weight(h), 0.0, x, 0.7);
    const SpinMatrix oracle = series_exp(SpinMatrix(-0.7 * h), 60);
    CHECK((got - oracle).norm() < 1e-12 * oracle.norm());
    // semigroup in rho
    const SpinMatrix a = damping_factor(fixed_weight(h), 0.0, x, 0.3);
    const SpinMatrix b = damping_factor(fixed_weight(h), 0.0, x, 0.4);
    CHECK((a * b - got).norm() < 1e-12 * got.norm());
  }

  SpinMatrix bad = SpinMatrix::Zero(2, 2);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(damping_factor(fixed_weight(bad), 0.0, x, 1.0), Error);
  CHECK_THROWS_AS(damping_factor(fixed_weight(d), 0.0, x, -0.1), Error);
}

TEST_CASE("damping factor norm bound at sampled points") {
  const Grid g = make_grid(2, -5.0, 5.0, 16);
  const WeightSpec w = corridor_weight({[](double t) { return pt(std::cos(t), 1.0); },
                                        [](double t) { return pt(-1.0, std::sin(2.0 * t)); }},
                                       0.8, 1.0);
  for (double t : {0.0, 0.4, 1.0})
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const Point x = g.point(i);
      const double rho = 0.35;
      CHECK(operator_norm(damping_factor(w, t, x, rho)) <= std::exp(-rho * (w.w(t, x) - w.shift)) * (1.0 + 1e-12));
    }
}

TEST_CASE("assumption report: quadratic corridor has the analytic gradient ratio") {
  const Grid g = make_grid(2, -6.0, 6.0, 32);
  const WeightSpec w = corridor_weight({[](double) { return pt(0.0, 0.0); }}, 1.0, 1.0);
  const AssumptionReport r = verify_assumption_2d(w, g, {0.0}, g.spacing(0) / 8);
  // d_a W = x_a / delta^2, so the sup over |alpha| = 1 is max_a |x_a| / <x>
  double sup = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const Point x = g.point(i);
    sup = std::max(sup, x.cwiseAbs().maxCoeff() / std::sqrt(1.0 + x.squaredNorm()));
  }
  CHECK(r.linear_ratio[0] == doctest::Approx(sup).epsilon(1e-8));
  CHECK(r.linear_ratio[0] <= 1.0);
  CHECK(r.pass);
}

TEST_CASE("assumption report for the zero weight") {
  const Grid g = make_grid(2, -6.0, 6.0, 16);
  const AssumptionReport r = verify_assumption_2d(zero_weight(2), g, {0.0, 1.0}, 0.01);
  CHECK(r.min_margin == 0.0);
  CHECK(r.growth_ratio[0] == 0.0);
  CHECK(r.growth_ratio[1] == 0.0);
  CHECK(r.linear_ratio[0] == 0.0);
  CHECK(r.linear_ratio[1] == 0.0);
  CHECK(r.time_modulus_ratio == 0.0);
  CHECK(r.pass);
  CHECK(format_key_values(r.key_values()).find("min_margin=") != std::string::npos);
}

TEST_CASE("assumption report catches a broken lower bound") {
  const Grid g = make_grid(1, -6.0, 6.0, 32);
  WeightSpec w = corridor_weight({[](double) { return pt(0.0); }}, 1.0, 1.0);
  w.shift = 0.0;
  w.lower_bound = [](double, const Point& x) { return 1.0 + x.squaredNorm(); };
  CHECK_FALSE(verify_assumption_2d(w, g, {0.0}, 0.01).pass);
}
