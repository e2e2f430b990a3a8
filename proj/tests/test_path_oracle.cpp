#include <doctest.h>

#include <array>
#include <cmath>

#include "rfpi/dense_oracle.hpp"
#include "rfpi/matrix_exp.hpp"
#include "rfpi/path_oracle.hpp"

using namespace rfpi;

namespace {

Point pt(double x) {
  Point p(1);
  p[0] = x;
  return p;
}

SpinorField packet(const Grid& g, double c, double p0, double width) {
  PacketSpec s;
  s.center = pt(c);
  s.momentum = pt(p0);
  s.width = width;
  return gaussian_packet(g, s);
}

PropagatorConfig strang(double t1, double dt) {
  PropagatorConfig cfg;
  cfg.t1 = t1;
  cfg.dt = dt;
  return cfg;
}

SpinTerm varying_spin_term() {
  SpinTerm h;
  h.spin_dim = 2;
  h.time_dependent = true;
  h.eval = [](double t, const Point& x) {
    SpinMatrix m(2, 2);
    m << 0.4 * x[0], Complex(0.3 * std::cos(t), 0.2), Complex(0.3 * std::cos(t), -0.2), -0.1 * t;
    return m;
  };
  return h;
}

WeightSpec varying_weight() {
  WeightSpec w;
  w.spin_dim = 2;
  w.time_dependent = true;
  w.diagonal = false;
  w.eval = [](double t, const Point& x) {
    SpinMatrix m(2, 2);
    m << x[0] * x[0], Complex(0.2 * t, 0.1), Complex(0.2 * t, -0.1), 0.5 + std::sin(x[0]);
    return m;
  };
  return w;
}

// Classical RK4 on dU/dtheta = -(i H + W)(theta, q(theta)) U.
SpinMatrix rk4_factor(const PathPolyline& q, const WeightSpec& w, const SpinTerm& h, double s, double t, int steps) {
  auto gen = [&](double th) { return SpinMatrix(-(kI * h(th, q(th)) + w(th, q(th)))); };
  SpinMatrix u = SpinMatrix::Identity(2, 2);
  const double dt = (t - s) / steps;
  for (int i = 0; i < steps; ++i) {
    const double th = s + i * dt;
    const SpinMatrix k1 = gen(th) * u;
    const SpinMatrix k2 = gen(th + dt / 2) * SpinMatrix(u + dt / 2 * k1);
    const SpinMatrix k3 = gen(th + dt / 2) * SpinMatrix(u + dt / 2 * k2);
    const SpinMatrix k4 = gen(th + dt) * SpinMatrix(u + dt * k3);
    u += dt / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return u;
}

SliceKernelConfig kernel(int quad = 1024, double window = 16.0) {
  SliceKernelConfig k;
  k.quad_points = quad;
  k.window = window;
  return k;
}

}  // namespace

TEST_CASE("ordered factor: trivial and constant generators") {
  const PathPolyline q = straight_path(1.0, 0.0, pt(1.0), pt(-1.0));
  const OrderedFactor id = ordered_weight_factor(q, zero_weight(3), zero_spin_term(3), 0.0, 1.0, 8);
  CHECK(id.value == SpinMatrix::Identity(3, 3));
  CHECK(id.bound == 1.0);

  SpinMatrix h(2, 2), w(2, 2);
  h << 0.5, 0.0, 0.0, -0.2;
  w << 1.0, 0.0, 0.0, 0.3;
  WeightSpec ws;
  ws.spin_dim = 2;
  ws.eval = [w](double, const Point&) { return w; };
  const OrderedFactor c = ordered_weight_factor(q, ws, constant_spin_term(h), 0.2, 0.9, 8);
  const double r = 0.7;
  for (int i = 0; i < 2; ++i)
    CHECK(std::abs(c.value(i, i) - std::exp(-r * (kI * h(i, i) + w(i, i)))) < 1e-10);
  CHECK(std::abs(c.value(0, 1)) < 1e-15);
}

TEST_CASE("ordered factor: second order against a refined RK4 solve") {
  const PathPolyline q = straight_path(1.0, 0.0, pt(1.2), pt(-0.8));
  const WeightSpec w = varying_weight();
  const SpinTerm h = varying_spin_term();
  const SpinMatrix ref = rk4_factor(q, w, h, 0.0, 1.0, 2048 * 64);
  const double e1 = (ordered_weight_factor(q, w, h, 0.0, 1.0, 1024).value - ref).norm();
  const double e2 = (ordered_weight_factor(q, w, h, 0.0, 1.0, 2048).value - ref).norm();
  CHECK(e2 < 1e-7);
  CHECK(e1 / e2 >= 3.5);
  const double e3 = (ordered_weight_factor(q, w, h, 0.0, 1.0, 16384).value - ref).norm();
  CHECK(e3 < 1e-8);
}

TEST_CASE("ordered factor cocycle at a polyline vertex") {
  const PathPolyline q({0.0, 0.4, 1.0}, {pt(-1.0), pt(0.3), pt(0.8)});
  const WeightSpec w = varying_weight();
  const SpinTerm h = varying_spin_term();
  const SpinMatrix whole = ordered_weight_factor(q, w, h, 0.0, 1.0, 12).value;
  const SpinMatrix first = ordered_weight_factor(q, w, h, 0.0, 0.4, 12).value;
  const SpinMatrix second = ordered_weight_factor(q, w, h, 0.4, 1.0, 12).value;
  CHECK((whole - second * first).norm() < 1e-10);
  CHECK_THROWS_AS(ordered_weight_factor(q, w, h, 0.5, 0.5, 12), Error);
}

TEST_CASE("ordered factor respects its norm bound") {
  const Grid g = make_grid(1, -6.0, 6.0, 32);
  const WeightSpec w = ball_confinement_weight({pt(0.0), pt(0.5)}, {0.5, 1.0}, 3.0, g);
  SpinMatrix h(2, 2);
  h << 0.3, Complex(0.0, 0.5), Complex(0.0, -0.5), -0.3;
  for (double y : {-4.0, -1.0, 0.5}) {
    const PathPolyline q = straight_path(0.6, 0.0, pt(2.0), pt(y));
    const OrderedFactor f = ordered_weight_factor(q, w, constant_spin_term(h), 0.0, 0.6, 16);
    CHECK(operator_norm(f.value) <= f.bound + 1e-8);
  }
}

TEST_CASE("kernel config validation") {
  SliceKernelConfig k;
  CHECK_NOTHROW(validate_kernel_config(k));
  k.quad_points = 8;
  CHECK_THROWS_AS(validate_kernel_config(k), Error);
  k = SliceKernelConfig{};
  k.window = 2.0;
  CHECK_THROWS_AS(validate_kernel_config(k), Error);
  CHECK(parse_kernel_quadrature("filon_gauss") == KernelQuadrature::filon_gauss);
  CHECK(kernel_quadrature_name(KernelQuadrature::damped_gauss) == "damped_gauss");
}

TEST_CASE("one step of the free kernel equals the free propagator") {
  const Grid g = make_grid(1, -10.0, 10.0, 256);
  const SpinorField f = packet(g, -1.0, 1.0, 0.8);
  const SpinorField ref = evolve_unitary(f, free_particle(1), zero_spin_term(), strang(0.1, 1e-2));
  for (KernelQuadrature quad : {KernelQuadrature::damped_gauss, KernelQuadrature::filon_gauss}) {
    SliceKernelConfig k = kernel();
    k.quadrature = quad;
    const SpinorField u = one_step_kernel_apply(f, free_particle(1), zero_weight(), zero_spin_term(), 0.0, 0.1, k);
    CHECK(l2_norm(u - ref) <= 1e-3);
  }
}

TEST_CASE("one step: constant weight factors out") {
  const Grid g = make_grid(1, -10.0, 10.0, 128);
  const SpinorField f = packet(g, 0.5, -0.5, 0.8);
  const Potential p = harmonic(pt(0.0), 0.8);
  const SpinorField plain = one_step_kernel_apply(f, p, zero_weight(), zero_spin_term(), 0.1, 0.3, kernel());
  const SpinorField damped = one_step_kernel_apply(f, p, constant_weight(1, 1.7), zero_spin_term(), 0.1, 0.3, kernel());
  CHECK(l2_norm(damped - Complex(std::exp(-1.7 * 0.2)) * plain) < 1e-8);
}

TEST_CASE("one step: Gaussian through a harmonic well matches the dense oracle") {
  const Grid g = make_grid(1, -8.0, 8.0, 128);
  const SpinorField f = packet(g, 1.0, 0.5, 0.7);
  const Potential p = harmonic(pt(0.0), 1.2);
  const SpinorField u = one_step_kernel_apply(f, p, zero_weight(), zero_spin_term(), 0.0, 0.1, kernel());
  const SpinorField ref = dense_evolve(f, p, zero_spin_term(), zero_weight(), 0.0, 0.1, 1e-11);
  auto moments = [&g](const SpinorField& v) {
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double x = g.point(i)[0], rho = std::norm(v.values()(0, i)) * g.cell_volume();
      m0 += rho;
      m1 += x * rho;
      m2 += x * x * rho;
    }
    return std::array<double, 3>{m0, m1 / m0, m2 / m0 - (m1 / m0) * (m1 / m0)};
  };
  const auto a = moments(u), b = moments(ref);
  CHECK(std::abs(a[1] - b[1]) < 1e-3);
  CHECK(std::abs(a[2] - b[2]) < 1e-3);
  CHECK(std::abs(a[0] - b[0]) < 3e-3);
}

TEST_CASE("one step rejects unsupported input") {
  const Grid g2 = make_grid(2, -4.0, 4.0, 16);
  PacketSpec s;
  s.center = Point::Zero(2);
  s.momentum = Point::Zero(2);
  CHECK_THROWS_AS(
      one_step_kernel_apply(gaussian_packet(g2, s), free_particle(2), zero_weight(), zero_spin_term(), 0.0, 0.1, kernel()),
      Error);
  const Grid g = make_grid(1, -4.0, 4.0, 32);
  CHECK_THROWS_AS(one_step_kernel_apply(packet(g, 0.0, 0.0, 1.0), free_particle(1), zero_weight(), zero_spin_term(), 0.1, 0.1, kernel()),
                  Error);
}

TEST_CASE("sliced kernel composition") {
  const Grid g = make_grid(1, -10.0, 10.0, 256);
  const SpinorField f = packet(g, -1.0, 1.0, 0.8);
  const double t = 0.4;
  const Subdivision one = make_subdivision(t, 1, TauScheme::uniform, KappaScheme::left);
  const SpinorField single = sliced_kernel_apply(f, free_particle(1), zero_weight(), zero_spin_term(), one, kernel());
  const SpinorField step = one_step_kernel_apply(f, free_particle(1), zero_weight(), zero_spin_term(), 0.0, t, kernel());
  CHECK((single.values() - step.values()).cwiseAbs().maxCoeff() == 0.0);

  const SpinorField ref = evolve_unitary(f, free_particle(1), zero_spin_term(), strang(t, 1e-2));
  const Subdivision four = make_subdivision(t, 4, TauScheme::uniform, KappaScheme::left);
  const SpinorField composed = sliced_kernel_apply(f, free_particle(1), zero_weight(), zero_spin_term(), four, kernel());
  CHECK(l2_norm(single - ref) < 2e-3);
  CHECK(l2_norm(composed - ref) < 2e-3);

  const Subdivision nine = make_subdivision(t, 9, TauScheme::uniform, KappaScheme::left);
  CHECK_THROWS_AS(sliced_kernel_apply(f, free_particle(1), zero_weight(), zero_spin_term(), nine, kernel()), Error);
}

TEST_CASE("sliced kernel approaches the damped evolution as nu grows") {
  const Grid g = make_grid(1, -8.0, 8.0, 128);
  const SpinorField f = packet(g, -1.0, 1.0, 0.7);
  const WeightSpec w = corridor_weight({[](double t) { return pt(-1.0 + t); }}, 1.0, 1.0);
  const double t = 0.5;
  const SpinorField ref = dense_evolve(f, free_particle(1), zero_spin_term(), w, 0.0, t, 1e-11);
  double prev = 1e300;
  for (int nu : {2, 4, 8}) {
    const Subdivision sub = make_subdivision(t, nu, TauScheme::uniform, KappaScheme::left);
    const double d = l2_norm(sliced_kernel_apply(f, free_particle(1), w, zero_spin_term(), sub, kernel()) - ref);
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("observable insertions") {
  const Grid g = make_grid(1, -8.0, 8.0, 128);
  const SpinorField f = packet(g, -0.5, 1.0, 0.8);
  const WeightSpec w = corridor_weight({[](double t) { return pt(-0.5 + t); }}, 1.5, 1.0);
  const Potential p = free_particle(1);
  const Subdivision sub = make_subdivision(0.4, 4, TauScheme::uniform, KappaScheme::left);
  const SpinorField plain = sliced_kernel_apply(f, p, w, zero_spin_term(), sub, kernel());

  const ObservableFn identity = [](const Point&) { return SpinMatrix(SpinMatrix::Identity(1, 1)); };
  const SpinorField with_id = insert_observables(f, p, w, zero_spin_term(), sub, {{0.2, identity}}, kernel());
  CHECK(l2_norm(with_id - plain) < 1e-12);

  const ObservableFn position = [](const Point& x) {
    SpinMatrix m(1, 1);
    m(0, 0) = x[0];
    return m;
  };
  const SpinorField inserted = insert_observables(f, p, w, zero_spin_term(), sub, {{0.0, position}}, kernel());
  const SpinorField xf = multiply_pointwise(f, [](const Point& x) { return Complex(x[0]); });
  const SpinorField direct = sliced_kernel_apply(xf, p, w, zero_spin_term(), sub, kernel());
  CHECK(l2_norm(inserted - direct) < 1e-10);

  CHECK_THROWS_AS(insert_observables(f, p, w, zero_spin_term(), sub, {{0.3, identity}, {0.1, identity}}, kernel()), Error);
  CHECK_THROWS_AS(insert_observables(f, p, w, zero_spin_term(), sub, {{0.5, identity}}, kernel()), Error);
}

TEST_CASE("within-slice insertion agrees with boundary snapping at a boundary") {
  const Grid g = make_grid(1, -8.0, 8.0, 128);
  const SpinorField f = packet(g, -0.5, 1.0, 0.8);
  const WeightSpec w = corridor_weight({[](double t) { return pt(-0.5 + t); }}, 1.5, 1.0);
  const Subdivision sub = make_subdivision(0.4, 4, TauScheme::uniform, KappaScheme::left);
  const ObservableFn z = [](const Point& x) {
    SpinMatrix m(1, 1);
    m(0, 0) = 1.0 / (1.0 + x[0] * x[0]);
    return m;
  };
  const SpinorField snapped = insert_observables(f, free_particle(1), w, zero_spin_term(), sub, {{0.2, z}}, kernel());
  const SpinorField inside = insert_observables(f, free_particle(1), w, zero_spin_term(), sub, {{0.2, z}}, kernel(), true);
  CHECK(l2_norm(snapped - inside) < 1e-10);
}

TEST_CASE("sliced kernel gauge covariance") {
  const Grid g = make_grid(1, -10.0, 10.0, 256);
  const SpinorField f = packet(g, -0.5, 0.8, 0.8);
  const Potential p = harmonic(pt(0.0), 0.6);
  const WeightSpec w = corridor_weight({[](double t) { return pt(-0.5 + t); }}, 1.0, 1.0);
  const GaugeFunction psi = linear_gauge(pt(0.7), 0.3);
  const Potential q = gauge_transform(p, psi);
  const double t = 0.2;
  const Subdivision sub = make_subdivision(t, 2, TauScheme::uniform, KappaScheme::left);
  const SpinorField base = sliced_kernel_apply(f, p, w, zero_spin_term(), sub, kernel());
  const auto phase = [&](double time) {
    return [&, time](const Point& x) { return std::polar(1.0, p.charge * psi.value(time, x) / p.hbar); };
  };
  const SpinorField start = multiply_pointwise(f, phase(0.0));
  const SpinorField gauged = sliced_kernel_apply(start, q, w, zero_spin_term(), sub, kernel());
  CHECK(l2_norm(multiply_pointwise(base, phase(t)) - gauged) < 1e-4);
}
