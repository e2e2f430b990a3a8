#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "rfpi/field_io.hpp"
#include "rfpi/spectral.hpp"
#include "rfpi/spinor_field.hpp"

using namespace rfpi;

namespace {

Point pt(double x) {
  Point p(1);
  p[0] = x;
  return p;
}

SpinorField packet(const Grid& g, double c, double p0, double width, std::vector<Complex> weights = {1.0}) {
  PacketSpec s;
  s.center = Point::Constant(g.dim(), c);
  s.momentum = Point::Constant(g.dim(), p0);
  s.width = width;
  s.component_weights = std::move(weights);
  return gaussian_packet(g, s);
}

SpinorField from_function(const Grid& g, const std::function<Complex(const Point&)>& fn) {
  SpinorField f(g, 1);
  for (Eigen::Index p = 0; p < g.size(); ++p) f.values()(0, p) = fn(g.point(p));
  return f;
}

}  // namespace

TEST_CASE("make_grid cell volumes") {
  CHECK(make_grid(1, -10.0, 10.0, 256).cell_volume() == doctest::Approx(0.078125).epsilon(1e-15));
  CHECK(make_grid(2, -5.0, 5.0, 64).cell_volume() == doctest::Approx(0.0244140625).epsilon(1e-15));
  const Grid g = make_grid(2, {{-1.0, 3.0}, {0.0, 2.0}}, {16, 8});
  CHECK(g.size() == 128);
  CHECK(g.cell_volume() == doctest::Approx(4.0 / 16 * 2.0 / 8));
}

TEST_CASE("make_grid rejects bad input") {
  CHECK_THROWS_AS(make_grid(3, -1.0, 1.0, 16), Error);
  CHECK_THROWS_AS(make_grid(0, -1.0, 1.0, 16), Error);
  CHECK_THROWS_AS(make_grid(1, 1.0, 1.0, 16), Error);
  CHECK_THROWS_AS(make_grid(1, -1.0, 1.0, 4), Error);
}

TEST_CASE("grid layout: last axis fastest") {
  const Grid g = make_grid(2, {{0.0, 4.0}, {0.0, 8.0}}, {8, 16});
  const Point x = g.point(g.flatten(3, 5));
  CHECK(x[0] == doctest::Approx(3 * 0.5));
  CHECK(x[1] == doctest::Approx(5 * 0.5));
  CHECK(g.unflatten(g.flatten(3, 5))[0] == 3);
  CHECK(g.unflatten(g.flatten(3, 5))[1] == 5);
}

TEST_CASE("inner_product basics") {
  const Grid g = make_grid(1, -10.0, 10.0, 64);
  SpinorField zero(g, 1);
  CHECK(inner_product(zero, zero) == Complex(0.0));

  const SpinorField one = from_function(g, [](const Point&) { return Complex(1.0); });
  CHECK(std::abs(inner_product(one, one) - Complex(20.0)) < 1e-12);

  // first two Fourier modes of the box are orthogonal under the lattice sum
  const double k = 2.0 * kPi / 20.0;
  const SpinorField m1 = from_function(g, [k](const Point& x) { return std::polar(1.0, k * x[0]); });
  const SpinorField m2 = from_function(g, [k](const Point& x) { return std::polar(1.0, 2.0 * k * x[0]); });
  CHECK(std::abs(inner_product(m1, m2)) < 1e-12);
  CHECK(std::abs(inner_product(one, m1)) < 1e-12);
}

TEST_CASE("inner_product conjugates the second argument") {
  const Grid g = make_grid(1, -10.0, 10.0, 64);
  const SpinorField a = packet(g, -1.0, 0.7, 1.0, {1.0, Complex(0.0, 2.0)});
  const SpinorField b = packet(g, 0.5, -0.3, 1.5, {Complex(0.3, 0.1), 1.0});
  const Complex ab = inner_product(a, b);
  const Complex ba = inner_product(b, a);
  CHECK(std::abs(ab - std::conj(ba)) < 1e-15);
  CHECK(std::abs(inner_product(Complex(0.0, 1.0) * a, b) - Complex(0.0, 1.0) * ab) < 1e-14);
  CHECK(std::abs(inner_product(a, Complex(0.0, 1.0) * b) + Complex(0.0, 1.0) * ab) < 1e-14);
}

TEST_CASE("inner_product rejects mismatched fields") {
  const SpinorField a(make_grid(1, -10.0, 10.0, 64), 1);
  const SpinorField b(make_grid(1, -10.0, 10.0, 32), 1);
  const SpinorField c(make_grid(1, -10.0, 10.0, 64), 2);
  CHECK_THROWS_AS(inner_product(a, b), Error);
  CHECK_THROWS_AS(inner_product(a, c), Error);
}

TEST_CASE("l2_norm") {
  const Grid g = make_grid(1, -10.0, 10.0, 256);
  CHECK(l2_norm(SpinorField(g, 2)) == 0.0);
  const SpinorField f = packet(g, 0.5, 1.0, 1.0);
  CHECK(std::abs(l2_norm(f) - 1.0) < 1e-10);
  CHECK(std::abs(l2_norm(Complex(3.0) * f) - 3.0 * l2_norm(f)) < 1e-12);
}

TEST_CASE("gaussian_packet amplitude matches the continuum normalization") {
  // continuum: |f(c)| = (2 pi w^2)^(-d/4)
  for (int d : {1, 2}) {
    const Grid g = make_grid(d, -10.0, 10.0, d == 1 ? 256 : 96);
    const double w = 0.9;
    const SpinorField f = packet(g, 0.0, 0.0, w);
    const Eigen::Index centre = d == 1 ? g.flatten(g.points(0) / 2) : g.flatten(g.points(0) / 2, g.points(1) / 2);
    CHECK(g.point(centre).norm() < 1e-12);
    CHECK(std::abs(f.values()(0, centre)) == doctest::Approx(std::pow(2.0 * kPi * w * w, -0.25 * d)).epsilon(1e-10));
  }
}

TEST_CASE("gaussian_packet symmetry, normalization and components") {
  const Grid g = make_grid(1, -10.0, 10.0, 128);
  const SpinorField f = packet(g, 0.0, 0.0, 1.2);
  const int n = g.points(0);
  for (int i = 1; i < n; ++i) {
    CHECK(std::abs(f.values()(0, i) - f.values()(0, n - i)) < 1e-12);
    CHECK(f.values()(0, i).imag() == 0.0);
    CHECK(f.values()(0, i).real() > 0.0);
  }
  for (double w : {0.3, 0.8, 2.0}) {
    const SpinorField h = packet(g, -2.0, 3.0, w, {1.0, Complex(0.5, 0.5), 2.0});
    CHECK(std::abs(l2_norm(h) - 1.0) < 1e-10);
  }
  const SpinorField only_first = packet(g, 1.0, 0.5, 1.0, {1.0, 0.0, 0.0});
  CHECK(only_first.values().row(1).isZero(0.0));
  CHECK(only_first.values().row(2).isZero(0.0));
}

TEST_CASE("gaussian_packet flags wide packets and rejects bad widths") {
  const Grid g = make_grid(1, -3.0, 3.0, 64);
  PacketSpec s;
  s.center = pt(0.0);
  s.momentum = pt(0.0);
  s.width = 2.5;
  bool wide = false;
  gaussian_packet(g, s, &wide);
  CHECK(wide);
  s.width = 0.5;
  gaussian_packet(g, s, &wide);
  CHECK_FALSE(wide);
  s.width = 0.0;
  CHECK_THROWS_AS(gaussian_packet(g, s), Error);
}

TEST_CASE("sobolev_norm") {
  const Grid g = make_grid(1, -10.0, 10.0, 128);
  const SpinorField f = packet(g, 0.3, 1.0, 1.0, {1.0, 0.5});
  CHECK(sobolev_norm(f, 0) == l2_norm(f));
  CHECK(sobolev_norm(SpinorField(g, 1), 1) == 0.0);
  CHECK(sobolev_norm(SpinorField(g, 1), 2) == 0.0);
  CHECK_THROWS_AS(sobolev_norm(f, 3), Error);
  CHECK_THROWS_AS(sobolev_norm(f, -1), Error);
  for (int a : {0, 1, 2})
    CHECK(sobolev_norm(Complex(-2.5) * f, a) == doctest::Approx(2.5 * sobolev_norm(f, a)).epsilon(1e-13));
}

TEST_CASE("sobolev_norm of a lattice plane wave") {
  const Grid g = make_grid(1, -10.0, 10.0, 64);
  const double k = 3.0 * 2.0 * kPi / 20.0;
  const SpinorField f = from_function(g, [k](const Point& x) { return std::polar(1.0, k * x[0]); });
  double x2 = 0.0;
  for (int i = 0; i < g.points(0); ++i) x2 += std::pow(g.coordinate(0, i), 2) * g.cell_volume();
  const double norm = std::sqrt(20.0);
  const double expected = norm * (1.0 + k) + std::sqrt(x2);
  CHECK(std::abs(sobolev_norm(f, 1) - expected) < 1e-8 * expected);
}

TEST_CASE("norm_report orders l2 below b1") {
  const Grid g = make_grid(1, -10.0, 10.0, 128);
  const NormReport r = norm_report(packet(g, 1.0, 2.0, 0.7));
  CHECK(r.l2 <= r.b1);
  CHECK(r.b2.has_value());
  CHECK_FALSE(norm_report(packet(g, 1.0, 2.0, 0.7), false).b2.has_value());
}

TEST_CASE("Parseval under forward and inverse transforms") {
  const Grid g = make_grid(2, -6.0, 6.0, 32);
  const SpinorField f = packet(g, 0.5, 1.5, 0.9);
  Eigen::ArrayXcd v = f.component(0);
  const double before = v.abs2().sum();
  spectral::forward(g, v);
  CHECK(v.abs2().sum() / static_cast<double>(g.size()) == doctest::Approx(before).epsilon(1e-12));
  spectral::inverse(g, v);
  CHECK((v - f.component(0)).abs().maxCoeff() < 1e-14);
}

TEST_CASE("spectral derivative of a resolved mode is exact") {
  const Grid g = make_grid(1, 0.0, 2.0 * kPi, 32);
  Eigen::ArrayXcd v(g.size()), dv(g.size()), d2v(g.size());
  for (int i = 0; i < g.points(0); ++i) {
    const double x = g.coordinate(0, i);
    v[i] = std::sin(5.0 * x);
    dv[i] = 5.0 * std::cos(5.0 * x);
    d2v[i] = -25.0 * std::sin(5.0 * x);
  }
  CHECK((spectral::derivative(g, v, 0, 1) - dv).abs().maxCoeff() < 1e-12);
  CHECK((spectral::derivative(g, v, 0, 2) - d2v).abs().maxCoeff() < 1e-11);
}

TEST_CASE("boundary_mass and multiply_pointwise") {
  const Grid g = make_grid(1, -10.0, 10.0, 256);
  const SpinorField centred = packet(g, 0.0, 0.0, 0.5);
  CHECK(boundary_mass(centred) < 1e-30);
  const SpinorField edge = packet(g, 9.5, 0.0, 0.5);
  CHECK(boundary_mass(edge) > 0.4);

  const SpinorField doubled = multiply_pointwise(centred, [](const Point&) { return Complex(2.0); });
  CHECK(l2_norm(doubled) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("field_io round trip") {
  const Grid g = make_grid(2, {{-3.0, 3.0}, {-2.0, 4.0}}, {16, 8});
  PacketSpec s;
  s.center = Point::Zero(2);
  s.momentum = Point::Constant(2, 0.4);
  s.component_weights = {1.0, Complex(0.0, 1.0)};
  const SpinorField f = gaussian_packet(g, s);
  const auto stem = std::filesystem::temp_directory_path() / "rfpi_test_field_io";
  write_field(stem, f);
  const SpinorField back = read_field(stem);
  CHECK(back.grid() == g);
  CHECK(back.spin_dim() == 2);
  CHECK((back.values() - f.values()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::filesystem::file_size(stem.string() + ".bin") == static_cast<std::uintmax_t>(g.size() * 2 * 16));
  std::filesystem::remove(stem.string() + ".bin");
  std::filesystem::remove(stem.string() + ".json");
}
