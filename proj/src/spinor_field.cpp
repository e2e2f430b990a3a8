#include "rfpi/spinor_field.hpp"

#include <cmath>

#include "rfpi/spectral.hpp"

namespace rfpi {

SpinorField::SpinorField(Grid grid, int spin_dim) : grid_(std::move(grid)) {
  if (spin_dim < 1) throw Error("spinor field: spin dimension must be >= 1");
  values_ = Eigen::MatrixXcd::Zero(spin_dim, grid_.size());
}

SpinorField::SpinorField(Grid grid, Eigen::MatrixXcd values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() != grid_.size())
    throw Error("spinor field: values must be l x grid.size()");
}

SpinorField& SpinorField::operator+=(const SpinorField& other) {
  require_compatible(*this, other, "operator+=");
  values_ += other.values_;
  return *this;
}

SpinorField& SpinorField::operator-=(const SpinorField& other) {
  require_compatible(*this, other, "operator-=");
  values_ -= other.values_;
  return *this;
}

SpinorField& SpinorField::operator*=(Complex s) {
  values_ *= s;
  return *this;
}

SpinorField operator+(SpinorField a, const SpinorField& b) { return a += b; }
SpinorField operator-(SpinorField a, const SpinorField& b) { return a -= b; }
SpinorField operator*(Complex s, SpinorField a) { return a *= s; }

void require_compatible(const SpinorField& f, const SpinorField& g, const char* what) {
  if (f.grid() != g.grid()) throw Error(std::string(what) + ": grid mismatch");
  if (f.spin_dim() != g.spin_dim()) throw Error(std::string(what) + ": spin dimension mismatch");
}

namespace {

template <typename T>
T pairwise_impl(const T* p, std::size_t n) {
  if (n <= 32) {
    T s{};
    for (std::size_t i = 0; i < n; ++i) s += p[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_impl(p, h) + pairwise_impl(p + h, n - h);
}

}  // namespace

double pairwise_sum(std::span<const double> values) { return pairwise_impl(values.data(), values.size()); }
Complex pairwise_sum(std::span<const Complex> values) { return pairwise_impl(values.data(), values.size()); }

Complex inner_product(const SpinorField& f, const SpinorField& g) {
  require_compatible(f, g, "inner_product");
  const auto n = static_cast<std::size_t>(f.values().size());
  std::vector<Complex> terms(n);
  const Complex* a = f.values().data();
  const Complex* b = g.values().data();
  for (std::size_t i = 0; i < n; ++i) terms[i] = a[i] * std::conj(b[i]);
  return pairwise_sum(terms) * f.grid().cell_volume();
}

namespace {

double norm_sq(const SpinorField& f) {
  const auto n = static_cast<std::size_t>(f.values().size());
  std::vector<double> terms(n);
  const Complex* a = f.values().data();
  for (std::size_t i = 0; i < n; ++i) terms[i] = std::norm(a[i]);
  return pairwise_sum(terms) * f.grid().cell_volume();
}

double array_norm(const Grid& grid, const Eigen::ArrayXcd& v) {
  std::vector<double> terms(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) terms[i] = std::norm(v[i]);
  return std::sqrt(pairwise_sum(terms) * grid.cell_volume());
}

// Multi-indices with |alpha| = order in dimension d.
std::vector<std::array<int, 2>> multi_indices(int dim, int order) {
  std::vector<std::array<int, 2>> out;
  if (dim == 1) {
    out.push_back({order, 0});
  } else {
    for (int a0 = order; a0 >= 0; --a0) out.push_back({a0, order - a0});
  }
  return out;
}

double component_sobolev(const Grid& grid, const Eigen::ArrayXcd& v, int order) {
  double total = array_norm(grid, v);
  if (order == 0) return total;
  for (const auto& alpha : multi_indices(grid.dim(), order)) {
    Eigen::ArrayXcd moment = v;
    for (Eigen::Index f = 0; f < grid.size(); ++f) {
      const Point x = grid.point(f);
      double w = 1.0;
      for (int a = 0; a < grid.dim(); ++a) w *= std::pow(x[a], alpha[a]);
      moment[f] *= w;
    }
    total += array_norm(grid, moment);

    Eigen::ArrayXcd deriv = v;
    for (int a = 0; a < grid.dim(); ++a) {
      if (alpha[a] > 0) deriv = spectral::derivative(grid, deriv, a, alpha[a]);
    }
    total += array_norm(grid, deriv);
  }
  return total;
}

}  // namespace

double l2_norm(const SpinorField& f) { return std::sqrt(norm_sq(f)); }

double sobolev_norm(const SpinorField& f, int order) {
  if (order < 0 || order > 2) throw Error("sobolev_norm: order must be 0, 1 or 2");
  if (order == 0) return l2_norm(f);
  double s = 0.0;
  for (int c = 0; c < f.spin_dim(); ++c) {
    const double n = component_sobolev(f.grid(), f.component(c), order);
    s += n * n;
  }
  return std::sqrt(s);
}

NormReport norm_report(const SpinorField& f, bool with_b2) {
  NormReport r;
  r.l2 = l2_norm(f);
  r.b1 = sobolev_norm(f, 1);
  if (with_b2) r.b2 = sobolev_norm(f, 2);
  return r;
}

SpinorField gaussian_packet(const Grid& grid, const PacketSpec& spec, bool* wide) {
  if (!(spec.width > 0.0)) throw Error("gaussian_packet: width must be positive");
  if (spec.center.size() != grid.dim() || spec.momentum.size() != grid.dim())
    throw Error("gaussian_packet: center/momentum dimension mismatch");
  if (spec.component_weights.empty()) throw Error("gaussian_packet: need component weights");

  const int l = static_cast<int>(spec.component_weights.size());
  double wnorm = 0.0;
  for (const auto& c : spec.component_weights) wnorm += std::norm(c);
  if (!(wnorm > 0.0)) throw Error("gaussian_packet: component weights are all zero");
  wnorm = std::sqrt(wnorm);

  bool is_wide = false;
  for (int a = 0; a < grid.dim(); ++a) {
    if (spec.width > grid.length(a) / 3.0) is_wide = true;
  }
  if (wide) *wide = is_wide;

  Eigen::ArrayXcd profile(grid.size());
  for (Eigen::Index f = 0; f < grid.size(); ++f) {
    const Point x = grid.point(f);
    const double r2 = (x - spec.center).squaredNorm();
    const double phase = spec.momentum.dot(x) / spec.hbar;
    profile[f] = std::exp(-r2 / (4.0 * spec.width * spec.width)) * std::polar(1.0, phase);
  }

  SpinorField field(grid, l);
  for (int c = 0; c < l; ++c) field.set_component(c, profile * (spec.component_weights[c] / wnorm));
  const double n = l2_norm(field);
  field *= Complex(1.0 / n);
  return field;
}

double boundary_mass(const SpinorField& f, double fraction) {
  const Grid& g = f.grid();
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(g.size()));
  for (Eigen::Index p = 0; p < g.size(); ++p) {
    const Point x = g.point(p);
    bool outer = false;
    for (int a = 0; a < g.dim(); ++a) {
      const double band = fraction * g.length(a);
      if (x[a] < g.lo(a) + band || x[a] >= g.hi(a) - band) outer = true;
    }
    if (outer) terms.push_back(f.values().col(p).squaredNorm());
  }
  return pairwise_sum(terms) * g.cell_volume();
}

SpinorField multiply_pointwise(const SpinorField& f, const std::function<Complex(const Point&)>& g) {
  SpinorField out = f;
  for (Eigen::Index p = 0; p < f.grid().size(); ++p) out.values().col(p) *= g(f.grid().point(p));
  return out;
}

}  // namespace rfpi
