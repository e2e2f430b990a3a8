#include "rfpi/dense_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "evolution_detail.hpp"
#include "rfpi/spectral.hpp"

namespace rfpi {

namespace {

struct DenseOperators {
  Eigen::MatrixXcd lap_t;                  // transposed Laplacian
  std::vector<Eigen::MatrixXcd> grad_t;    // transposed first derivatives
};

DenseOperators build_operators(const Grid& grid, bool magnetic) {
  DenseOperators ops;
  ops.lap_t = dense_spectral_matrix(grid, (-grid.wavenumber_squared()).cast<Complex>()).transpose();
  if (magnetic) {
    for (int j = 0; j < grid.dim(); ++j)
      ops.grad_t.push_back(dense_spectral_matrix(grid, spectral::derivative_multiplier(grid, j, 1)).transpose());
  }
  return ops;
}

// Same right-hand side as the grid propagator, with dense matrix products
// in place of transforms. Rows of u are spin components.
void dense_rhs(const DenseOperators& ops, const detail::Coefficients& c, const Potential& p,
               const Eigen::MatrixXcd& u, Eigen::MatrixXcd& out) {
  const double m = p.mass, q = p.charge, hbar = p.hbar;
  Eigen::MatrixXcd hu = (-hbar * hbar / (2.0 * m)) * (u * ops.lap_t);
  for (Eigen::Index r = 0; r < u.rows(); ++r) hu.row(r).array() += c.qv.transpose() * u.row(r).array();
  if (c.magnetic) {
    const Eigen::Index n = u.cols();
    Eigen::ArrayXd a2 = Eigen::ArrayXd::Zero(n);
    Eigen::MatrixXcd cross = Eigen::MatrixXcd::Zero(u.rows(), n);
    for (std::size_t j = 0; j < ops.grad_t.size(); ++j) {
      const Eigen::MatrixXcd grad = u * ops.grad_t[j];
      Eigen::MatrixXcd au = u;
      for (Eigen::Index r = 0; r < u.rows(); ++r) au.row(r).array() *= c.a[j].transpose();
      cross += au * ops.grad_t[j];
      for (Eigen::Index r = 0; r < u.rows(); ++r) cross.row(r).array() += c.a[j].transpose() * grad.row(r).array();
      a2 += c.a[j].square();
    }
    hu += (kI * hbar * q / (2.0 * m)) * cross;
    for (Eigen::Index r = 0; r < u.rows(); ++r)
      hu.row(r).array() += (q * q / (2.0 * m)) * a2.transpose() * u.row(r).array();
  }
  out = (-kI / hbar) * hu;
  detail::subtract_spin_block(c, u, out);
}

}  // namespace

Eigen::MatrixXcd dense_spectral_matrix(const Grid& grid, const Eigen::ArrayXcd& multiplier) {
  const Eigen::Index n = grid.size();
  Eigen::MatrixXcd mat(n, n);
  Eigen::ArrayXcd e(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e.setZero();
    e[j] = 1.0;
    mat.col(j) = spectral::apply_multiplier(grid, e, multiplier).matrix();
  }
  return mat;
}

Eigen::MatrixXcd dense_generator(const Grid& grid, const Potential& p, const SpinTerm& hs, const WeightSpec& w,
                                 double t) {
  const int l = w.spin_dim;
  if (hs.spin_dim != l) throw Error("dense_generator: spin dimensions differ");
  const Eigen::Index npts = grid.size();
  if (npts * l > kDenseOracleLimit) throw Error("dense_oracle: more than 8192 unknowns");
  detail::CoefficientCache cache(grid, p, hs, w);
  const auto& c = cache.at(t);
  const double m = p.mass, q = p.charge, hbar = p.hbar;

  const Eigen::MatrixXcd lap = dense_spectral_matrix(grid, (-grid.wavenumber_squared()).cast<Complex>());
  Eigen::MatrixXcd h = (-hbar * hbar / (2.0 * m)) * lap;
  h.diagonal().array() += c.qv.cast<Complex>();
  if (c.magnetic) {
    Eigen::ArrayXd a2 = Eigen::ArrayXd::Zero(npts);
    for (int j = 0; j < grid.dim(); ++j) {
      const Eigen::MatrixXcd dj = dense_spectral_matrix(grid, spectral::derivative_multiplier(grid, j, 1));
      const Eigen::MatrixXcd cross = dj * c.a[j].matrix().cast<Complex>().asDiagonal() +
                                     c.a[j].matrix().cast<Complex>().asDiagonal() * dj;
      h += (kI * hbar * q / (2.0 * m)) * cross;
      a2 += c.a[j].square();
    }
    h.diagonal().array() += (q * q / (2.0 * m)) * a2.cast<Complex>();
  }
  const Eigen::MatrixXcd ms = (-kI / hbar) * h;

  Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(npts * l, npts * l);
  for (Eigen::Index a = 0; a < npts; ++a)
    for (Eigen::Index b = 0; b < npts; ++b)
      for (int s = 0; s < l; ++s) full(a * l + s, b * l + s) = ms(a, b);
  if (c.has_spin_block) {
    for (Eigen::Index a = 0; a < npts; ++a) {
      if (l == 1) full(a, a) -= c.g_scalar[a];
      else full.block(a * l, a * l, l, l) -= c.g_matrix[a];
    }
  }
  return full;
}

SpinorField dense_evolve(const SpinorField& f, const Potential& p, const SpinTerm& hs, const WeightSpec& w,
                         double t0, double t1, double tolerance, DenseStats* stats) {
  detail::check_spin_dims(f, hs, w);
  const Grid& grid = f.grid();
  if (grid.size() * f.spin_dim() > kDenseOracleLimit) throw Error("dense_oracle: more than 8192 unknowns");
  if (!(t1 >= t0)) throw Error("dense_oracle: need t1 >= t0");
  if (!(tolerance > 0.0)) throw Error("dense_oracle: tolerance must be positive");
  if (t1 == t0) return f;

  const DenseOperators ops = build_operators(grid, p.magnetic());
  detail::CoefficientCache cache(grid, p, hs, w);
  auto rhs = [&](double t, const Eigen::MatrixXcd& u, Eigen::MatrixXcd& out) { dense_rhs(ops, cache.at(t), p, u, out); };

  // Dormand-Prince 5(4)
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  Eigen::MatrixXcd u = f.values();
  Eigen::MatrixXcd k1, k2, k3, k4, k5, k6, k7, y, unew, err;
  double t = t0;
  double h = std::min(t1 - t0, 1e-3);
  rhs(t, u, k1);
  DenseStats st;
  while (t < t1) {
    if (t + h > t1) h = t1 - t;
    y = u + h * a21 * k1;
    rhs(t + c2 * h, y, k2);
    y = u + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, y, k3);
    y = u + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, y, k4);
    y = u + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, y, k5);
    y = u + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, y, k6);
    unew = u + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + h, unew, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const double scale = tolerance * (1.0 + std::max(u.cwiseAbs().maxCoeff(), unew.cwiseAbs().maxCoeff()));
    const double ratio = err.cwiseAbs().maxCoeff() / scale;
    if (!std::isfinite(ratio)) throw Error("dense_oracle: non-finite error estimate");
    if (ratio <= 1.0) {
      t = (t + h >= t1 - 1e-15 * std::max(1.0, std::abs(t1))) ? t1 : t + h;
      u.swap(unew);
      k1.swap(k7);
      ++st.accepted;
    } else {
      ++st.rejected;
    }
    const double factor = ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
    h *= factor;
    if (h < 1e-14 * std::max(1.0, std::abs(t1))) throw Error("dense_oracle: step size underflow");
  }
  if (stats) *stats = st;
  return SpinorField(grid, std::move(u));
}

}  // namespace rfpi
