#include "rfpi/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evolution_detail.hpp"
#include "rfpi/dense_oracle.hpp"
#include "rfpi/field_io.hpp"
#include "rfpi/matrix_exp.hpp"
#include "rfpi/spectral.hpp"

namespace rfpi {

namespace detail {

CoefficientCache::CoefficientCache(const Grid& grid, const Potential& p, const SpinTerm& hs, const WeightSpec& w)
    : grid_(grid),
      p_(p),
      hs_(hs),
      w_(w),
      l_(w.spin_dim),
      fields_static_(p.time_independent),
      spin_static_(!hs.time_dependent && !w.time_dependent) {
  c_.magnetic = p.magnetic();
  c_.has_spin_block = !hs.is_zero() || !w.is_zero();
}

void CoefficientCache::fill_fields(double t) {
  const Eigen::Index n = grid_.size();
  const int d = grid_.dim();
  c_.qv.resize(n);
  if (c_.magnetic) c_.a.assign(d, Eigen::ArrayXd(n));
  for (Eigen::Index f = 0; f < n; ++f) {
    const Point x = grid_.point(f);
    c_.qv[f] = p_.charge * p_.V(t, x);
    if (c_.magnetic) {
      const Point a = p_.A(t, x);
      for (int j = 0; j < d; ++j) c_.a[j][f] = a[j];
    }
  }
}

void CoefficientCache::fill_spin(double t) {
  if (!c_.has_spin_block) return;
  const Eigen::Index n = grid_.size();
  if (l_ == 1) {
    c_.g_scalar.resize(n);
    for (Eigen::Index f = 0; f < n; ++f) {
      const Point x = grid_.point(f);
      Complex g = 0.0;
      if (!hs_.is_zero()) g += kI * hs_(t, x)(0, 0);
      if (!w_.is_zero()) g += w_(t, x)(0, 0);
      c_.g_scalar[f] = g;
    }
    return;
  }
  c_.g_matrix.resize(n);
  for (Eigen::Index f = 0; f < n; ++f) {
    const Point x = grid_.point(f);
    SpinMatrix g = SpinMatrix::Zero(l_, l_);
    if (!hs_.is_zero()) g += kI * hs_(t, x);
    if (!w_.is_zero()) g += w_(t, x);
    c_.g_matrix[f] = g;
  }
}

const Coefficients& CoefficientCache::at(double t) {
  if (!fields_static_ || !fields_ready_) {
    fill_fields(t);
    fields_ready_ = true;
  }
  if (!spin_static_ || !spin_ready_) {
    fill_spin(t);
    spin_ready_ = true;
  }
  c_.t = t;
  return c_;
}

void subtract_spin_block(const Coefficients& c, const Eigen::MatrixXcd& u, Eigen::MatrixXcd& out) {
  if (!c.has_spin_block) return;
  if (u.rows() == 1) {
    out.row(0).array() -= c.g_scalar.transpose() * u.row(0).array();
    return;
  }
  for (Eigen::Index f = 0; f < u.cols(); ++f) out.col(f).noalias() -= c.g_matrix[f] * u.col(f);
}

void check_spin_dims(const SpinorField& f, const SpinTerm& hs, const WeightSpec& w) {
  if (f.spin_dim() != w.spin_dim) throw Error("propagator: field and weight spin dimensions differ");
  if (f.spin_dim() != hs.spin_dim) throw Error("propagator: field and spin term dimensions differ");
  if (f.spin_dim() > kMaxSpin) throw Error("propagator: spin dimension exceeds the supported maximum");
}

}  // namespace detail

namespace {

// Boundaries t0 = s_0 < s_1 < ... < s_n = t1 with s_k = t0 + k dt and a
// shortened last step.
std::vector<double> step_boundaries(double t0, double t1, double dt) {
  std::vector<double> s{t0};
  const double span = t1 - t0;
  const auto full = static_cast<long>(std::floor(span / dt * (1.0 + 1e-12)));
  for (long k = 1; k <= full; ++k) s.push_back(t0 + k * dt);
  if (t1 - s.back() > 1e-12 * std::max(1.0, std::abs(span))) s.push_back(t1);
  else s.back() = t1;
  return s;
}

// u_t = -(i/hbar) H u for the scalar Hamiltonian part, per spin component.
class SpectralRhs {
 public:
  SpectralRhs(const Grid& grid, const Potential& p) : grid_(grid), p_(p) {
    k2_ = grid.wavenumber_squared();
    for (int j = 0; j < grid.dim(); ++j) ik_.push_back(spectral::derivative_multiplier(grid, j, 1));
  }

  void apply(const detail::Coefficients& c, const Eigen::MatrixXcd& u, Eigen::MatrixXcd& out) const {
    const double m = p_.mass, q = p_.charge, hbar = p_.hbar;
    const int d = grid_.dim();
    out.resize(u.rows(), u.cols());
    Eigen::ArrayXcd uc, uhat, lap, tmp, div;
    for (Eigen::Index comp = 0; comp < u.rows(); ++comp) {
      uc = u.row(comp).transpose().array();
      uhat = uc;
      spectral::forward(grid_, uhat);
      lap = -k2_ * uhat;
      spectral::inverse(grid_, lap);
      Eigen::ArrayXcd hu = (-hbar * hbar / (2.0 * m)) * lap + c.qv * uc;
      if (c.magnetic) {
        Eigen::ArrayXd a2 = Eigen::ArrayXd::Zero(uc.size());
        Eigen::ArrayXcd a_dot_grad = Eigen::ArrayXcd::Zero(uc.size());
        div = Eigen::ArrayXcd::Zero(uc.size());
        for (int j = 0; j < d; ++j) {
          tmp = ik_[j] * uhat;
          spectral::inverse(grid_, tmp);
          a_dot_grad += c.a[j] * tmp;
          tmp = c.a[j] * uc;
          spectral::forward(grid_, tmp);
          div += ik_[j] * tmp;
          a2 += c.a[j].square();
        }
        spectral::inverse(grid_, div);
        hu += (kI * hbar * q / (2.0 * m)) * (div + a_dot_grad) + (q * q / (2.0 * m)) * a2 * uc;
      }
      out.row(comp) = ((-kI / hbar) * hu).matrix().transpose();
    }
    detail::subtract_spin_block(c, u, out);
  }

 private:
  const Grid& grid_;
  const Potential& p_;
  Eigen::ArrayXd k2_;
  std::vector<Eigen::ArrayXcd> ik_;
};

// exp(-h (i qV/hbar + G)) at every point, written into `scalar` or `matrix`.
void multiplicative_factor(const detail::Coefficients& c, double h, double hbar, int l, Eigen::ArrayXcd& scalar,
                           std::vector<SpinMatrix>& matrix) {
  const Eigen::Index n = c.qv.size();
  if (l == 1) {
    scalar.resize(n);
    for (Eigen::Index f = 0; f < n; ++f) {
      Complex e = kI * c.qv[f] / hbar;
      if (c.has_spin_block) e += c.g_scalar[f];
      scalar[f] = std::exp(-h * e);
    }
    return;
  }
  matrix.resize(n);
  for (Eigen::Index f = 0; f < n; ++f) {
    SpinMatrix e = (kI * c.qv[f] / hbar) * SpinMatrix::Identity(l, l);
    if (c.has_spin_block) e += c.g_matrix[f];
    matrix[f] = expm(SpinMatrix(-h * e));
  }
}

void apply_factor(const Eigen::ArrayXcd& scalar, const std::vector<SpinMatrix>& matrix, Eigen::MatrixXcd& u) {
  if (u.rows() == 1) {
    u.row(0).array() *= scalar.transpose();
    return;
  }
  for (Eigen::Index f = 0; f < u.cols(); ++f) u.col(f) = (matrix[f] * u.col(f)).eval();
}

void validate(const SpinorField& f, const Potential& p, const SpinTerm& hs, const WeightSpec& w,
              const PropagatorConfig& cfg) {
  detail::check_spin_dims(f, hs, w);
  if (f.grid().dim() != p.dim) throw Error("propagator: potential and grid dimensions differ");
  if (!(cfg.t1 >= cfg.t0)) throw Error("propagator: need t1 >= t0");
  if (cfg.backend != Backend::dense_oracle && !(cfg.dt > 0.0)) throw Error("propagator: dt must be positive");
  if (!f.all_finite()) throw Error("propagator: initial field is not finite");
  switch (cfg.backend) {
    case Backend::spectral_strang:
      if (p.magnetic()) throw Error("spectral_strang requires A = 0; use mol_rk4 for magnetic potentials");
      break;
    case Backend::mol_rk4: {
      const double limit = mol_rk4_max_dt(f.grid(), p);
      if (cfg.dt > limit * (1.0 + 1e-12))
        throw Error("mol_rk4: dt " + std::to_string(cfg.dt) + " exceeds the CFL limit " + std::to_string(limit));
      break;
    }
    case Backend::dense_oracle:
      if (f.grid().size() * f.spin_dim() > kDenseOracleLimit)
        throw Error("dense_oracle: more than 8192 unknowns");
      break;
  }
}

}  // namespace

SpinTerm zero_spin_term(int spin_dim) {
  if (spin_dim < 1 || spin_dim > kMaxSpin) throw Error("spin term: spin dimension out of range");
  SpinTerm s;
  s.spin_dim = spin_dim;
  return s;
}

SpinTerm constant_spin_term(const SpinMatrix& h) {
  if (h.rows() != h.cols()) throw Error("spin term: matrix must be square");
  SpinTerm s = zero_spin_term(static_cast<int>(h.rows()));
  if (h.isZero(0.0)) return s;
  if (hermiticity_defect(h) > 1e-12) throw Error("spin term: matrix is not Hermitian");
  s.eval = [h](double, const Point&) { return h; };
  return s;
}

Backend parse_backend(const std::string& name) {
  if (name == "spectral_strang") return Backend::spectral_strang;
  if (name == "mol_rk4") return Backend::mol_rk4;
  if (name == "dense_oracle") return Backend::dense_oracle;
  throw Error("unknown backend '" + name + "' (expected spectral_strang, mol_rk4 or dense_oracle)");
}

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::spectral_strang: return "spectral_strang";
    case Backend::mol_rk4: return "mol_rk4";
    case Backend::dense_oracle: return "dense_oracle";
  }
  return "unknown";
}

double mol_rk4_max_dt(const Grid& grid, const Potential& p) {
  double limit = std::numeric_limits<double>::infinity();
  for (int a = 0; a < grid.dim(); ++a) {
    const double dx = grid.spacing(a);
    limit = std::min(limit, 0.5 * p.mass * dx * dx / p.hbar * (2.0 / (kPi * kPi)));
  }
  return limit;
}

SpinorField evolve_unitary(const SpinorField& f, const Potential& p, const SpinTerm& hs,
                           const PropagatorConfig& cfg) {
  return evolve_damped(f, p, hs, zero_weight(f.spin_dim()), cfg);
}

SpinorField evolve_damped(const SpinorField& f, const Potential& p, const SpinTerm& hs, const WeightSpec& w,
                          const PropagatorConfig& cfg) {
  validate(f, p, hs, w, cfg);
  if (cfg.observer) cfg.observer(cfg.t0, f);
  if (cfg.t1 == cfg.t0) return f;

  if (cfg.backend == Backend::dense_oracle) {
    SpinorField out = dense_evolve(f, p, hs, w, cfg.t0, cfg.t1, cfg.tolerance);
    if (cfg.observer) cfg.observer(cfg.t1, out);
    return out;
  }

  const Grid& grid = f.grid();
  const int l = f.spin_dim();
  detail::CoefficientCache cache(grid, p, hs, w);
  const std::vector<double> s = step_boundaries(cfg.t0, cfg.t1, cfg.dt);
  Eigen::MatrixXcd u = f.values();

  auto after_step = [&](std::size_t k) {
    if (!u.allFinite()) throw Error("propagator: solution became non-finite at t = " + std::to_string(s[k]));
    if (cfg.observer) cfg.observer(s[k], SpinorField(grid, u));
    if (cfg.checkpoint_every > 0 && k % static_cast<std::size_t>(cfg.checkpoint_every) == 0) {
      auto stem = cfg.checkpoint_stem;
      stem += "_" + std::to_string(k);
      write_field(stem, SpinorField(grid, u));
    }
  };

  if (cfg.backend == Backend::spectral_strang) {
    const bool static_factors = p.time_independent && !hs.time_dependent && !w.time_dependent;
    const Eigen::ArrayXd& k2 = grid.wavenumber_squared();
    double cached_h = -1.0;
    Eigen::ArrayXcd fac_scalar, kinetic;
    std::vector<SpinMatrix> fac_matrix;
    Eigen::ArrayXcd buf;
    for (std::size_t k = 1; k < s.size(); ++k) {
      const double t = s[k - 1];
      const double h = s[k] - t;
      if (h != cached_h) {
        kinetic = (-kI * (h * p.hbar / (2.0 * p.mass)) * k2).exp();
      }
      // first half: coefficients at t + h/4
      if (!static_factors || h != cached_h) {
        multiplicative_factor(cache.at(t + 0.25 * h), 0.5 * h, p.hbar, l, fac_scalar, fac_matrix);
      }
      apply_factor(fac_scalar, fac_matrix, u);
      for (int c = 0; c < l; ++c) {
        buf = u.row(c).transpose().array();
        spectral::forward(grid, buf);
        buf *= kinetic;
        spectral::inverse(grid, buf);
        u.row(c) = buf.matrix().transpose();
      }
      // second half: coefficients at t + 3h/4
      if (!static_factors) {
        multiplicative_factor(cache.at(t + 0.75 * h), 0.5 * h, p.hbar, l, fac_scalar, fac_matrix);
      }
      apply_factor(fac_scalar, fac_matrix, u);
      cached_h = h;
      after_step(k);
    }
    return SpinorField(grid, std::move(u));
  }

  // mol_rk4
  SpectralRhs rhs(grid, p);
  Eigen::MatrixXcd k1, k2, k3, k4, tmp;
  for (std::size_t k = 1; k < s.size(); ++k) {
    const double t = s[k - 1];
    const double h = s[k] - t;
    rhs.apply(cache.at(t), u, k1);
    tmp = u + (0.5 * h) * k1;
    rhs.apply(cache.at(t + 0.5 * h), tmp, k2);
    tmp = u + (0.5 * h) * k2;
    rhs.apply(cache.at(t + 0.5 * h), tmp, k3);
    tmp = u + h * k3;
    rhs.apply(cache.at(t + h), tmp, k4);
    u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    after_step(k);
  }
  return SpinorField(grid, std::move(u));
}

Point expectation_position(const SpinorField& f) {
  const Grid& g = f.grid();
  std::vector<double> mass(static_cast<std::size_t>(g.size()));
  for (Eigen::Index p = 0; p < g.size(); ++p) mass[p] = f.values().col(p).squaredNorm();
  const double total = pairwise_sum(mass);
  if (!(total > 0.0)) throw Error("expectation_position: zero field");
  Point out(g.dim());
  std::vector<double> weighted(mass.size());
  for (int a = 0; a < g.dim(); ++a) {
    for (Eigen::Index p = 0; p < g.size(); ++p) weighted[p] = g.point(p)[a] * mass[p];
    out[a] = pairwise_sum(weighted) / total;
  }
  return out;
}

double survival_mass(const SpinorField& f, const std::function<bool(const Point&)>& region) {
  const Grid& g = f.grid();
  std::vector<double> terms(static_cast<std::size_t>(g.size()), 0.0);
  for (Eigen::Index p = 0; p < g.size(); ++p)
    if (region(g.point(p))) terms[p] = f.values().col(p).squaredNorm();
  return pairwise_sum(terms) * g.cell_volume();
}

}  // namespace rfpi
