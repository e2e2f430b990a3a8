#include "rfpi/path_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "rfpi/matrix_exp.hpp"
#include "rfpi/spectral.hpp"

namespace rfpi {

namespace {

SpinMatrix generator(const WeightSpec& w, const SpinTerm& hs, double theta, const Point& q) {
  SpinMatrix g = SpinMatrix::Zero(w.spin_dim, w.spin_dim);
  if (!hs.is_zero()) g += kI * hs(theta, q);
  if (!w.is_zero()) g += w(theta, q);
  return g;
}

struct TimedObservable {
  double time;
  const ObservableFn* z;
};

// Ordered factor along the straight path (s, y) -> (t, x), with observables
// evaluated at interior times. Midpoint exponentials, `substeps` per piece.
SpinMatrix straight_factor(const Point& x, const Point& y, double s, double t, const WeightSpec& w,
                           const SpinTerm& hs, int substeps, const std::vector<TimedObservable>& inner) {
  const int l = w.spin_dim;
  const double rho = t - s;
  auto position = [&](double theta) { return Point(y + ((theta - s) / rho) * (x - y)); };
  const bool trivial = w.is_zero() && hs.is_zero();

  SpinMatrix value = SpinMatrix::Identity(l, l);
  auto piece = [&](double a, double b) {
    if (trivial || b <= a) return;
    const double h = (b - a) / substeps;
    if (l == 1) {
      Complex sum = 0.0;
      for (int k = 0; k < substeps; ++k) {
        const double theta = a + (k + 0.5) * h;
        sum += generator(w, hs, theta, position(theta))(0, 0);
      }
      value(0, 0) *= std::exp(-h * sum);
      return;
    }
    for (int k = 0; k < substeps; ++k) {
      const double theta = a + (k + 0.5) * h;
      value = (expm(SpinMatrix(-h * generator(w, hs, theta, position(theta)))) * value).eval();
    }
  };

  double from = s;
  for (const auto& obs : inner) {
    piece(from, obs.time);
    value = ((*obs.z)(position(obs.time)) * value).eval();
    from = obs.time;
  }
  piece(from, t);
  return value;
}

void check_oracle_field(const SpinorField& f, const Potential& p, const WeightSpec& w, const SpinTerm& hs) {
  if (f.grid().dim() != 1 || p.dim != 1) throw Error("path oracle: only d = 1 is supported");
  if (f.grid().points(0) > kOracleMaxPoints) throw Error("path oracle: at most 512 grid points");
  if (f.spin_dim() != w.spin_dim || f.spin_dim() != hs.spin_dim)
    throw Error("path oracle: spin dimensions differ");
}

// Integrals of xi^0 and xi^1 against exp(i theta xi) over [0, 1].
std::pair<Complex, Complex> filon_moments(double theta) {
  if (std::abs(theta) < 1e-2) {
    Complex i0 = 0.0, i1 = 0.0, term = 1.0;
    double fact = 1.0;
    for (int k = 0; k < 8; ++k) {
      if (k > 0) {
        term *= kI * theta;
        fact *= k;
      }
      i0 += term / (fact * (k + 1));
      i1 += term / (fact * (k + 2));
    }
    return {i0, i1};
  }
  const Complex e = std::exp(kI * theta);
  const Complex i0 = (e - 1.0) / (kI * theta);
  const Complex i1 = e / (kI * theta) + (e - 1.0) / (theta * theta);
  return {i0, i1};
}

SpinorField kernel_step(const SpinorField& f, const Potential& p, const WeightSpec& w, const SpinTerm& hs,
                        double s, double t, const SliceKernelConfig& cfg,
                        const std::vector<TimedObservable>& inner) {
  check_oracle_field(f, p, w, hs);
  validate_kernel_config(cfg);
  if (!(t > s)) throw Error("one_step_kernel_apply: need t > s");
  const Grid& grid = f.grid();
  const int l = f.spin_dim();
  const double rho = t - s;
  const double m = p.mass, hbar = p.hbar, q = p.charge;
  const double radius = cfg.window * std::sqrt(hbar * rho / m);

  const double dx = grid.spacing(0);
  const int refine = std::max(1, static_cast<int>(std::ceil(dx * cfg.quad_points / (2.0 * radius) - 1e-12)));
  const int npts = grid.points(0);
  const int fine_n = npts * refine;
  const double hy = dx / refine;
  Eigen::MatrixXcd fine(l, fine_n);
  for (int c = 0; c < l; ++c) fine.row(c) = spectral::interpolate_1d(grid, f.component(c), refine).matrix().transpose();

  const auto [gl_nodes, gl_weights] = gauss_legendre(cfg.action_points);
  const bool has_field = static_cast<bool>(p.scalar) || p.magnetic();
  const bool trivial_factor = w.is_zero() && hs.is_zero() && inner.empty();
  const Complex pref = std::sqrt(m / (2.0 * kPi * hbar * rho)) * std::exp(Complex(0.0, -kPi / 4.0));

  auto taper = [](double z) { return 1.0 - smooth_step(2.0 * z - 1.0); };

  SpinorField out(grid, l);
  std::vector<Complex> phase;
  std::vector<SpinVector> amp;
  for (int i = 0; i < npts; ++i) {
    const double xi = grid.coordinate(0, i);
    const int m_lo = std::max(0, static_cast<int>(std::ceil((xi - radius - grid.lo(0)) / hy)));
    const int m_hi = std::min(fine_n - 1, static_cast<int>(std::floor((xi + radius - grid.lo(0)) / hy)));
    phase.clear();
    amp.clear();
    std::vector<double> phi;
    for (int mi = m_lo; mi <= m_hi; ++mi) {
      const double yv = grid.lo(0) + mi * hy;
      const double u = xi - yv;
      const double envelope = taper(std::abs(u) / radius) * std::exp(-cfg.cutoff_width * u * u);
      double action = 0.5 * m * u * u / rho;
      Point xp(1), yp(1);
      xp[0] = xi;
      yp[0] = yv;
      if (has_field) {
        const double v = u / rho;
        double acc = 0.0;
        for (std::size_t k = 0; k < gl_nodes.size(); ++k) {
          const double theta = s + 0.5 * rho * (gl_nodes[k] + 1.0);
          Point qp(1);
          qp[0] = yv + 0.5 * (gl_nodes[k] + 1.0) * u;
          double lag = -q * p.V(theta, qp);
          if (p.magnetic()) lag += q * v * p.A(theta, qp)[0];
          acc += gl_weights[k] * lag;
        }
        action += 0.5 * rho * acc;
      }
      phi.push_back(action / hbar);
      SpinVector g = fine.col(mi);
      if (!trivial_factor) g = straight_factor(xp, yp, s, t, w, hs, cfg.factor_substeps, inner) * g;
      amp.push_back(envelope * g);
    }

    SpinVector acc = SpinVector::Zero(l);
    const int count = static_cast<int>(amp.size());
    if (cfg.quadrature == KernelQuadrature::damped_gauss) {
      for (int k = 0; k < count; ++k) acc += std::exp(kI * phi[k]) * amp[k];
      acc *= hy;
    } else {
      for (int k = 0; k + 1 < count; ++k) {
        const auto [i0, i1] = filon_moments(phi[k + 1] - phi[k]);
        acc += std::exp(kI * phi[k]) * ((i0 - i1) * amp[k] + i1 * amp[k + 1]);
      }
      acc *= hy;
    }
    out.values().col(i) = pref * acc;
  }
  return out;
}

}  // namespace

OrderedFactor ordered_weight_factor(const PathPolyline& path, const WeightSpec& w, const SpinTerm& hs, double s,
                                    double t, int substeps) {
  if (!(s < t)) throw Error("ordered_weight_factor: need s < t");
  const double slack = 1e-12 * std::max(1.0, std::abs(path.end()));
  if (s < path.start() - slack || t > path.end() + slack)
    throw Error("ordered_weight_factor: interval outside the path domain");
  if (substeps < 4) throw Error("ordered_weight_factor: need at least 4 substeps per segment");
  if (w.spin_dim != hs.spin_dim) throw Error("ordered_weight_factor: spin dimensions differ");
  const int l = w.spin_dim;

  OrderedFactor out;
  out.value = SpinMatrix::Identity(l, l);
  double exponent = 0.0;
  for (int seg = 0; seg < path.segments(); ++seg) {
    const double a = std::max(s, path.times()[seg]);
    const double b = std::min(t, path.times()[seg + 1]);
    if (b <= a) continue;
    const double h = (b - a) / substeps;
    const Point v0 = path.vertices()[seg];
    const double ta = path.times()[seg], tb = path.times()[seg + 1];
    for (int k = 0; k < substeps; ++k) {
      const double theta = a + (k + 0.5) * h;
      const Point qp = v0 + ((theta - ta) / (tb - ta)) * (path.vertices()[seg + 1] - v0);
      if (!(w.is_zero() && hs.is_zero()))
        out.value = (expm(SpinMatrix(-h * generator(w, hs, theta, qp))) * out.value).eval();
      exponent += h * (w.w(theta, qp) - w.shift);
      ++out.substeps;
    }
  }
  out.bound = std::exp(-exponent);
  return out;
}

KernelQuadrature parse_kernel_quadrature(const std::string& name) {
  if (name == "damped_gauss") return KernelQuadrature::damped_gauss;
  if (name == "filon_gauss") return KernelQuadrature::filon_gauss;
  throw Error("unknown kernel quadrature '" + name + "' (expected damped_gauss or filon_gauss)");
}

std::string kernel_quadrature_name(KernelQuadrature q) {
  return q == KernelQuadrature::filon_gauss ? "filon_gauss" : "damped_gauss";
}

void validate_kernel_config(const SliceKernelConfig& cfg) {
  if (cfg.quad_points < 16) throw Error("slice kernel: quad_points must be at least 16");
  if (cfg.window < 4.0) throw Error("slice kernel: window must be at least 4");
  if (cfg.cutoff_width < 0.0) throw Error("slice kernel: cutoff width must be nonnegative");
  if (cfg.action_points < 2) throw Error("slice kernel: need at least 2 action quadrature points");
  if (cfg.factor_substeps < 4) throw Error("slice kernel: need at least 4 factor substeps");
}

SpinorField one_step_kernel_apply(const SpinorField& f, const Potential& p, const WeightSpec& w,
                                  const SpinTerm& hs, double s, double t, const SliceKernelConfig& cfg) {
  return kernel_step(f, p, w, hs, s, t, cfg, {});
}

SpinorField sliced_kernel_apply(const SpinorField& f, const Potential& p, const WeightSpec& w, const SpinTerm& hs,
                                const Subdivision& sub, const SliceKernelConfig& cfg) {
  return insert_observables(f, p, w, hs, sub, {}, cfg);
}

SpinorField insert_observables(const SpinorField& f, const Potential& p, const WeightSpec& w, const SpinTerm& hs,
                               const Subdivision& sub, const std::vector<Insertion>& insertions,
                               const SliceKernelConfig& cfg, bool within_slice) {
  validate_subdivision(sub);
  if (sub.nu() > kOracleMaxSlices) throw Error("path oracle: at most 8 slices");
  check_oracle_field(f, p, w, hs);
  for (std::size_t j = 0; j < insertions.size(); ++j) {
    if (insertions[j].time < 0.0 || insertions[j].time > sub.t_end)
      throw Error("insert_observables: insertion time outside [0, t]");
    if (j > 0 && !(insertions[j].time > insertions[j - 1].time))
      throw Error("insert_observables: insertion times must be strictly increasing");
    if (!insertions[j].z) throw Error("insert_observables: missing observable");
  }

  const int nu = sub.nu();
  // boundary[k]: observables applied at tau_k; inner[k]: inside slice k
  std::vector<std::vector<const ObservableFn*>> boundary(nu + 1);
  std::vector<std::vector<TimedObservable>> inner(nu);
  for (const auto& ins : insertions) {
    const auto it = std::lower_bound(sub.taus.begin(), sub.taus.end(), ins.time);
    const int k_hi = static_cast<int>(it - sub.taus.begin());
    const double tol = 1e-12 * std::max(1.0, sub.t_end);
    if (k_hi <= nu && std::abs(sub.taus[k_hi] - ins.time) <= tol) {
      boundary[k_hi].push_back(&ins.z);
    } else if (k_hi > 0 && std::abs(sub.taus[k_hi - 1] - ins.time) <= tol) {
      boundary[k_hi - 1].push_back(&ins.z);
    } else if (within_slice) {
      inner[k_hi - 1].push_back({ins.time, &ins.z});
    } else {
      const int k = (ins.time - sub.taus[k_hi - 1] <= sub.taus[k_hi] - ins.time) ? k_hi - 1 : k_hi;
      boundary[k].push_back(&ins.z);
    }
  }

  auto multiply = [](const SpinorField& u, const ObservableFn& z) {
    SpinorField out = u;
    const Grid& g = u.grid();
    for (Eigen::Index i = 0; i < g.size(); ++i) out.values().col(i) = z(g.point(i)) * u.values().col(i);
    return out;
  };

  SpinorField u = f;
  for (int k = 0; k < nu; ++k) {
    for (const auto* z : boundary[k]) u = multiply(u, *z);
    u = kernel_step(u, p, w, hs, sub.taus[k], sub.taus[k + 1], cfg, inner[k]);
  }
  for (const auto* z : boundary[nu]) u = multiply(u, *z);
  return u;
}

}  // namespace rfpi
