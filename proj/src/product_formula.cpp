#include "rfpi/product_formula.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rfpi/dense_oracle.hpp"

namespace rfpi {

double Subdivision::mesh() const {
  double m = 0.0;
  for (int j = 0; j < nu(); ++j) m = std::max(m, width(j));
  return m;
}

TauScheme parse_tau_scheme(const std::string& name) {
  if (name == "uniform") return TauScheme::uniform;
  if (name == "random_jitter" || name == "random-jitter") return TauScheme::random_jitter;
  throw Error("unknown tau scheme '" + name + "' (expected uniform or random_jitter)");
}

KappaScheme parse_kappa_scheme(const std::string& name) {
  if (name == "left") return KappaScheme::left;
  if (name == "right") return KappaScheme::right;
  if (name == "midpoint") return KappaScheme::midpoint;
  if (name == "random") return KappaScheme::random;
  throw Error("unknown kappa scheme '" + name + "' (expected left, right, midpoint or random)");
}

std::string kappa_scheme_name(KappaScheme s) {
  switch (s) {
    case KappaScheme::left: return "left";
    case KappaScheme::right: return "right";
    case KappaScheme::midpoint: return "midpoint";
    case KappaScheme::random: return "random";
  }
  return "unknown";
}

Subdivision make_subdivision(double t, int nu, TauScheme tau_scheme, KappaScheme kappa_scheme,
                             std::uint64_t seed) {
  if (nu < 1) throw Error("make_subdivision: nu must be at least 1");
  if (!(t > 0.0)) throw Error("make_subdivision: t must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Subdivision s;
  s.t_end = t;
  s.taus.resize(nu + 1);
  const double h = t / nu;
  for (int j = 0; j <= nu; ++j) s.taus[j] = j * h;
  s.taus[nu] = t;
  if (tau_scheme == TauScheme::random_jitter) {
    for (int j = 1; j < nu; ++j) s.taus[j] += (unit(rng) - 0.5) * 0.5 * h;
  }

  auto pick = [&](int j) {
    const double a = s.taus[j], b = s.taus[j + 1];
    switch (kappa_scheme) {
      case KappaScheme::left: return a;
      case KappaScheme::right: return b;
      case KappaScheme::midpoint: return 0.5 * (a + b);
      case KappaScheme::random: return std::min(b, a + unit(rng) * (b - a));
    }
    return a;
  };
  s.kappas.resize(nu);
  s.kappa_primes.resize(nu);
  for (int j = 0; j < nu; ++j) s.kappas[j] = pick(j);
  for (int j = 0; j < nu; ++j) s.kappa_primes[j] = pick(j);
  return s;
}

void validate_subdivision(const Subdivision& sub) {
  if (sub.taus.size() < 2) throw Error("subdivision: need at least one interval");
  if (sub.taus.front() != 0.0) throw Error("subdivision: must start at 0");
  if (sub.taus.back() != sub.t_end) throw Error("subdivision: must end at t");
  const int nu = sub.nu();
  if (static_cast<int>(sub.kappas.size()) != nu || static_cast<int>(sub.kappa_primes.size()) != nu)
    throw Error("subdivision: need one kappa and one kappa' per interval");
  for (int j = 0; j < nu; ++j) {
    if (!(sub.taus[j + 1] > sub.taus[j])) throw Error("subdivision: taus must be strictly increasing");
    if (sub.kappas[j] < sub.taus[j] || sub.kappas[j] > sub.taus[j + 1])
      throw Error("subdivision: kappa outside its interval");
    if (sub.kappa_primes[j] < sub.taus[j] || sub.kappa_primes[j] > sub.taus[j + 1])
      throw Error("subdivision: kappa' outside its interval");
  }
}

OmegaSchedule OmegaSchedule::power_law(double sigma, double coefficient) {
  if (!(sigma > 0.0)) throw Error("omega: sigma must be positive");
  if (!(coefficient > 0.0)) throw Error("omega: coefficient must be positive");
  OmegaSchedule o;
  o.power = true;
  o.sigma = sigma;
  o.coefficient = coefficient;
  return o;
}

double OmegaSchedule::operator()(double rho) const {
  return power ? coefficient * std::pow(rho, 1.0 + sigma) : rho;
}

double OmegaSchedule::derivative(double rho) const {
  return power ? coefficient * (1.0 + sigma) * std::pow(rho, sigma) : 1.0;
}

bool OmegaSchedule::condition_holds(double rho_max) const {
  if (!power) return true;
  if (sigma > 1.0) return false;
  for (int k = 1; k <= 1000; ++k) {
    const double rho = rho_max * k / 1000.0;
    if (derivative(rho) < rho) return false;
  }
  return true;
}

SpinorField apply_damping(const SpinorField& f, const WeightSpec& w, double t, double rho) {
  if (f.spin_dim() != w.spin_dim) throw Error("apply_damping: spin dimensions differ");
  if (w.is_zero() || rho == 0.0) return f;
  SpinorField out = f;
  const Grid& g = f.grid();
  for (Eigen::Index p = 0; p < g.size(); ++p) {
    const SpinMatrix d = damping_factor(w, t, g.point(p), rho);
    out.values().col(p) = d * f.values().col(p);
  }
  return out;
}

SpinorField interleaved_evolution(const SpinorField& f, const Potential& p, const SpinTerm& hs,
                                  const WeightSpec& w, const Subdivision& sub,
                                  const std::optional<OmegaSchedule>& omega, const PropagatorConfig& cfg) {
  validate_subdivision(sub);
  double min_width = sub.t_end;
  for (int j = 0; j < sub.nu(); ++j) min_width = std::min(min_width, sub.width(j));

  PropagatorConfig leg = cfg;
  leg.observer = nullptr;
  leg.checkpoint_every = 0;
  leg.dt = std::min(cfg.dt, min_width / 4.0);

  auto advance = [&](const SpinorField& u, double from, double to) {
    if (to <= from) return u;
    leg.t0 = from;
    leg.t1 = to;
    return evolve_unitary(u, p, hs, leg);
  };

  SpinorField u = f;
  double prev = 0.0;
  for (int j = 0; j < sub.nu(); ++j) {
    u = advance(u, prev, sub.kappas[j]);
    const double exposure = omega ? (*omega)(sub.width(j)) : sub.width(j);
    u = apply_damping(u, w, sub.kappa_primes[j], exposure);
    prev = sub.kappas[j];
  }
  return advance(u, prev, sub.t_end);
}

double fitted_order(const std::vector<ConvergenceRecord>& records) {
  const std::size_t n = records.size();
  if (n < 2) return 0.0;
  const std::size_t start = n - std::max<std::size_t>(2, (n + 1) / 2);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(n - start);
  for (std::size_t i = start; i < n; ++i) {
    const double x = std::log(records[i].mesh);
    const double y = std::log(std::max(records[i].err_l2, 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = m * sxx - sx * sx;
  return denom == 0.0 ? 0.0 : (m * sxy - sx * sy) / denom;
}

ConvergenceStudy convergence_study(const SpinorField& f, const Potential& p, const SpinTerm& hs,
                                   const WeightSpec& w, double t, const std::vector<int>& nus,
                                   const StudyOptions& options, const PropagatorConfig& cfg) {
  if (nus.empty()) throw Error("convergence_study: empty sweep");
  for (std::size_t i = 1; i < nus.size(); ++i)
    if (nus[i] <= nus[i - 1]) throw Error("convergence_study: nus must be increasing");

  ConvergenceStudy study;
  const bool unitary_ref = options.omega.has_value();
  const WeightSpec ref_weight = unitary_ref ? zero_weight(w.spin_dim) : w;
  if (options.omega && !options.omega->condition_holds(t))
    study.warnings.push_back("omega'(rho) >= rho fails on (0, t]");

  PropagatorConfig ref_cfg = cfg;
  ref_cfg.t0 = 0.0;
  ref_cfg.t1 = t;
  ref_cfg.observer = nullptr;
  ref_cfg.checkpoint_every = 0;
  SpinorField reference;
  if (f.grid().size() * f.spin_dim() <= kDenseOracleLimit) {
    ref_cfg.backend = Backend::dense_oracle;
    ref_cfg.tolerance = std::min(cfg.tolerance, 1e-11);
    reference = evolve_damped(f, p, hs, ref_weight, ref_cfg);
    study.reference = std::string(unitary_ref ? "unitary" : "damped") + " evolution, dense_oracle tol " +
                      std::to_string(ref_cfg.tolerance);
  } else {
    if (cfg.backend == Backend::dense_oracle) ref_cfg.backend = p.magnetic() ? Backend::mol_rk4 : Backend::spectral_strang;
    const double min_mesh = t / nus.back();
    ref_cfg.dt = min_mesh / 64.0;
    if (ref_cfg.backend == Backend::mol_rk4) ref_cfg.dt = std::min(ref_cfg.dt, mol_rk4_max_dt(f.grid(), p));
    reference = evolve_damped(f, p, hs, ref_weight, ref_cfg);
    PropagatorConfig half = ref_cfg;
    half.dt = ref_cfg.dt / 2.0;
    const SpinorField check = evolve_damped(f, p, hs, ref_weight, half);
    study.reference_gap = l2_norm(check - reference);
    study.reference = std::string(unitary_ref ? "unitary" : "damped") + " evolution, " +
                      backend_name(ref_cfg.backend) + " dt " + std::to_string(ref_cfg.dt);
  }

  for (int nu : nus) {
    const Subdivision sub = make_subdivision(t, nu, options.tau_scheme, options.kappa_scheme, options.seed);
    const SpinorField u = interleaved_evolution(f, p, hs, w, sub, options.omega, cfg);
    const SpinorField diff = u - reference;
    ConvergenceRecord r;
    r.nu = nu;
    r.mesh = sub.mesh();
    r.err_l2 = l2_norm(diff);
    if (options.with_b1) r.err_b1 = sobolev_norm(diff, 1);
    study.records.push_back(r);
  }

  double min_err = study.records.front().err_l2, max_tail = 0.0;
  for (const auto& r : study.records) min_err = std::min(min_err, r.err_l2);
  const std::size_t n = study.records.size();
  for (std::size_t i = n - std::max<std::size_t>(1, (n + 1) / 2); i < n; ++i)
    max_tail = std::max(max_tail, study.records[i].err_l2);
  study.saturated = max_tail < options.saturation_floor;
  study.order = fitted_order(study.records);
  study.strictly_decreasing = true;
  study.nonincreasing = true;
  for (std::size_t i = 1; i < n; ++i) {
    if (!(study.records[i].err_l2 < study.records[i - 1].err_l2)) study.strictly_decreasing = false;
    if (study.records[i].err_l2 > 1.1 * study.records[i - 1].err_l2) study.nonincreasing = false;
  }
  if (study.reference_gap > 0.0 && !study.saturated && study.reference_gap >= 0.1 * min_err) {
    study.reference_consistent = false;
    study.warnings.push_back("reference consistency check failed");
  }
  return study;
}

std::vector<KappaSensitivity> kappa_sensitivity(const SpinorField& f, const Potential& p, const SpinTerm& hs,
                                                const WeightSpec& w, double t, const std::vector<int>& nus,
                                                const std::vector<KappaScheme>& schemes, std::uint64_t seed,
                                                const std::optional<OmegaSchedule>& omega,
                                                const PropagatorConfig& cfg) {
  if (schemes.size() < 2) throw Error("kappa_sensitivity: need at least two schemes");
  std::vector<KappaSensitivity> out;
  for (int nu : nus) {
    std::vector<SpinorField> results;
    for (KappaScheme s : schemes)
      results.push_back(
          interleaved_evolution(f, p, hs, w, make_subdivision(t, nu, TauScheme::uniform, s, seed), omega, cfg));
    KappaSensitivity k;
    k.nu = nu;
    for (std::size_t a = 0; a < results.size(); ++a)
      for (std::size_t b = a + 1; b < results.size(); ++b)
        k.max_pairwise = std::max(k.max_pairwise, l2_norm(results[a] - results[b]));
    out.push_back(k);
  }
  return out;
}

}  // namespace rfpi
