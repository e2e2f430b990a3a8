#include "rfpi/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "rfpi/dense_oracle.hpp"
#include "rfpi/field_io.hpp"
#include "rfpi/matrix_exp.hpp"
#include "rfpi/weight_checks.hpp"

namespace rfpi {

namespace fs = std::filesystem;

bool ScenarioResult::properties_pass() const {
  for (const auto& p : properties)
    if (p.asserted && !p.pass) return false;
  return true;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double cross_correlation_shift(const std::vector<double>& a, const std::vector<double>& b) {
  const int n = static_cast<int>(a.size());
  if (n == 0 || b.size() != a.size()) throw Error("cross_correlation_shift: need two profiles of equal length");
  auto corr = [&](int s) {
    double c = 0.0;
    for (int i = std::max(0, -s); i < std::min(n, n - s); ++i) c += a[i] * b[i + s];
    return c;
  };
  int best = 0;
  double best_c = corr(0);
  for (int s = -(n - 1); s <= n - 1; ++s) {
    const double c = corr(s);
    if (c > best_c) {
      best_c = c;
      best = s;
    }
  }
  if (best <= -(n - 1) || best >= n - 1) return best;
  const double cm = corr(best - 1), cp = corr(best + 1);
  const double denom = cm - 2.0 * best_c + cp;
  if (denom >= 0.0) return best;
  return best + 0.5 * (cm - cp) / denom;
}

double fringe_visibility(const std::vector<double>& coords, const std::vector<double>& intensity, double center,
                         double half_width) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (std::abs(coords[i] - center) > half_width) continue;
    lo = std::min(lo, intensity[i]);
    hi = std::max(hi, intensity[i]);
  }
  if (!std::isfinite(lo)) throw Error("fringe_visibility: no samples inside the window");
  return hi + lo > 0.0 ? (hi - lo) / (hi + lo) : 0.0;
}

namespace {

using Clock = std::chrono::steady_clock;
using Row = std::vector<std::string>;

Row cells(std::initializer_list<double> vs) {
  Row r;
  for (double v : vs) r.push_back(format_double(v));
  return r;
}

class Outputs {
 public:
  Outputs(fs::path dir, ScenarioResult& r) : dir_(std::move(dir)), r_(r) { fs::create_directories(dir_); }

  const fs::path& dir() const { return dir_; }

  void csv(const std::string& name, const Row& header, const std::vector<Row>& rows) {
    std::ofstream out(dir_ / name);
    if (!out) throw Error("cannot write " + (dir_ / name).string());
    if (!r_.valid) {
      out << "# INVALID:";
      for (const auto& n : r_.validity_notes) out << ' ' << n << ';';
      out << '\n';
    }
    join(out, header);
    for (const auto& row : rows) join(out, row);
    r_.files.push_back(name);
  }

  void text(const std::string& name, const std::string& body) {
    std::ofstream out(dir_ / name);
    if (!out) throw Error("cannot write " + (dir_ / name).string());
    if (!r_.valid) out << "# INVALID\n";
    out << body;
    r_.files.push_back(name);
  }

  void field(const std::string& stem, const SpinorField& f) {
    write_field(dir_ / stem, f);
    r_.files.push_back(stem + ".bin");
    r_.files.push_back(stem + ".json");
  }

  /// Line plot of columns ys (1-based) against column x of a CSV.
  void plot(const std::string& name, const std::string& csv_name, int x, const std::vector<int>& ys,
            const std::string& xlabel, const std::string& ylabel, bool logx = false, bool logy = false) {
    std::ostringstream gp;
    const std::string png = name.substr(0, name.rfind('.')) + ".png";
    gp << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set terminal pngcairo size 900,600\n"
       << "set output '" << png << "'\n"
       << "set xlabel '" << xlabel << "'\n"
       << "set ylabel '" << ylabel << "'\n";
    if (!r_.valid) gp << "set title 'INVALID run'\n";
    if (logx) gp << "set logscale x\n";
    if (logy) gp << "set logscale y\n";
    gp << "plot ";
    for (std::size_t i = 0; i < ys.size(); ++i)
      gp << (i ? ", " : "") << "'" << csv_name << "' using " << x << ":" << ys[i] << " with linespoints";
    gp << "\n";
    std::ofstream out(dir_ / name);
    out << gp.str();
    r_.files.push_back(name);
  }

 private:
  static void join(std::ostream& out, const Row& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }

  fs::path dir_;
  ScenarioResult& r_;
};

void add_property(ScenarioResult& r, const std::string& name, double value, const std::string& rel, double thr,
                  bool asserted = true) {
  Property p;
  p.name = name;
  p.value = value;
  p.relation = rel;
  p.threshold = thr;
  p.asserted = asserted;
  if (rel == "<=") p.pass = value <= thr;
  else if (rel == ">=") p.pass = value >= thr;
  else if (rel == "<") p.pass = value < thr;
  else if (rel == "==") p.pass = value == thr;
  else p.pass = true;
  r.properties.push_back(p);
}

void add_flag(ScenarioResult& r, const std::string& name, bool ok, bool asserted = true) {
  add_property(r, name, ok ? 1.0 : 0.0, "==", 1.0, asserted);
}

void check_boundary(ScenarioResult& r, const SpinorField& u, const std::string& what) {
  const double bm = boundary_mass(u);
  r.boundary_mass = std::max(r.boundary_mass, bm);
  if (bm > 1e-6) {
    r.valid = false;
    r.validity_notes.push_back(what + " boundary mass " + format_double(bm) + " > 1e-6");
  }
}

struct Common {
  std::uint64_t seed = 0;
  Backend backend = Backend::spectral_strang;
  Grid grid;
  ParticleConstants pc;
  Potential potential;
  SpinorField f0;
  SpinTerm hs;
  double t_final = 1.0;
  PropagatorConfig cfg;
  BuiltWeight weight;
  bool wide_packet = false;
};

Common read_common(Section& root, const fs::path& out, const std::string& default_backend) {
  Common c;
  const int seed = root.integer("seed", 0);
  if (seed < 0) root.fail("seed", "must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  const std::string backend = root.text("backend", default_backend);
  try {
    c.backend = parse_backend(backend);
  } catch (const Error& e) {
    root.fail("backend", e.what());
  }
  c.grid = build_grid(root.child("grid"));
  c.pc = build_particle(root.child("particle"));
  c.potential = build_potential(root.child("potential"), c.grid.dim(), c.pc);
  c.f0 = build_initial_state(root.child("initial_state"), c.grid, c.pc.hbar, &c.wide_packet);
  Section ts = root.child("time");
  c.t_final = ts.number("t_final_time", 1.0);
  if (!(c.t_final > 0.0)) ts.fail("t_final_time", "must be positive");
  c.cfg = build_propagator_config(ts, c.backend, c.t_final);
  if (c.cfg.checkpoint_every > 0) c.cfg.checkpoint_stem = out / "checkpoint";
  c.hs = build_spin_term(root.child("spin_term"), c.f0.spin_dim());
  c.weight = build_weight(root.child("weight"), c.grid, c.f0.spin_dim(), c.t_final);
  return c;
}

void note_common(ScenarioResult& r, const Common& c) {
  for (const auto& w : c.weight.warnings) r.warnings.push_back("weight: " + w);
  if (c.wide_packet) r.warnings.push_back("initial packet wider than a third of the box");
}

struct Region {
  Point center;
  double radius = std::numeric_limits<double>::infinity();

  bool operator()(const Point& x) const { return !std::isfinite(radius) || (x - center).norm() <= radius; }
};

Region read_region(Section s, int dim, const Region& fallback) {
  Region r;
  r.center = s.point("center_length", dim, fallback.center);
  if (std::isfinite(fallback.radius) || s.has("radius_length")) {
    r.radius = s.number("radius_length", fallback.radius);
    if (!(r.radius > 0.0)) s.fail("radius_length", "must be positive");
  }
  s.finish();
  return r;
}

/// Norm and survival history recorded from the step observer.
struct Trace {
  Region region;
  int every = 1;
  std::vector<Row> rows;
  double max_step_ratio = 0.0;
  double last_norm_sq = -1.0;
  double last_t = 0.0;
  int count = 0;
  bool last_recorded = false;
  SpinorField last;

  StepObserver observer() {
    return [this](double t, const SpinorField& u) {
      const double n2 = std::pow(l2_norm(u), 2);
      if (last_norm_sq > 0.0) max_step_ratio = std::max(max_step_ratio, std::sqrt(n2 / last_norm_sq));
      last_norm_sq = n2;
      last_t = t;
      last_recorded = count % every == 0;
      if (last_recorded) rows.push_back(cells({t, n2, survival_mass(u, region)}));
      else last = u;
      ++count;
    };
  }

  void close() {
    if (!last_recorded && count > 0) rows.push_back(cells({last_t, last_norm_sq, survival_mass(last, region)}));
    last_recorded = true;
  }
};

bool weight_nonnegative(const WeightSpec& w, const Grid& grid, double horizon) {
  if (w.is_zero()) return true;
  for (double t : {0.0, 0.5 * horizon, horizon})
    for (Eigen::Index f = 0; f < grid.size(); ++f)
      if (min_eigenvalue(SpinMatrix(w(t, grid.point(f)))) < 0.0) return false;
  return true;
}

ScenarioResult finalize(ScenarioResult r, const fs::path& dir, Clock::time_point start) {
  r.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  Json m;
  m["artifact"] = "rfpi";
  m["version"] = kVersion;
  m["scenario"] = r.scenario;
  m["config"] = r.resolved;
  m["wall_clock_seconds"] = r.wall_clock_seconds;
  m["validity"] = {{"valid", r.valid},
                   {"status", r.valid ? "VALID" : "INVALID"},
                   {"boundary_mass", r.boundary_mass},
                   {"notes", r.validity_notes}};
  Json props = Json::array();
  for (const auto& p : r.properties)
    props.push_back({{"name", p.name},
                     {"value", p.value},
                     {"relation", p.relation},
                     {"threshold", p.threshold},
                     {"asserted", p.asserted},
                     {"pass", p.pass}});
  m["properties"] = props;
  m["summary"] = r.summary;
  m["warnings"] = r.warnings;
  m["files"] = r.files;
  m["exit_code"] = r.exit_code();
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << '\n';
  return r;
}

std::vector<double> line_profile(const SpinorField& u, int along, int fixed_index, std::vector<double>* coords) {
  const Grid& g = u.grid();
  const int n = g.points(along);
  std::vector<double> out(n);
  if (coords) coords->resize(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Index f = along == 0 ? g.flatten(i, fixed_index) : g.flatten(fixed_index, i);
    out[i] = u.values().col(f).squaredNorm();
    if (coords) (*coords)[i] = g.coordinate(along, i);
  }
  return out;
}

int nearest_index(const Grid& g, int axis, double x) {
  const int i = static_cast<int>(std::lround((x - g.lo(axis)) / g.spacing(axis)));
  if (i < 0 || i >= g.points(axis)) throw ConfigError("config: screen position lies outside the grid");
  return i;
}

double l2_distance(const std::vector<double>& a, const std::vector<double>& b, double h) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s * h);
}

double l2_size(const std::vector<double>& a, double h) { return l2_distance(a, std::vector<double>(a.size()), h); }

}  // namespace

// ---------------------------------------------------------------------------

ScenarioResult run_corridor(const Json& config, const fs::path& out_dir) {
  const auto start = Clock::now();
  ScenarioResult r;
  r.scenario = "corridor";
  Section root(config, r.resolved, "");
  root.text("scenario", "corridor");
  Common c = read_common(root, out_dir, "spectral_strang");
  Section cs = root.child("corridor");
  const int nu = cs.integer("product_nu", 64);
  if (nu < 1) cs.fail("product_nu", "must be at least 1");
  const TauScheme tau = parse_tau_scheme(cs.text("tau_scheme", "uniform"));
  const KappaScheme kappa = parse_kappa_scheme(cs.text("kappa_scheme", "left"));
  const int every = cs.integer("record_every_steps", 1);
  if (every < 1) cs.fail("record_every_steps", "must be at least 1");
  cs.finish();
  Region whole;
  whole.center = Point::Zero(c.grid.dim());
  Trace trace;
  trace.region = read_region(root.child("survival_region"), c.grid.dim(), whole);
  trace.every = every;
  root.finish();
  note_common(r, c);

  Outputs out(out_dir, r);
  check_boundary(r, c.f0, "initial state");
  PropagatorConfig cfg = c.cfg;
  cfg.observer = trace.observer();
  const SpinorField u = evolve_damped(c.f0, c.potential, c.hs, c.weight.spec, cfg);
  trace.close();
  check_boundary(r, u, "damped state");

  PropagatorConfig leg = c.cfg;
  const Subdivision sub = make_subdivision(c.t_final, nu, tau, kappa, c.seed);
  const SpinorField prod = interleaved_evolution(c.f0, c.potential, c.hs, c.weight.spec, sub, std::nullopt, leg);
  check_boundary(r, prod, "product state");
  const double prod_err = l2_norm(prod - u);
  const double final_norm_sq = std::pow(l2_norm(u), 2);

  r.summary["final_norm_sq"] = final_norm_sq;
  r.summary["detection_probability"] = 1.0 - final_norm_sq;
  r.summary["product_nu"] = nu;
  r.summary["product_error_l2"] = prod_err;
  r.summary["product_norm_sq"] = std::pow(l2_norm(prod), 2);
  r.summary["max_step_norm_ratio"] = trace.max_step_ratio;

  const bool nonneg = weight_nonnegative(c.weight.spec, c.grid, c.t_final);
  add_property(r, "contraction_max_step_ratio", trace.max_step_ratio, "<=", 1.0 + 1e-10, nonneg);
  if (c.weight.spec.is_zero() && c.hs.is_zero())
    add_property(r, "unitary_norm_drift", std::abs(final_norm_sq - 1.0), "<=", 1e-10);
  add_property(r, "product_error_l2", prod_err, "", 0.0, false);

  out.csv("timeseries.csv", {"t", "norm_sq", "survival_mass"}, trace.rows);
  out.plot("timeseries.gp", "timeseries.csv", 1, {2, 3}, "t", "mass");
  out.field("final_state", u);
  out.field("product_state", prod);
  return finalize(std::move(r), out_dir, start);
}

// ---------------------------------------------------------------------------

namespace {

struct ProfileRun {
  std::vector<double> coords;
  std::vector<double> raw;
  SpinorField state;
};

}  // namespace

ScenarioResult run_multislit(const Json& config, const fs::path& out_dir) {
  const auto start = Clock::now();
  ScenarioResult r;
  r.scenario = "multislit";
  Section root(config, r.resolved, "");
  root.text("scenario", "multislit");
  Common c = read_common(root, out_dir, "spectral_strang");
  if (c.grid.dim() != 2) root.fail("grid", "multislit needs dim = 2");
  if (!c.weight.multislit) root.fail("weight", "multislit needs a weight of kind multislit");
  Section ms = root.child("multislit");
  const double screen = ms.number("screen_position_length");
  const double vis_center = ms.number("visibility_center_length", 0.0);
  const double vis_half = ms.number("visibility_half_width_length", 2.0);
  const auto scales = ms.numbers("scales", std::vector<double>{1.0});
  const bool single = ms.boolean("compare_single_hole", c.weight.multislit->hole_centers.size() >= 2);
  const bool symmetric = ms.boolean("assert_symmetric", false);
  const double wall_cut = ms.number("wall_overlap_k_threshold", 1e-3);
  ms.finish();
  root.finish();
  note_common(r, c);
  for (double s : scales)
    if (!(s >= 0.0)) root.fail("multislit.scales", "scales must be nonnegative");

  const MultislitParams& mp = *c.weight.multislit;
  auto k_of = [&mp](double xd) { return mp.wall_h2 ? std::exp(-mp.wall_h2(xd)) : mp.wall_k(xd); };
  const SpinorField& f0 = c.f0;
  const double overlap =
      survival_mass(f0, [&](const Point& x) { return k_of(x[1]) >= wall_cut; });
  r.summary["initial_wall_overlap_mass"] = overlap;
  if (overlap > 1e-6)
    throw Error("multislit: initial packet overlaps the wall (mass " + format_double(overlap) + " > 1e-6)");

  Outputs out(out_dir, r);
  check_boundary(r, f0, "initial state");
  const int screen_i = nearest_index(c.grid, 1, screen);
  const double n_holes = static_cast<double>(mp.hole_centers.size());

  auto run = [&](const WeightSpec& w) {
    ProfileRun pr;
    pr.state = evolve_damped(f0, c.potential, c.hs, w, c.cfg);
    pr.raw = line_profile(pr.state, 0, screen_i, &pr.coords);
    return pr;
  };

  Json runs = Json::array();
  double base_visibility = 0.0;
  for (std::size_t si = 0; si < scales.size(); ++si) {
    const double s = scales[si];
    const WeightSpec w = scale_weight(c.weight.spec, s);
    ProfileRun pr = run(w);
    check_boundary(r, pr.state, "scale " + format_double(s));
    // remove the uniform log N damping outside the wall
    const double offset = mp.subtract_offset ? 0.0 : s * mp.scale * std::log(n_holes);
    const double corr = std::exp(2.0 * offset * c.t_final);
    std::vector<Row> rows;
    for (std::size_t i = 0; i < pr.raw.size(); ++i) rows.push_back(cells({pr.coords[i], pr.raw[i], pr.raw[i] * corr}));
    const std::string name = "profile_scale" + std::to_string(si);
    out.csv(name + ".csv", {"coordinate", "intensity", "intensity_offset_corrected"}, rows);
    out.plot(name + ".gp", name + ".csv", 1, {2, 3}, "x'", "intensity");
    const double vis = fringe_visibility(pr.coords, pr.raw, vis_center, vis_half);
    if (si == 0) base_visibility = vis;
    Json jr = {{"scale", s}, {"visibility", vis}, {"transmitted_norm_sq", std::pow(l2_norm(pr.state), 2)},
               {"offset_correction", corr}, {"profile", name + ".csv"}};
    if (symmetric) {
      const int n = static_cast<int>(pr.raw.size());
      double peak = 0.0, defect = 0.0;
      for (int i = 0; i < n; ++i) {
        peak = std::max(peak, pr.raw[i]);
        defect = std::max(defect, std::abs(pr.raw[i] - pr.raw[(n - i) % n]));
      }
      const double rel = peak > 0.0 ? defect / peak : 0.0;
      jr["symmetry_defect"] = rel;
      add_property(r, "symmetry_defect_scale" + std::to_string(si), rel, "<=", 1e-6);
    }
    if (si == 0) out.field("final_state", pr.state);
    runs.push_back(jr);
  }
  r.summary["runs"] = runs;
  r.summary["holes"] = mp.hole_centers.size();

  if (single) {
    MultislitParams one = mp;
    one.hole_centers = {mp.hole_centers.front()};
    const auto built = multislit_weight(one, c.grid);
    ProfileRun pr = run(scale_weight(built.spec, scales.front()));
    check_boundary(r, pr.state, "single hole");
    std::vector<Row> rows;
    for (std::size_t i = 0; i < pr.raw.size(); ++i) rows.push_back(cells({pr.coords[i], pr.raw[i]}));
    out.csv("profile_single_hole.csv", {"coordinate", "intensity"}, rows);
    out.plot("profile_single_hole.gp", "profile_single_hole.csv", 1, {2}, "x'", "intensity");
    const double vis1 = fringe_visibility(pr.coords, pr.raw, vis_center, vis_half);
    r.summary["single_hole_visibility"] = vis1;
    add_property(r, "visibility_single_minus_multi", vis1 - base_visibility, "<", 0.0);
  }
  return finalize(std::move(r), out_dir, start);
}

// ---------------------------------------------------------------------------

ScenarioResult run_zeno(const Json& config, const fs::path& out_dir) {
  const auto start = Clock::now();
  ScenarioResult r;
  r.scenario = "zeno";
  Section root(config, r.resolved, "");
  root.text("scenario", "zeno");
  Common c = read_common(root, out_dir, "spectral_strang");
  const Json& wres = r.resolved["weight"];
  if (wres.value("kind", "") != "ball") root.fail("weight", "zeno needs a weight of kind ball");
  const double base_strength = wres.at("strength").get<double>();
  if (!(base_strength > 0.0)) root.fail("weight.strength", "must be positive for the zeno sweep");
  Section zs = root.child("zeno");
  auto strengths = zs.numbers("strengths", std::vector<double>{0.0, 1.0, 10.0, 100.0});
  const int nu = zs.integer("product_nu", 32);
  const bool monotone = zs.boolean("assert_monotone", true);
  const int every = zs.integer("record_every_steps", 1);
  zs.finish();
  for (double n : strengths)
    if (!(n >= 0.0)) root.fail("zeno.strengths", "strengths must be nonnegative");
  if (every < 1 || nu < 1) root.fail("zeno", "record_every_steps and product_nu must be positive");
  Region ball;
  {
    const auto& centers = wres.at("centers_length");
    ball.center = Point(c.grid.dim());
    for (int a = 0; a < c.grid.dim(); ++a) ball.center[a] = centers[0][a].get<double>();
    ball.radius = wres.at("radii_length")[0].get<double>();
  }
  const Region region = read_region(root.child("survival_region"), c.grid.dim(), ball);
  root.finish();
  note_common(r, c);

  const double inside = survival_mass(c.f0, region);
  if (inside < 0.5)
    throw Error("zeno: initial packet lies outside the ball (mass inside " + format_double(inside) + ")");

  Outputs out(out_dir, r);
  check_boundary(r, c.f0, "initial state");
  std::sort(strengths.begin(), strengths.end());
  std::vector<Row> summary_rows;
  std::vector<double> losses;
  Json runs = Json::array();
  const Subdivision sub = make_subdivision(c.t_final, nu, TauScheme::uniform, KappaScheme::left, c.seed);
  for (std::size_t i = 0; i < strengths.size(); ++i) {
    const double n = strengths[i];
    const WeightSpec w = scale_weight(c.weight.spec, n / base_strength);
    Trace trace;
    trace.region = region;
    trace.every = every;
    PropagatorConfig cfg = c.cfg;
    cfg.observer = trace.observer();
    const SpinorField u = evolve_damped(c.f0, c.potential, c.hs, w, cfg);
    trace.close();
    check_boundary(r, u, "strength " + format_double(n));
    const SpinorField prod = interleaved_evolution(c.f0, c.potential, c.hs, w, sub, std::nullopt, c.cfg);
    const double norm_sq = std::pow(l2_norm(u), 2);
    const double loss = 1.0 - norm_sq;
    const double surv = survival_mass(u, region);
    const double prod_norm_sq = std::pow(l2_norm(prod), 2);
    const double prod_err = l2_norm(prod - u);
    losses.push_back(loss);
    const std::string name = "timeseries_n" + std::to_string(i) + ".csv";
    out.csv(name, {"t", "norm_sq", "survival_mass"}, trace.rows);
    summary_rows.push_back(cells({n, norm_sq, loss, surv, prod_norm_sq, prod_err}));
    runs.push_back({{"strength", n}, {"final_norm_sq", norm_sq}, {"norm_loss", loss}, {"survival_mass", surv},
                    {"product_norm_sq", prod_norm_sq}, {"product_error_l2", prod_err},
                    {"max_step_norm_ratio", trace.max_step_ratio}, {"timeseries", name}});
    add_property(r, "contraction_max_step_ratio_n" + std::to_string(i), trace.max_step_ratio, "<=", 1.0 + 1e-10);
  }
  out.csv("zeno_summary.csv",
          {"strength", "final_norm_sq", "norm_loss", "survival_mass", "product_norm_sq", "product_error_l2"},
          summary_rows);
  out.plot("zeno_summary.gp", "zeno_summary.csv", 1, {3, 4}, "n", "mass");
  r.summary["runs"] = runs;
  r.summary["product_nu"] = nu;
  if (monotone) {
    double worst = 0.0;
    for (std::size_t i = 1; i < losses.size(); ++i) worst = std::min(worst, losses[i] - losses[i - 1]);
    add_property(r, "norm_loss_monotone_min_increment", worst, ">=", -1e-12);
  }
  return finalize(std::move(r), out_dir, start);
}

// ---------------------------------------------------------------------------

ScenarioResult run_aharonov_bohm(const Json& config, const fs::path& out_dir) {
  const auto start = Clock::now();
  ScenarioResult r;
  r.scenario = "aharonov_bohm";
  Section root(config, r.resolved, "");
  root.text("scenario", "aharonov_bohm");
  Common c = read_common(root, out_dir, "mol_rk4");
  if (c.grid.dim() != 2) root.fail("grid", "aharonov_bohm needs dim = 2");
  const Json& pres = r.resolved["potential"];
  if (pres.value("kind", "") != "solenoid") root.fail("potential", "aharonov_bohm needs a solenoid potential");
  if (c.backend == Backend::spectral_strang)
    root.fail("backend", "spectral_strang requested with A != 0; use mol_rk4");
  Section as = root.child("aharonov_bohm");
  const double screen = as.number("screen_position_length");
  const double alpha = as.number("flux_alpha_flux_units", pres.at("flux_alpha_flux_units").get<double>());
  const double tol = as.number("periodicity_tolerance", 1e-4);
  const double shift_tol = as.number("zero_flux_shift_tolerance_samples", 0.05);
  as.finish();
  root.finish();
  note_common(r, c);
  const double r0 = pres.at("core_radius_length").get<double>();
  const double period = 2.0 * kPi * c.pc.hbar / c.pc.charge;

  Outputs out(out_dir, r);
  check_boundary(r, c.f0, "initial state");
  const int screen_i = nearest_index(c.grid, 0, screen);
  const double h = c.grid.spacing(1);

  // Packets carry the line-integral phase q/hbar * int A from a cut that points
  // away from them, so their kinetic momentum is the configured one for every
  // flux and the alpha and alpha + period states differ by exp(i theta).
  Point mean = Point::Zero(2);
  const Json& packets = r.resolved["initial_state"]["packets"];
  for (const auto& pk : packets) mean += Point(Eigen::Map<const Eigen::Vector2d>(
                                       pk.at("center_length").get<std::vector<double>>().data()));
  mean /= static_cast<double>(packets.size());
  const double cut = mean.norm() > 0.0 ? std::atan2(-mean[1], -mean[0]) : 0.0;
  auto prepared = [&](double a) {
    const double k = c.pc.charge * a / (2.0 * kPi * c.pc.hbar);
    return multiply_pointwise(c.f0, [&](const Point& x) {
      double theta = std::atan2(x[1], x[0]) - cut;
      theta -= 2.0 * kPi * std::floor(theta / (2.0 * kPi));
      return std::polar(1.0, k * theta);
    });
  };

  std::vector<double> coords;
  auto run = [&](double a, const std::string& tag) {
    const Potential p = solenoid(a, r0, c.pc.mass, c.pc.charge, c.pc.hbar);
    const SpinorField u = evolve_damped(prepared(a), p, c.hs, c.weight.spec, c.cfg);
    check_boundary(r, u, tag);
    return line_profile(u, 1, screen_i, &coords);
  };
  const auto i0 = run(0.0, "flux 0");
  const auto ia = run(alpha, "flux alpha");
  const auto ip = run(alpha + period, "flux alpha + period");

  std::vector<Row> rows;
  for (std::size_t i = 0; i < coords.size(); ++i) rows.push_back(cells({coords[i], i0[i], ia[i], ip[i]}));
  out.csv("profiles.csv", {"coordinate", "intensity_flux0", "intensity_alpha", "intensity_alpha_plus_period"}, rows);
  out.plot("profiles.gp", "profiles.csv", 1, {2, 3, 4}, "y", "intensity");

  const double periodic_gap = l2_distance(ia, ip, h) / std::max(l2_size(ia, h), 1e-300);
  const double shift = cross_correlation_shift(i0, ia);
  const double predicted = std::fmod(std::fmod(alpha / period, 1.0) + 1.0, 1.0);

  // flux 0: the profile against its mirror image (grid symmetric about 0) or itself
  const int n = static_cast<int>(i0.size());
  const bool mirrorable = std::abs(c.grid.lo(1) + c.grid.hi(1)) <= 1e-12 * c.grid.length(1);
  std::vector<double> mirror(n);
  for (int i = 0; i < n; ++i) mirror[i] = mirrorable ? i0[(n - i) % n] : i0[i];
  const double zero_shift = cross_correlation_shift(i0, mirror);

  r.summary["flux_alpha"] = alpha;
  r.summary["flux_period"] = period;
  r.summary["relative_l2_gap_alpha_vs_alpha_plus_period"] = periodic_gap;
  r.summary["absolute_l2_gap_alpha_vs_alpha_plus_period"] = l2_distance(ia, ip, h);
  r.summary["fringe_shift_samples"] = shift;
  r.summary["fringe_shift_length"] = shift * h;
  r.summary["predicted_shift_fraction"] = predicted;
  r.summary["zero_flux_shift_samples"] = zero_shift;
  r.summary["zero_flux_shift_uses_mirror"] = mirrorable;
  r.summary["phase_cut_angle"] = cut;
  add_property(r, "flux_periodicity_relative_l2", periodic_gap, "<=", tol);
  add_property(r, "zero_flux_shift_samples", std::abs(zero_shift), "<=", shift_tol);
  return finalize(std::move(r), out_dir, start);
}

// ---------------------------------------------------------------------------

ScenarioResult run_convergence(const Json& config, const fs::path& out_dir) {
  const auto start = Clock::now();
  ScenarioResult r;
  r.scenario = "convergence";
  Section root(config, r.resolved, "");
  root.text("scenario", "convergence");
  Common c = read_common(root, out_dir, "spectral_strang");
  Section cs = root.child("convergence");
  const auto nus = cs.integers("nus", std::vector<int>{8, 16, 32, 64, 128});
  StudyOptions opt;
  opt.tau_scheme = parse_tau_scheme(cs.text("tau_scheme", "uniform"));
  opt.kappa_scheme = parse_kappa_scheme(cs.text("kappa_scheme", "left"));
  opt.seed = c.seed;
  opt.omega = build_omega(cs.child("omega"));
  opt.with_b1 = cs.boolean("with_b1", true);
  opt.saturation_floor = cs.number("saturation_floor", 1e-9);
  const double min_order = cs.number("min_order", 0.9);
  const bool strict = cs.boolean("require_strictly_decreasing", true);
  std::vector<KappaScheme> schemes;
  std::vector<int> k_nus;
  double k_ratio = 1.0 / 3.0;
  const bool sensitivity = cs.has("kappa_sensitivity");
  if (sensitivity) {
    Section ks = cs.child("kappa_sensitivity");
    for (const auto& name : ks.texts("schemes", std::vector<std::string>{"left", "right", "midpoint", "random"}))
      schemes.push_back(parse_kappa_scheme(name));
    k_nus = ks.integers("nus", std::vector<int>{16, 128});
    k_ratio = ks.number("max_ratio", 1.0 / 3.0);
    ks.finish();
    if (k_nus.size() < 2) ks.fail("nus", "need at least two values");
    if (schemes.size() < 2) ks.fail("schemes", "need at least two schemes");
  }
  cs.finish();
  root.finish();
  if (nus.size() < 2) throw ConfigError("config: field 'convergence.nus': need at least two values");
  note_common(r, c);

  Outputs out(out_dir, r);
  check_boundary(r, c.f0, "initial state");
  const ConvergenceStudy st = convergence_study(c.f0, c.potential, c.hs, c.weight.spec, c.t_final, nus, opt, c.cfg);
  for (const auto& w : st.warnings) r.warnings.push_back(w);
  if (!st.reference_consistent) {
    r.valid = false;
    r.validity_notes.push_back("reference runs disagree (gap " + format_double(st.reference_gap) + ")");
  }
  if (opt.omega && !opt.omega->condition_holds(c.t_final / nus.front()))
    r.warnings.push_back("omega schedule violates omega'(rho) >= rho on the sampled range");

  std::vector<Row> rows;
  for (std::size_t i = 0; i < st.records.size(); ++i) {
    const auto& rec = st.records[i];
    Row row = cells({static_cast<double>(rec.nu), rec.mesh, rec.err_l2});
    row.push_back(rec.err_b1 ? format_double(*rec.err_b1) : "");
    row.push_back(i + 1 == st.records.size() ? format_double(st.order) : "");
    rows.push_back(row);
  }
  out.csv("convergence.csv", {"nu", "mesh", "err_l2", "err_b1", "fitted_order"}, rows);
  out.plot("convergence.gp", "convergence.csv", 2, {3, 4}, "mesh", "error", true, true);

  r.summary["reference"] = st.reference;
  r.summary["reference_gap"] = st.reference_gap;
  r.summary["reference_consistent"] = st.reference_consistent;
  r.summary["fitted_order"] = st.order;
  r.summary["saturated"] = st.saturated;
  r.summary["strictly_decreasing"] = st.strictly_decreasing;
  r.summary["nonincreasing"] = st.nonincreasing;
  Json errs = Json::array();
  for (const auto& rec : st.records) errs.push_back(rec.err_l2);
  r.summary["err_l2"] = errs;

  if (st.saturated) {
    add_flag(r, "errors_saturated", true, false);
  } else {
    add_property(r, "fitted_order", st.order, ">=", min_order);
    if (strict) add_flag(r, "err_l2_strictly_decreasing", st.strictly_decreasing);
  }

  if (sensitivity) {
    const auto ks = kappa_sensitivity(c.f0, c.potential, c.hs, c.weight.spec, c.t_final, k_nus, schemes, c.seed,
                                      opt.omega, c.cfg);
    std::vector<Row> krows;
    Json kj = Json::array();
    for (const auto& k : ks) {
      krows.push_back(cells({static_cast<double>(k.nu), k.max_pairwise}));
      kj.push_back({{"nu", k.nu}, {"max_pairwise", k.max_pairwise}});
    }
    out.csv("kappa_sensitivity.csv", {"nu", "max_pairwise"}, krows);
    out.plot("kappa_sensitivity.gp", "kappa_sensitivity.csv", 1, {2}, "nu", "max pairwise distance", true, true);
    r.summary["kappa_sensitivity"] = kj;
    const double ratio = ks.front().max_pairwise > 0.0 ? ks.back().max_pairwise / ks.front().max_pairwise : 0.0;
    r.summary["kappa_sensitivity_ratio"] = ratio;
    add_property(r, "kappa_sensitivity_ratio", ratio, "<=", k_ratio);
  }
  return finalize(std::move(r), out_dir, start);
}

// ---------------------------------------------------------------------------

ScenarioResult run_oracle_compare(const Json& config, const fs::path& out_dir) {
  const auto start = Clock::now();
  ScenarioResult r;
  r.scenario = "oracle_compare";
  Section root(config, r.resolved, "");
  root.text("scenario", "oracle_compare");
  Common c = read_common(root, out_dir, "spectral_strang");
  if (c.grid.dim() != 1) root.fail("grid", "oracle_compare needs dim = 1");
  Section os = root.child("oracle_compare");
  const auto nus = os.integers("nus", std::vector<int>{1, 2, 4});
  const TauScheme tau = parse_tau_scheme(os.text("tau_scheme", "uniform"));
  const KappaScheme kappa = parse_kappa_scheme(os.text("kappa_scheme", "left"));
  const SliceKernelConfig kcfg = build_kernel_config(os.child("kernel"));
  const bool monotone = os.boolean("require_monotone", false);
  std::optional<double> max_distance;
  if (os.has("max_distance")) max_distance = os.number("max_distance");
  const bool dense_ref =
      os.boolean("dense_reference", c.grid.size() * c.f0.spin_dim() <= kDenseOracleLimit);
  os.finish();
  root.finish();
  note_common(r, c);
  if (c.grid.points(0) > kOracleMaxPoints)
    throw ConfigError("config: oracle_compare: grid exceeds " + std::to_string(kOracleMaxPoints) + " points");
  for (int nu : nus)
    if (nu < 1 || nu > kOracleMaxSlices)
      throw ConfigError("config: field 'oracle_compare.nus': each nu must lie in [1, 8]");

  Outputs out(out_dir, r);
  check_boundary(r, c.f0, "initial state");
  PropagatorConfig rc = c.cfg;
  if (dense_ref) rc.backend = Backend::dense_oracle;
  const SpinorField ref = evolve_damped(c.f0, c.potential, c.hs, c.weight.spec, rc);
  check_boundary(r, ref, "reference");
  r.summary["reference"] = dense_ref ? "dense_oracle damped evolution"
                                     : backend_name(rc.backend) + " damped evolution, dt " + format_double(rc.dt);

  std::vector<Row> rows;
  std::vector<double> dist;
  Json jr = Json::array();
  for (int nu : nus) {
    const Subdivision sub = make_subdivision(c.t_final, nu, tau, kappa, c.seed);
    const SpinorField k = sliced_kernel_apply(c.f0, c.potential, c.weight.spec, c.hs, sub, kcfg);
    check_boundary(r, k, "sliced kernel nu " + std::to_string(nu));
    const double d = l2_norm(k - ref);
    dist.push_back(d);
    rows.push_back(cells({static_cast<double>(nu), sub.mesh(), d}));
    jr.push_back({{"nu", nu}, {"mesh", sub.mesh()}, {"err_l2", d}});
    if (max_distance) add_property(r, "distance_nu" + std::to_string(nu), d, "<=", *max_distance);
  }
  out.csv("oracle_compare.csv", {"nu", "mesh", "err_l2"}, rows);
  out.plot("oracle_compare.gp", "oracle_compare.csv", 1, {3}, "nu", "L2 distance", true, true);
  r.summary["records"] = jr;
  if (monotone) {
    bool dec = true;
    for (std::size_t i = 1; i < dist.size(); ++i) dec = dec && dist[i] < dist[i - 1];
    add_flag(r, "distance_strictly_decreasing", dec);
  }
  return finalize(std::move(r), out_dir, start);
}

// ---------------------------------------------------------------------------

namespace {

double relative_change(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale < 1e-9) return 0.0;
  return std::abs(a - b) / scale;
}

Grid lattice_like(const Grid& g, int points) {
  std::vector<std::pair<double, double>> ext;
  for (int a = 0; a < g.dim(); ++a) ext.emplace_back(g.lo(a), g.hi(a));
  return make_grid(g.dim(), ext, std::vector<int>(g.dim(), points));
}

}  // namespace

ScenarioResult run_verify_weights(const Json& config, const fs::path& out_dir) {
  const auto start = Clock::now();
  ScenarioResult r;
  r.scenario = "verify_weights";
  Section root(config, r.resolved, "");
  root.text("scenario", "verify_weights");
  Common c = read_common(root, out_dir, "spectral_strang");
  Section vs = root.child("verify_weights");
  const int lattice = vs.integer("lattice_points", 64);
  const auto times = vs.numbers("times_time", std::vector<double>{0.0, 0.5 * c.t_final, c.t_final});
  const double tol = vs.number("stability_tolerance", 0.1);
  const double fd_fraction = vs.number("fd_step_fraction", 0.125);
  vs.finish();
  root.finish();
  note_common(r, c);
  if (lattice < 8) throw ConfigError("config: field 'verify_weights.lattice_points': need at least 8");

  Outputs out(out_dir, r);
  const Grid coarse = lattice_like(c.grid, lattice);
  const Grid fine = lattice_like(c.grid, 2 * lattice);
  const double fd = fd_fraction * coarse.spacing(0);

  // the weight's sampled constants (C_W, C*) are rebuilt on each lattice
  Json rebuilt_cfg = config.contains("weight") ? config.at("weight") : Json::object();
  auto rebuild = [&](const Grid& g) {
    Json scratch;
    return build_weight(Section(rebuilt_cfg, scratch, "weight"), g, c.f0.spin_dim(), c.t_final);
  };
  const BuiltWeight wc = rebuild(coarse), wf = rebuild(fine);
  const AssumptionReport rc = verify_assumption_2d(wc.spec, coarse, times, fd);
  const AssumptionReport rf = verify_assumption_2d(wf.spec, fine, times, fd);

  std::ostringstream txt;
  txt << "# weight " << c.weight.spec.name << ", lattice " << lattice << "^" << c.grid.dim() << "\n"
      << format_key_values(rc.key_values()) << "shift_c_w=" << format_double(wc.spec.shift) << "\n"
      << "# doubled lattice " << 2 * lattice << "^" << c.grid.dim() << "\n"
      << format_key_values(rf.key_values()) << "shift_c_w=" << format_double(wf.spec.shift) << "\n";

  add_property(r, "min_margin", std::min(rc.min_margin, rf.min_margin), ">=", -1e-8);
  add_property(r, "max_hermiticity_defect", std::max(rc.max_hermiticity_defect, rf.max_hermiticity_defect), "<=",
               1e-12);
  std::vector<std::pair<std::string, double>> changes = {
      {"growth_ratio_order1", relative_change(rc.growth_ratio[0], rf.growth_ratio[0])},
      {"growth_ratio_order2", relative_change(rc.growth_ratio[1], rf.growth_ratio[1])},
      {"linear_ratio_order1", relative_change(rc.linear_ratio[0], rf.linear_ratio[0])},
      {"linear_ratio_order2", relative_change(rc.linear_ratio[1], rf.linear_ratio[1])},
      {"time_modulus_ratio", relative_change(rc.time_modulus_ratio, rf.time_modulus_ratio)},
      {"shift_c_w", relative_change(wc.spec.shift, wf.spec.shift)}};

  Json jr = {{"coarse", Json::object()}, {"fine", Json::object()}};
  for (const auto& [k, v] : rc.key_values()) jr["coarse"][k] = v;
  for (const auto& [k, v] : rf.key_values()) jr["fine"][k] = v;

  if (c.weight.multislit && c.weight.multislit->scale == 1.0 && !c.weight.multislit->subtract_offset) {
    const MultislitReport mc = verify_multislit_bounds(*wc.multislit, coarse, fd);
    const MultislitReport mf = verify_multislit_bounds(*wf.multislit, fine, fd);
    txt << "# multislit bounds, lattice " << lattice << "\n"
        << format_key_values(mc.key_values()) << "# multislit bounds, lattice " << 2 * lattice << "\n"
        << format_key_values(mf.key_values());
    add_property(r, "multislit_min_value", std::min(mc.min_value, mf.min_value), ">=", -1e-10);
    add_property(r, "multislit_min_hole_margin", std::min(mc.min_hole_margin, mf.min_hole_margin), ">=", -1e-8);
    changes.push_back({"c_alpha_beta_order1", relative_change(mc.c_alpha_beta[0], mf.c_alpha_beta[0])});
    changes.push_back({"c_alpha_beta_order2", relative_change(mc.c_alpha_beta[1], mf.c_alpha_beta[1])});
    changes.push_back({"c_star", relative_change(mc.c_star, mf.c_star)});
    for (const auto& [k, v] : mc.key_values()) jr["coarse"]["multislit_" + k] = v;
    for (const auto& [k, v] : mf.key_values()) jr["fine"]["multislit_" + k] = v;
  }
  txt << "# relative change under lattice doubling\n";
  for (const auto& [k, v] : changes) {
    txt << k << "=" << format_double(v) << "\n";
    add_property(r, "stability_" + k, v, "<=", tol);
  }
  out.text("verify_weights.txt", txt.str());
  r.summary["reports"] = jr;
  return finalize(std::move(r), out_dir, start);
}

// ---------------------------------------------------------------------------

ScenarioResult run_scenario(const Json& config, const fs::path& out_dir, const std::string& forced) {
  Json cfg = config;
  if (!forced.empty()) cfg["scenario"] = forced;
  if (!cfg.contains("scenario") || !cfg["scenario"].is_string())
    throw ConfigError("config: field 'scenario': required string is missing");
  const std::string s = cfg["scenario"].get<std::string>();
  if (s == "corridor") return run_corridor(cfg, out_dir);
  if (s == "multislit") return run_multislit(cfg, out_dir);
  if (s == "zeno") return run_zeno(cfg, out_dir);
  if (s == "aharonov_bohm") return run_aharonov_bohm(cfg, out_dir);
  if (s == "convergence") return run_convergence(cfg, out_dir);
  if (s == "oracle_compare") return run_oracle_compare(cfg, out_dir);
  if (s == "verify_weights") return run_verify_weights(cfg, out_dir);
  throw ConfigError("config: field 'scenario': unknown scenario '" + s +
                    "' (expected corridor, multislit, zeno, aharonov_bohm, convergence, oracle_compare or "
                    "verify_weights)");
}

}  // namespace rfpi
