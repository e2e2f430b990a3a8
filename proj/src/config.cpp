#include "rfpi/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace rfpi {

Section::Section(const Json& node, Json& resolved, std::string path)
    : node_(node), resolved_(resolved), path_(std::move(path)) {
  if (!node_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
  if (!resolved_.is_object()) resolved_ = Json::object();
}

std::string Section::key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

void Section::fail(const std::string& key, const std::string& message) const {
  throw ConfigError("config: field '" + key_path(key) + "': " + message);
}

bool Section::has(const std::string& key) const { return node_.contains(key); }

const Json& Section::raw(const std::string& key) {
  used_.insert(key);
  return node_.at(key);
}

double Section::number(const std::string& key, std::optional<double> fallback) {
  double v;
  if (!has(key)) {
    if (!fallback) fail(key, "required number is missing");
    v = *fallback;
  } else {
    const Json& j = raw(key);
    if (!j.is_number()) fail(key, "expected a number");
    v = j.get<double>();
  }
  if (!std::isfinite(v)) fail(key, "must be finite");
  resolved_[key] = v;
  return v;
}

int Section::integer(const std::string& key, std::optional<int> fallback) {
  int v;
  if (!has(key)) {
    if (!fallback) fail(key, "required integer is missing");
    v = *fallback;
  } else {
    const Json& j = raw(key);
    if (!j.is_number_integer()) fail(key, "expected an integer");
    v = j.get<int>();
  }
  resolved_[key] = v;
  return v;
}

bool Section::boolean(const std::string& key, std::optional<bool> fallback) {
  bool v;
  if (!has(key)) {
    if (!fallback) fail(key, "required boolean is missing");
    v = *fallback;
  } else {
    const Json& j = raw(key);
    if (!j.is_boolean()) fail(key, "expected true or false");
    v = j.get<bool>();
  }
  resolved_[key] = v;
  return v;
}

std::string Section::text(const std::string& key, std::optional<std::string> fallback) {
  std::string v;
  if (!has(key)) {
    if (!fallback) fail(key, "required string is missing");
    v = *fallback;
  } else {
    const Json& j = raw(key);
    if (!j.is_string()) fail(key, "expected a string");
    v = j.get<std::string>();
  }
  resolved_[key] = v;
  return v;
}

std::vector<double> Section::numbers(const std::string& key, std::optional<std::vector<double>> fallback) {
  std::vector<double> v;
  if (!has(key)) {
    if (!fallback) fail(key, "required list of numbers is missing");
    v = *fallback;
  } else {
    const Json& j = raw(key);
    if (j.is_number()) {
      v.push_back(j.get<double>());
    } else {
      if (!j.is_array()) fail(key, "expected a list of numbers");
      for (const auto& e : j) {
        if (!e.is_number()) fail(key, "expected a list of numbers");
        v.push_back(e.get<double>());
      }
    }
  }
  for (double x : v)
    if (!std::isfinite(x)) fail(key, "must be finite");
  resolved_[key] = v;
  return v;
}

std::vector<std::string> Section::texts(const std::string& key,
                                       std::optional<std::vector<std::string>> fallback) {
  std::vector<std::string> v;
  if (!has(key)) {
    if (!fallback) fail(key, "required list of strings is missing");
    v = *fallback;
  } else {
    const Json& j = raw(key);
    if (!j.is_array()) fail(key, "expected a list of strings");
    for (const auto& e : j) {
      if (!e.is_string()) fail(key, "expected a list of strings");
      v.push_back(e.get<std::string>());
    }
  }
  resolved_[key] = v;
  return v;
}

std::vector<int> Section::integers(const std::string& key, std::optional<std::vector<int>> fallback) {
  std::vector<int> v;
  if (!has(key)) {
    if (!fallback) fail(key, "required list of integers is missing");
    v = *fallback;
  } else {
    const Json& j = raw(key);
    if (!j.is_array()) fail(key, "expected a list of integers");
    for (const auto& e : j) {
      if (!e.is_number_integer()) fail(key, "expected a list of integers");
      v.push_back(e.get<int>());
    }
  }
  resolved_[key] = v;
  return v;
}

Point Section::point(const std::string& key, int dim, std::optional<Point> fallback) {
  std::optional<std::vector<double>> fb;
  if (fallback) fb = std::vector<double>(fallback->data(), fallback->data() + fallback->size());
  const auto v = numbers(key, fb);
  if (static_cast<int>(v.size()) != dim) fail(key, "expected " + std::to_string(dim) + " components");
  Point p(dim);
  for (int i = 0; i < dim; ++i) p[i] = v[i];
  return p;
}

std::vector<Point> Section::points(const std::string& key, int dim) {
  if (!has(key)) fail(key, "required list of points is missing");
  const Json& j = raw(key);
  if (!j.is_array()) fail(key, "expected a list of points");
  std::vector<Point> out;
  Json res = Json::array();
  for (const auto& e : j) {
    std::vector<double> v;
    if (e.is_number()) v.push_back(e.get<double>());
    else if (e.is_array()) {
      for (const auto& c : e) {
        if (!c.is_number()) fail(key, "expected numeric coordinates");
        v.push_back(c.get<double>());
      }
    } else {
      fail(key, "expected a list of points");
    }
    if (static_cast<int>(v.size()) != dim) fail(key, "each point needs " + std::to_string(dim) + " components");
    Point p(dim);
    for (int i = 0; i < dim; ++i) p[i] = v[i];
    out.push_back(p);
    res.push_back(v);
  }
  resolved_[key] = res;
  return out;
}

Section Section::child(const std::string& key) {
  static const Json empty = Json::object();
  if (!has(key)) {
    resolved_[key] = Json::object();
    return Section(empty, resolved_[key], key_path(key));
  }
  const Json& j = raw(key);
  if (!j.is_object()) fail(key, "expected an object");
  if (!resolved_.contains(key) || !resolved_[key].is_object()) resolved_[key] = Json::object();
  return Section(j, resolved_[key], key_path(key));
}

std::vector<Section> Section::children(const std::string& key) {
  if (!has(key)) fail(key, "required list is missing");
  const Json& j = raw(key);
  if (!j.is_array()) fail(key, "expected a list of objects");
  resolved_[key] = Json::array();
  Json& arr = resolved_[key];
  for (std::size_t i = 0; i < j.size(); ++i) arr.push_back(Json::object());
  std::vector<Section> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.emplace_back(j[i], arr[i], key_path(key) + "[" + std::to_string(i) + "]");
  return out;
}

void Section::finish() const {
  for (auto it = node_.begin(); it != node_.end(); ++it)
    if (!used_.count(it.key())) throw ConfigError("config: unknown key '" + key_path(it.key()) + "'");
}

Json parse_config_text(const std::string& text, const std::string& origin) {
  try {
    Json j = Json::parse(text, nullptr, true, true);
    if (!j.is_object()) throw ConfigError("config: " + origin + ": top level must be an object");
    return j;
  } catch (const Json::parse_error& e) {
    // byte offset -> line and column
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("config: " + origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": syntax error: " + e.what());
  }
}

Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "': expected KEY=VALUE");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  Json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override '" + assignment + "': empty path component");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = Json::object();
    node = &(*node)[part];
    if (!node->is_object()) throw ConfigError("override '" + assignment + "': '" + part + "' is not an object");
    start = dot + 1;
  }
}

Grid build_grid(Section s) {
  const int dim = s.integer("dim", 1);
  if (dim != 1 && dim != 2) s.fail("dim", "unsupported dimension " + std::to_string(dim));
  const auto lo = s.numbers("lo_length", std::vector<double>(dim, -10.0));
  const auto hi = s.numbers("hi_length", std::vector<double>(dim, 10.0));
  const auto pts = s.integers("points", std::vector<int>(dim, 256));
  if (static_cast<int>(lo.size()) != dim || static_cast<int>(hi.size()) != dim ||
      static_cast<int>(pts.size()) != dim)
    s.fail("points", "lo_length, hi_length and points need one entry per axis");
  s.finish();
  std::vector<std::pair<double, double>> ext;
  for (int a = 0; a < dim; ++a) ext.emplace_back(lo[a], hi[a]);
  try {
    return make_grid(dim, ext, pts);
  } catch (const Error& e) {
    throw ConfigError(std::string("config: grid: ") + e.what());
  }
}

ParticleConstants build_particle(Section s) {
  ParticleConstants pc;
  pc.mass = s.number("mass_natural_units", 1.0);
  pc.charge = s.number("charge_natural_units", 1.0);
  pc.hbar = s.number("hbar_natural_units", 1.0);
  if (!(pc.mass > 0.0)) s.fail("mass_natural_units", "must be positive");
  if (!(pc.hbar > 0.0)) s.fail("hbar_natural_units", "must be positive");
  s.finish();
  return pc;
}

Potential build_potential(Section s, int dim, const ParticleConstants& pc) {
  const std::string kind = s.text("kind", "free");
  Potential p;
  if (kind == "free") {
    p = free_particle(dim, pc.mass, pc.charge, pc.hbar);
  } else if (kind == "uniform_field") {
    p = uniform_electric_field(s.point("field_energy_per_charge_length", dim), pc.mass, pc.charge, pc.hbar);
  } else if (kind == "harmonic") {
    const double omega = s.number("omega_per_time");
    p = harmonic(s.point("center_length", dim, Point(Point::Zero(dim))), omega, pc.mass, pc.charge, pc.hbar);
  } else if (kind == "symmetric_gauge") {
    if (dim != 2) s.fail("kind", "symmetric_gauge needs dim = 2");
    p = symmetric_gauge(s.number("b0_field_units"), pc.mass, pc.charge, pc.hbar);
  } else if (kind == "solenoid") {
    if (dim != 2) s.fail("kind", "solenoid needs dim = 2");
    const double r0 = s.number("core_radius_length", 0.5);
    if (!(r0 > 0.0)) s.fail("core_radius_length", "must be positive");
    p = solenoid(s.number("flux_alpha_flux_units", 0.0), r0, pc.mass, pc.charge, pc.hbar);
  } else {
    s.fail("kind", "unknown potential '" + kind +
                       "' (expected free, uniform_field, harmonic, symmetric_gauge or solenoid)");
  }
  s.finish();
  return p;
}

SpinorField build_initial_state(Section s, const Grid& grid, double hbar, bool* wide) {
  const int dim = grid.dim();
  std::vector<Complex> weights;
  if (s.has("component_weights")) {
    const auto w = s.numbers("component_weights");
    for (double x : w) weights.emplace_back(x, 0.0);
  } else {
    s.numbers("component_weights", std::vector<double>{1.0});
    weights.emplace_back(1.0, 0.0);
  }
  if (weights.empty() || static_cast<int>(weights.size()) > kMaxSpin)
    s.fail("component_weights", "need between 1 and 8 entries");
  auto packets = s.children("packets");
  if (packets.empty()) s.fail("packets", "need at least one packet");
  SpinorField total;
  bool any_wide = false;
  for (auto& ps : packets) {
    PacketSpec spec;
    spec.center = ps.point("center_length", dim, Point(Point::Zero(dim)));
    spec.momentum = ps.point("momentum_hbar_per_length", dim, Point(Point::Zero(dim)));
    spec.width = ps.number("width_length", 1.0);
    if (!(spec.width > 0.0)) ps.fail("width_length", "must be positive");
    spec.component_weights = weights;
    spec.hbar = hbar;
    const double amp = ps.number("amplitude", 1.0);
    ps.finish();
    bool w = false;
    SpinorField g = gaussian_packet(grid, spec, &w);
    any_wide = any_wide || w;
    g *= Complex(amp);
    if (total.spin_dim() == 0 || total.values().size() == 0) total = g;
    else total += g;
  }
  s.finish();
  const double n = l2_norm(total);
  if (!(n > 0.0)) throw ConfigError("config: initial_state: packets cancel to zero");
  total *= Complex(1.0 / n);
  if (wide) *wide = any_wide;
  return total;
}

std::vector<Trajectory> build_trajectories(Section& parent, const std::string& key, int dim) {
  std::vector<Trajectory> out;
  for (auto& t : parent.children(key)) {
    const std::string kind = t.text("kind", "constant");
    if (kind == "constant") {
      const Point c = t.point("position_length", dim, Point(Point::Zero(dim)));
      out.push_back([c](double) { return c; });
    } else if (kind == "linear") {
      const Point a = t.point("start_length", dim, Point(Point::Zero(dim)));
      const Point v = t.point("velocity_length_per_time", dim, Point(Point::Zero(dim)));
      out.push_back([a, v](double s) { return Point(a + s * v); });
    } else if (kind == "sine") {
      const Point off = t.point("offset_length", dim, Point(Point::Zero(dim)));
      const Point amp = t.point("amplitude_length", dim);
      const double om = t.number("omega_per_time", 1.0);
      const double ph = t.number("phase", 0.0);
      out.push_back([off, amp, om, ph](double s) { return Point(off + std::sin(om * s + ph) * amp); });
    } else {
      t.fail("kind", "unknown trajectory '" + kind + "' (expected constant, linear or sine)");
    }
    t.finish();
  }
  if (out.empty()) parent.fail(key, "need at least one trajectory");
  return out;
}

BuiltWeight build_weight(Section s, const Grid& grid, int spin_dim, double horizon) {
  const std::string kind = s.text("kind", "zero");
  const int dim = grid.dim();
  BuiltWeight out;
  try {
    if (kind == "zero") {
      out.spec = zero_weight(spin_dim);
    } else if (kind == "constant") {
      out.spec = constant_weight(spin_dim, s.number("value_per_time"));
    } else if (kind == "corridor") {
      const double delta = s.number("delta_length");
      if (!(delta > 0.0)) s.fail("delta_length", "must be positive");
      auto traj = build_trajectories(s, "trajectories", dim);
      if (static_cast<int>(traj.size()) != spin_dim)
        s.fail("trajectories", "need one trajectory per spin component");
      out.spec = corridor_weight(traj, delta, horizon);
    } else if (kind == "ball") {
      const auto centers = s.points("centers_length", dim);
      const auto radii = s.numbers("radii_length");
      const double n = s.number("strength", 1.0);
      if (static_cast<int>(centers.size()) != spin_dim) s.fail("centers_length", "need one ball per spin component");
      out.spec = ball_confinement_weight(centers, radii, n, grid);
    } else if (kind == "multislit") {
      if (spin_dim != 1) s.fail("kind", "multislit weight is scalar (one spin component)");
      const auto centers = s.points("hole_centers_length", dim - 1);
      MultislitParams mp = standard_multislit(centers, s.number("hole_width_length", 1.0),
                                              s.number("wall_width_length", 0.5), s.number("hole_strength", 1.0),
                                              s.number("scale", 1.0));
      mp.subtract_offset = s.boolean("subtract_offset", false);
      const std::string profile = s.text("wall_profile", "h2");
      if (profile == "k") {
        auto h2 = mp.wall_h2;
        mp.wall_h2 = nullptr;
        mp.wall_k = [h2](double xd) { return std::exp(-h2(xd)); };
      } else if (profile != "h2") {
        s.fail("wall_profile", "expected h2 or k");
      }
      auto built = multislit_weight(mp, grid);
      out.spec = built.spec;
      out.warnings = built.warnings;
      out.multislit = mp;
    } else if (kind == "bump") {
      const Point c = s.point("center_length", dim, Point(Point::Zero(dim)));
      const double rin = s.number("inner_radius_length");
      const double rout = s.number("outer_radius_length");
      out.spec = bump_region_weight(radial_bump(c, rin, rout), s.number("strength", 1.0), spin_dim);
    } else {
      s.fail("kind", "unknown weight '" + kind + "' (expected zero, constant, corridor, ball, multislit or bump)");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("config: " + s.path() + ": " + e.what());
  }
  s.finish();
  return out;
}

SpinTerm build_spin_term(Section s, int spin_dim) {
  const std::string kind = s.text("kind", "zero");
  SpinTerm out = zero_spin_term(spin_dim);
  if (kind == "constant") {
    const std::size_t n = static_cast<std::size_t>(spin_dim) * spin_dim;
    const auto re = s.numbers("real_per_time");
    const auto im = s.numbers("imag_per_time", std::vector<double>(n, 0.0));
    if (re.size() != n || im.size() != n) s.fail("real_per_time", "need l*l entries, row major");
    SpinMatrix h(spin_dim, spin_dim);
    for (int i = 0; i < spin_dim; ++i)
      for (int j = 0; j < spin_dim; ++j) h(i, j) = Complex(re[i * spin_dim + j], im[i * spin_dim + j]);
    try {
      out = constant_spin_term(h);
    } catch (const Error& e) {
      s.fail("real_per_time", e.what());
    }
  } else if (kind != "zero") {
    s.fail("kind", "expected zero or constant");
  }
  s.finish();
  return out;
}

PropagatorConfig build_propagator_config(Section s, Backend backend, double t1) {
  PropagatorConfig cfg;
  cfg.backend = backend;
  cfg.t0 = 0.0;
  cfg.t1 = t1;
  cfg.dt = s.number("dt_time", 1e-3);
  if (!(cfg.dt > 0.0)) s.fail("dt_time", "must be positive");
  cfg.tolerance = s.number("oracle_tolerance", 1e-11);
  cfg.checkpoint_every = s.integer("checkpoint_every_steps", 0);
  s.finish();
  return cfg;
}

SliceKernelConfig build_kernel_config(Section s) {
  SliceKernelConfig k;
  k.quadrature = parse_kernel_quadrature(s.text("quadrature", "damped_gauss"));
  k.cutoff_width = s.number("cutoff_width_per_length_sq", k.cutoff_width);
  k.quad_points = s.integer("quad_points", k.quad_points);
  k.window = s.number("window_sqrt_hbar_rho_over_m", k.window);
  k.action_points = s.integer("action_points", k.action_points);
  k.factor_substeps = s.integer("factor_substeps", k.factor_substeps);
  s.finish();
  try {
    validate_kernel_config(k);
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + s.path() + ": " + e.what());
  }
  return k;
}

std::optional<OmegaSchedule> build_omega(Section s) {
  const std::string kind = s.text("kind", "none");
  std::optional<OmegaSchedule> out;
  if (kind == "power") {
    const double sigma = s.number("sigma", 1.0);
    const double c = s.number("coefficient", 1.0);
    if (!(sigma > 0.0)) s.fail("sigma", "must be positive");
    if (!(c > 0.0)) s.fail("coefficient", "must be positive");
    out = OmegaSchedule::power_law(sigma, c);
  } else if (kind == "linear") {
    out = OmegaSchedule::linear();
  } else if (kind != "none") {
    s.fail("kind", "expected none, linear or power");
  }
  s.finish();
  return out;
}

}  // namespace rfpi
