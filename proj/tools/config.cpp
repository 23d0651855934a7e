#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <toml++/toml.hpp>

extern char** environ;

namespace boltzwall::cli {

namespace {

const std::vector<std::string> kSections = {"domain", "boundary", "certifier", "grid",
                                            "initial", "kernel", "output", "time"};
const std::string kEnvPrefix = "BOLTZWALL_";

// Reads one section and remembers which keys were consumed.
class Section {
 public:
  Section(const toml::table& root, std::string name) : name_(std::move(name)) {
    if (const auto* node = root.get(name_)) {
      table_ = node->as_table();
      if (!table_) throw ConfigError("[" + name_ + "] must be a table");
    }
  }

  void read(const char* key, double& out) {
    if (const auto* n = find(key)) {
      if (auto v = n->value<double>(); v && (n->is_floating_point() || n->is_integer()))
        out = *v;
      else
        fail(key, "a number");
    }
  }
  void read(const char* key, int& out) {
    if (const auto* n = find(key)) {
      if (!n->is_integer()) fail(key, "an integer");
      const auto v = *n->value<std::int64_t>();
      if (v < -(1LL << 31) || v >= (1LL << 31)) fail(key, "a 32-bit integer");
      out = static_cast<int>(v);
    }
  }
  void read(const char* key, std::uint64_t& out) {
    if (const auto* n = find(key)) {
      if (!n->is_integer() || *n->value<std::int64_t>() < 0) fail(key, "a nonnegative integer");
      out = static_cast<std::uint64_t>(*n->value<std::int64_t>());
    }
  }
  void read(const char* key, bool& out) {
    if (const auto* n = find(key)) {
      if (!n->is_boolean()) fail(key, "a boolean");
      out = *n->value<bool>();
    }
  }
  void read(const char* key, std::string& out) {
    if (const auto* n = find(key)) {
      if (!n->is_string()) fail(key, "a string");
      out = *n->value<std::string>();
    }
  }
  void read(const char* key, std::vector<double>& out) {
    if (const auto* n = find(key)) {
      const auto* arr = n->as_array();
      if (!arr) fail(key, "an array of numbers");
      out.clear();
      for (const auto& e : *arr) {
        if (!e.is_number()) fail(key, "an array of numbers");
        out.push_back(*e.value<double>());
      }
    }
  }
  void read(const char* key, Vec2& out) {
    if (find(key)) {
      std::vector<double> v;
      read(key, v);
      if (v.size() != 2) fail(key, "an array of two numbers");
      out = {v[0], v[1]};
    }
  }
  void read(const char* key, std::optional<double>& out) {
    if (find(key)) {
      double v = 0.0;
      read(key, v);
      out = v;
    }
  }
  bool has(const char* key) const { return table_ && table_->contains(key); }

  void finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_)
      if (!used_.count(std::string(k.str())))
        throw ConfigError("unknown key '" + std::string(k.str()) + "' in [" + name_ + "]");
  }

 private:
  const toml::node* find(const char* key) {
    if (!table_) return nullptr;
    const auto* n = table_->get(key);
    if (n) used_.insert(key);
    return n;
  }
  [[noreturn]] void fail(const char* key, const char* what) const {
    throw ConfigError("[" + name_ + "] " + key + " must be " + what);
  }

  std::string name_;
  const toml::table* table_ = nullptr;
  std::set<std::string> used_;
};

void apply_environment(toml::table& root, const Environment& env) {
  for (const auto& [name, value] : env) {
    if (name.rfind(kEnvPrefix, 0) != 0) continue;
    const std::string rest = name.substr(kEnvPrefix.size());
    const auto cut = rest.find('_');
    std::string section = rest.substr(0, cut), key = cut == std::string::npos ? "" : rest.substr(cut + 1);
    std::transform(section.begin(), section.end(), section.begin(), [](unsigned char c) { return std::tolower(c); });
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    if (std::find(kSections.begin(), kSections.end(), section) == kSections.end() || key.empty())
      throw ConfigError("environment override " + name + " names no config section and key");
    if (!root.contains(section)) root.insert(section, toml::table{});
    auto* tbl = root.get(section)->as_table();
    if (!tbl) throw ConfigError("[" + section + "] must be a table");
    // TOML literal if it parses as one, otherwise a bare string
    try {
      toml::table parsed = toml::parse("v = " + value);
      tbl->insert_or_assign(key, std::move(*parsed.get("v")));
    } catch (const toml::parse_error&) {
      tbl->insert_or_assign(key, value);
    }
  }
}

RunConfig from_table(const toml::table& root) {
  for (const auto& [k, v] : root)
    if (std::find(kSections.begin(), kSections.end(), std::string(k.str())) == kSections.end())
      throw ConfigError("unknown section [" + std::string(k.str()) + "]");
  RunConfig c;

  Section d(root, "domain");
  d.read("shape", c.domain.shape);
  d.read("center", c.domain.center);
  d.read("a", c.domain.a);
  d.read("b", c.domain.b);
  d.read("p", c.domain.p);
  d.finish();

  Section k(root, "kernel");
  k.read("potential", c.kernel.potential);
  k.read("gamma", c.kernel.gamma);
  k.read("c_phi", c.kernel.c_phi);
  k.read("c_phi_max", c.kernel.C_phi);
  k.read("angular", c.kernel.angular);
  k.read("b_value", c.kernel.b_value);
  k.read("nu", c.kernel.nu);
  k.read("b0", c.kernel.b0);
  k.read("eps", c.kernel.eps);
  k.read("n_sigma", c.kernel.n_sigma);
  k.read("equilibrium_correction", c.kernel.equilibrium_correction);
  k.read("collision_mass_fix", c.kernel.collision_mass_fix);
  k.finish();

  Section g(root, "grid");
  g.read("v_max", c.grid.v_max);
  g.read("h_v", c.grid.h_v);
  g.read("h_x", c.grid.h_x);
  g.finish();

  Section t(root, "time");
  t.read("dt", c.time.dt);
  t.read("t_end", c.time.t_end);
  t.read("snapshots", c.time.snapshots);
  t.read("cfl_factor", c.time.cfl_factor);
  t.finish();

  Section b(root, "boundary");
  b.read("t_wall", c.boundary.T_wall);
  b.read("wall_samples", c.boundary.wall_samples);
  b.read("conservative", c.boundary.conservative);
  b.finish();

  Section i(root, "initial");
  i.read("kind", c.initial.kind);
  i.read("rho", c.initial.rho);
  i.read("temperature", c.initial.T);
  i.read("u", c.initial.u);
  i.read("x_center", c.initial.x_center);
  i.read("x_radius", c.initial.x_radius);
  i.read("v_center", c.initial.v_center);
  i.read("v_radius", c.initial.v_radius);
  i.finish();

  Section r(root, "certifier");
  auto& cc = c.certifier;
  r.read("x1", cc.x1);
  r.read("tau", cc.tau);
  r.read("xi", cc.xi);
  r.read("n", cc.N);
  r.read("v_check", cc.V_check);
  r.read("seed_v_max", cc.seed_v_max);
  r.read("seed_h_v", cc.seed_h_v);
  r.read("oracle_v_max", cc.oracle_v_max);
  r.read("oracle_h_v", cc.oracle_h_v);
  r.read("calibration_samples", cc.calibration_samples);
  r.read("calibration_seed", cc.calibration_seed);
  r.read("bound_samples", cc.bound_samples);
  r.read("bound_seed", cc.bound_seed);
  r.read("bound_h_v", cc.bound_h_v);
  r.read("e_f", cc.bounds.E_f);
  r.read("e_f_prime", cc.bounds.E_f_prime);
  r.read("lp_f", cc.bounds.Lp_f);
  r.read("p_gamma", cc.bounds.p_gamma);
  r.read("w_f", cc.bounds.W_f);
  r.read("mass", cc.bounds.M);
  r.read("r_f", cc.bounds.R_f);
  r.read("h_f", cc.bounds.H_f);
  const char* seed_keys[] = {"seed_log_a0", "seed_log_b_wall", "seed_r_min", "seed_delta_v"};
  const int present = static_cast<int>(std::count_if(std::begin(seed_keys), std::end(seed_keys),
                                                     [&](const char* key) { return r.has(key); }));
  if (present != 0 && present != 4)
    throw ConfigError("[certifier] seed_log_a0, seed_log_b_wall, seed_r_min and seed_delta_v go together");
  if (present == 4) {
    SuppliedSeed s;
    r.read("seed_log_a0", s.log_a0);
    r.read("seed_log_b_wall", s.log_b_wall);
    r.read("seed_r_min", s.R_min);
    r.read("seed_delta_v", s.delta_V);
    cc.seed = s;
  }
  r.finish();

  Section o(root, "output");
  o.read("dir", c.output.dir);
  o.read("snapshots", c.output.snapshots);
  o.read("plot_script", c.output.plot_script);
  o.finish();

  c.certifier.bounds.T_wall = c.boundary.T_wall;
  return c;
}

template <class F>
auto rethrow_as_config(const char* what, F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

ConvexDomain RunConfig::make_domain() const {
  return rethrow_as_config("[domain]", [&] {
    if (domain.shape == "disk") return ConvexDomain::disk(domain.center, domain.a);
    if (domain.shape == "ellipse") return ConvexDomain::ellipse(domain.center, domain.a, domain.b);
    if (domain.shape == "superellipse") return ConvexDomain::superellipse(domain.center, domain.a, domain.b, domain.p);
    throw ConfigError("[domain] shape must be disk, ellipse or superellipse");
  });
}

CollisionKernel RunConfig::make_kernel() const {
  return rethrow_as_config("[kernel]", [&] {
    CollisionKernel k;
    if (kernel.potential == "power")
      k.phi = KineticPotential::power(kernel.gamma, kernel.c_phi, kernel.C_phi);
    else if (kernel.potential == "mollified")
      k.phi = KineticPotential::mollified(kernel.gamma, kernel.c_phi, kernel.C_phi);
    else
      throw ConfigError("[kernel] potential must be power or mollified");
    if (kernel.angular == "constant")
      k.b = AngularKernel::constant(kernel.b_value);
    else if (kernel.angular == "singular")
      k.b = AngularKernel::singular(kernel.nu, kernel.b0);
    else
      throw ConfigError("[kernel] angular must be constant or singular");
    return k;
  });
}

bool RunConfig::noncutoff() const { return kernel.angular == "singular" && kernel.nu >= 0.0; }

SchemeParams RunConfig::scheme() const {
  SchemeParams p;
  p.dt = time.dt;
  p.v_max = grid.v_max;
  p.h_v = grid.h_v;
  p.h_x = grid.h_x;
  p.n_sigma = kernel.n_sigma;
  p.eps = kernel.eps;
  p.cfl_factor = time.cfl_factor;
  p.wall_samples = boundary.wall_samples;
  p.equilibrium_correction = kernel.equilibrium_correction;
  p.collision_mass_fix = kernel.collision_mass_fix;
  p.conservative_wall = boundary.conservative;
  return p;
}

InitialData RunConfig::make_initial() const {
  InitialData d;
  if (initial.kind == "maxwellian")
    d.kind = InitialData::Kind::Maxwellian;
  else if (initial.kind == "vacuum_patch")
    d.kind = InitialData::Kind::VacuumPatch;
  else if (initial.kind == "blob")
    d.kind = InitialData::Kind::Blob;
  else if (initial.kind == "gaussian_blob")
    d.kind = InitialData::Kind::GaussianBlob;
  else
    throw ConfigError("[initial] kind must be maxwellian, vacuum_patch, blob or gaussian_blob");
  d.rho = initial.rho;
  d.T = initial.T;
  d.u = initial.u;
  d.x_center = initial.x_center;
  d.x_radius = initial.x_radius;
  d.v_center = initial.v_center;
  d.v_radius = initial.v_radius;
  return d;
}

void validate(const RunConfig& c) {
  const ConvexDomain domain = c.make_domain();
  const CollisionKernel kernel = c.make_kernel();
  c.make_initial();

  const auto& k = c.kernel;
  require(k.n_sigma >= 2 && k.n_sigma % 2 == 0, "[kernel] n_sigma must be an even integer >= 2");
  if (c.noncutoff()) {
    require(k.nu < 2.0, "[kernel] nu must lie in [0, 2) for a non-cutoff kernel");
    require(k.eps.has_value(), "[kernel] a non-cutoff kernel (singular, nu >= 0) needs a split angle eps");
    require(*k.eps > 0.0 && *k.eps < 0.25 * kPi, "[kernel] eps must lie in (0, pi/4)");
  } else {
    require(!k.eps.has_value(), "[kernel] eps applies only to non-cutoff kernels");
  }

  const auto& g = c.grid;
  require(finite(g.v_max) && finite(g.h_v) && finite(g.h_x) && g.h_v > 0.0 && g.h_x > 0.0 && g.v_max >= 2.0 * g.h_v,
          "[grid] need h_v > 0, h_x > 0 and v_max >= 2 h_v");
  const auto& t = c.time;
  require(finite(t.dt) && t.dt > 0.0, "[time] dt must be positive");
  require(t.cfl_factor > 0.0 && t.cfl_factor <= 4.0, "[time] cfl_factor must lie in (0, 4]");
  require(t.dt * g.v_max <= t.cfl_factor * g.h_x * (1.0 + 1e-12),
          "[time] CFL condition dt * v_max <= cfl_factor * h_x violated");
  require(finite(t.t_end) && t.t_end >= 0.0, "[time] t_end must be nonnegative");
  const double steps = t.t_end / t.dt;
  require(std::abs(steps - std::round(steps)) <= 1e-6, "[time] t_end must be a multiple of dt");
  for (double s : t.snapshots)
    require(s >= 0.0 && s <= t.t_end + 1e-12, "[time] snapshot times must lie in [0, t_end]");

  const auto& b = c.boundary;
  require(finite(b.T_wall) && b.T_wall > 0.0, "[boundary] t_wall must be positive");
  require(b.wall_samples >= 8, "[boundary] wall_samples must be >= 8");

  const auto& i = c.initial;
  require(i.rho >= 0.0 && i.T > 0.0 && i.x_radius > 0.0 && i.v_radius > 0.0,
          "[initial] need rho >= 0 and positive temperature and radii");

  const auto& r = c.certifier;
  require(domain.contains(r.x1), "[certifier] x1 must lie inside the domain");
  require(r.tau > 0.0 && finite(r.tau), "[certifier] tau must be positive");
  require(r.xi > 0.0 && r.xi < 1.0, "[certifier] xi must lie in (0, 1)");
  require(r.N >= 1 && r.N <= 60, "[certifier] n must lie in [1, 60]");
  require(r.V_check > 0.0 && r.V_check <= g.v_max, "[certifier] v_check must lie in (0, v_max]");
  require(r.seed_h_v > 0.0 && r.seed_v_max >= 2.0 * r.seed_h_v, "[certifier] need seed_v_max >= 2 seed_h_v > 0");
  require(r.oracle_h_v > 0.0 && r.oracle_v_max >= 2.0 * r.oracle_h_v,
          "[certifier] need oracle_v_max >= 2 oracle_h_v > 0");
  require(r.bound_h_v > 0.0, "[certifier] bound_h_v must be positive");
  require(r.calibration_samples >= 64, "[certifier] calibration_samples must be >= 64");
  require(r.bound_samples >= 1, "[certifier] bound_samples must be >= 1");
  rethrow_as_config("[certifier] a priori bounds", [&] {
    r.bounds.validate(kernel.phi.gamma);
    return 0;
  });
  if (r.seed) {
    const auto& s = *r.seed;
    require(finite(s.log_a0) && finite(s.log_b_wall), "[certifier] seed_log_a0 and seed_log_b_wall must be finite");
    require(s.R_min >= 0.0 && s.delta_V > 0.0, "[certifier] need seed_r_min >= 0 and seed_delta_v > 0");
  }
  require(!c.output.dir.empty(), "[output] dir must not be empty");
}

Environment process_environment() {
  Environment env;
  for (char** e = environ; e && *e; ++e) {
    const std::string s(*e);
    const auto eq = s.find('=');
    if (eq != std::string::npos && s.rfind(kEnvPrefix, 0) == 0) env[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return env;
}

RunConfig parse_config(const std::string& text, const Environment& env) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config parse error: " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(os.str());
  }
  apply_environment(root, env);
  RunConfig c = from_table(root);
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path, const Environment& env) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), env);
}

namespace {

toml::array vec(Vec2 v) { return toml::array{v.x, v.y}; }

}  // namespace

std::string to_toml(const RunConfig& c) {
  toml::array snaps;
  for (double s : c.time.snapshots) snaps.push_back(s);
  toml::table kernel{{"potential", c.kernel.potential},
                     {"gamma", c.kernel.gamma},
                     {"c_phi", c.kernel.c_phi},
                     {"c_phi_max", c.kernel.C_phi},
                     {"angular", c.kernel.angular},
                     {"b_value", c.kernel.b_value},
                     {"nu", c.kernel.nu},
                     {"b0", c.kernel.b0},
                     {"n_sigma", c.kernel.n_sigma},
                     {"equilibrium_correction", c.kernel.equilibrium_correction},
                     {"collision_mass_fix", c.kernel.collision_mass_fix}};
  if (c.kernel.eps) kernel.insert("eps", *c.kernel.eps);
  const auto& r = c.certifier;
  toml::table cert{{"x1", vec(r.x1)},
                   {"tau", r.tau},
                   {"xi", r.xi},
                   {"n", r.N},
                   {"v_check", r.V_check},
                   {"seed_v_max", r.seed_v_max},
                   {"seed_h_v", r.seed_h_v},
                   {"oracle_v_max", r.oracle_v_max},
                   {"oracle_h_v", r.oracle_h_v},
                   {"calibration_samples", r.calibration_samples},
                   {"calibration_seed", static_cast<std::int64_t>(r.calibration_seed)},
                   {"bound_samples", r.bound_samples},
                   {"bound_seed", static_cast<std::int64_t>(r.bound_seed)},
                   {"bound_h_v", r.bound_h_v},
                   {"e_f", r.bounds.E_f},
                   {"e_f_prime", r.bounds.E_f_prime},
                   {"lp_f", r.bounds.Lp_f},
                   {"p_gamma", r.bounds.p_gamma},
                   {"w_f", r.bounds.W_f},
                   {"mass", r.bounds.M},
                   {"r_f", r.bounds.R_f},
                   {"h_f", r.bounds.H_f}};
  if (r.seed) {
    cert.insert("seed_log_a0", r.seed->log_a0);
    cert.insert("seed_log_b_wall", r.seed->log_b_wall);
    cert.insert("seed_r_min", r.seed->R_min);
    cert.insert("seed_delta_v", r.seed->delta_V);
  }
  const toml::table root{
      {"domain", toml::table{{"shape", c.domain.shape},
                             {"center", vec(c.domain.center)},
                             {"a", c.domain.a},
                             {"b", c.domain.b},
                             {"p", c.domain.p}}},
      {"kernel", kernel},
      {"grid", toml::table{{"v_max", c.grid.v_max}, {"h_v", c.grid.h_v}, {"h_x", c.grid.h_x}}},
      {"time", toml::table{{"dt", c.time.dt},
                           {"t_end", c.time.t_end},
                           {"snapshots", snaps},
                           {"cfl_factor", c.time.cfl_factor}}},
      {"boundary", toml::table{{"t_wall", c.boundary.T_wall},
                               {"wall_samples", c.boundary.wall_samples},
                               {"conservative", c.boundary.conservative}}},
      {"initial", toml::table{{"kind", c.initial.kind},
                              {"rho", c.initial.rho},
                              {"temperature", c.initial.T},
                              {"u", vec(c.initial.u)},
                              {"x_center", vec(c.initial.x_center)},
                              {"x_radius", c.initial.x_radius},
                              {"v_center", vec(c.initial.v_center)},
                              {"v_radius", c.initial.v_radius}}},
      {"certifier", cert},
      {"output", toml::table{{"dir", c.output.dir},
                             {"snapshots", c.output.snapshots},
                             {"plot_script", c.output.plot_script}}}};
  std::ostringstream os;
  os << root << "\n";
  return os.str();
}

}  // namespace boltzwall::cli
