#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "boltzwall/kernel.hpp"
#include "boltzwall/spreading.hpp"

namespace boltzwall::cli {

namespace fs = std::filesystem;

int guarded(const std::function<int()>& f, std::ostream& err) {
  try {
    return f();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalAbort& e) {
    err << "numerical abort: " << e.what() << '\n';
    return kNumerical;
  } catch (const CertificateRefused& e) {
    err << "certificate refused at n = " << e.failing_level() << ": " << e.what() << '\n';
    return kRefused;
  }
}

// ------------------------------------------------------------------ simulate

namespace {

std::string snapshot_name(long step) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "snapshot_step%06ld.csv", step);
  return buf;
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  std::optional<CollisionKernel> kernel = cfg.make_kernel();
  TransportSolver solver(cfg.make_domain(), kernel, cfg.scheme(), BoundaryModel(cfg.boundary.T_wall));
  log << "simulate: " << solver.space()->size() << " cells x " << solver.velocity()->size()
      << " velocity nodes, t_end = " << cfg.time.t_end << '\n';
  prepare_output_dir(out);
  const std::vector<double> times = cfg.output.snapshots ? cfg.time.snapshots : std::vector<double>{};
  const RunResult res = run(solver, cfg.make_initial(), cfg.time.t_end, times);

  std::vector<std::string> names;
  if (!res.snapshots.empty()) fs::create_directories(out / "snapshots");
  for (const auto& f : res.snapshots) {
    const std::string name = "snapshots/" + snapshot_name(std::lround(f.time / cfg.time.dt));
    if (std::find(names.begin(), names.end(), name) != names.end()) continue;
    write_snapshot(out / name, f);
    names.push_back(name);
  }
  write_observables(out / "observables.csv", res.series);
  write_text(out / "config.toml", to_toml(cfg));
  if (cfg.output.plot_script) write_text(out / "plot.py", plot_script(names));

  const double m0 = res.series.front().mass;
  const double m1 = res.series.back().mass;
  log << "simulate: " << res.series.size() - 1 << " steps, " << names.size() << " snapshots, mass drift "
      << (m1 - m0) / m0 << ", final min f " << res.series.back().min_f << '\n';
  return kOk;
}

// ------------------------------------------------------------------ certify

namespace {

Json vec_json(Vec2 v) { return Json::array({v.x, v.y}); }

Json inputs_json(const RunConfig& cfg) {
  const auto& k = cfg.kernel;
  const auto& r = cfg.certifier;
  Json j;
  j["domain"] = {{"shape", cfg.domain.shape},
                 {"center", vec_json(cfg.domain.center)},
                 {"a", cfg.domain.a},
                 {"b", cfg.domain.b},
                 {"p", cfg.domain.p}};
  Json kernel = {{"potential", k.potential},
                 {"gamma", k.gamma},
                 {"c_phi", k.c_phi},
                 {"c_phi_max", k.C_phi},
                 {"angular", k.angular},
                 {"b_value", k.b_value},
                 {"nu", k.nu},
                 {"b0", k.b0},
                 {"eps", k.eps ? Json(*k.eps) : Json(nullptr)},
                 {"n_sigma", k.n_sigma}};
  j["kernel"] = kernel;
  j["grid"] = {{"v_max", cfg.grid.v_max}, {"h_v", cfg.grid.h_v}, {"h_x", cfg.grid.h_x}};
  j["t_wall"] = cfg.boundary.T_wall;
  j["x1"] = vec_json(r.x1);
  j["tau"] = r.tau;
  j["xi"] = r.xi;
  j["N"] = r.N;
  j["v_check"] = r.V_check;
  j["bounds"] = {{"E_f", r.bounds.E_f},   {"E_f_prime", r.bounds.E_f_prime}, {"Lp_f", r.bounds.Lp_f},
                 {"p_gamma", r.bounds.p_gamma}, {"W_f", r.bounds.W_f},     {"M", r.bounds.M},
                 {"R_f", r.bounds.R_f},   {"H_f", r.bounds.H_f}};
  j["oracle_grid"] = {{"v_max", r.oracle_v_max}, {"h_v", r.oracle_h_v}};
  j["seed_grid"] = {{"v_max", r.seed_v_max}, {"h_v", r.seed_h_v}};
  j["bound_grid"] = {{"v_max", r.seed_v_max}, {"h_v", r.bound_h_v}};
  return j;
}

std::string flag(const char* name, int samples, std::uint64_t seed, double margin) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s:calibrated:samples=%d:seed=%llu:margin=%.2f", name, samples,
                static_cast<unsigned long long>(seed), margin);
  return buf;
}

}  // namespace

CertifyOutcome certify(const RunConfig& cfg, std::ostream& log) {
  const auto& rc = cfg.certifier;
  const CollisionKernel kernel = cfg.make_kernel();
  const ConvexDomain domain = cfg.make_domain();
  const std::optional<double> eps = cfg.noncutoff() ? cfg.kernel.eps : std::nullopt;
  const int ns = cfg.kernel.n_sigma;

  auto seed_grid = std::make_shared<VelocityGrid>(rc.seed_v_max, rc.seed_h_v);
  CollisionOperators ops(seed_grid, kernel, ns, eps);

  log << "certify: calibrating cst_Q on " << rc.calibration_samples << " configurations\n";
  auto oracle_grid = std::make_shared<VelocityGrid>(rc.oracle_v_max, rc.oracle_h_v);
  SpreadOracle oracle(std::make_shared<CollisionOperators>(oracle_grid, kernel, ns, eps));
  const double cst_Q =
      calibrate_cst(oracle, calibration_samples(rc.calibration_samples, rc.calibration_seed), 64);

  log << "certify: calibrating loss constants on " << rc.bound_samples << " distributions\n";
  auto bound_grid = std::make_shared<VelocityGrid>(rc.seed_v_max, rc.bound_h_v);
  CollisionOperators bound_ops(bound_grid, kernel, ns, eps);
  const CalibratedConstants cal =
      calibrate_bound_constants(bound_ops, rc.bound_samples, rc.bound_seed, rc.bounds.p_gamma);
  const RecursionConstants k = recursion_constants(ops, rc.bounds, cal, cst_Q);

  CertifyOutcome res;
  res.inputs = inputs_json(cfg);
  std::vector<std::string> flags{flag("cst_Q", rc.calibration_samples, rc.calibration_seed, 0.95),
                                 flag("cst_L", rc.bound_samples, rc.bound_seed, 1.05)};
  if (cfg.noncutoff()) {
    flags.push_back(flag("cst_S", rc.bound_samples, rc.bound_seed, 1.05));
    flags.push_back(flag("cst_Q1", rc.bound_samples, rc.bound_seed, 1.05));
  }
  res.inputs["constants"] = {{"C_L", k.C_L},     {"C_Q", k.C_Q},         {"cst_Q", cst_Q},
                             {"cst_L", cal.cst_L}, {"cst_S", cal.cst_S}, {"cst_Q1", cal.cst_Q1}};

  SequenceInputs in;
  in.k = k;
  in.xi = rc.xi;
  in.N = rc.N;
  in.T_wall = cfg.boundary.T_wall;
  in.schedule = XiSchedule::Geometric;
  Json seed_info;
  if (rc.seed) {
    in.log_a0 = rc.seed->log_a0;
    in.log_b_wall = rc.seed->log_b_wall;
    in.R_min = rc.seed->R_min;
    in.delta_V = rc.seed->delta_V;
    in.tau = rc.tau;
    flags.push_back("seed:supplied");
    seed_info["route"] = "supplied";
  } else {
    log << "certify: constructive seed at x1 = (" << rc.x1.x << ", " << rc.x1.y << ")\n";
    const double d1 = domain.distance_to_boundary(rc.x1);
    const auto phi = lower_envelope(cfg.make_initial(), rc.x1, d1, *seed_grid);
    const UpheavalSeed seed = constructive_seed(ops, phi, k, domain, rc.x1);
    const DiffusionBound db = diffusion_bound(seed, domain);
    if (!(rc.tau > seed.tau0))
      throw InvalidArgument("certify: tau must exceed the seed time tau0 = " + format_double(seed.tau0));
    const double log_alpha = upheaval_log_alpha(seed, db.level, 0.5 * seed.tau0);
    in.log_a0 = std::log(0.5) + log_alpha -
                0.5 * seed.tau0 * k.C_L * std::pow(bracket(db.R_min), std::max(0.0, k.gamma));
    in.log_b_wall = db.log_b_wall;
    in.R_min = db.R_min;
    in.delta_V = std::min(seed.r[db.level], 0.5 * domain.geometric_constants(rc.x1).lambda);
    in.tau = rc.tau - seed.tau0;
    flags.push_back("seed:constructive");
    seed_info = {{"route", "constructive"},
                 {"R0", seed.box.R0},
                 {"r0", seed.box.r0},
                 {"eta0", seed.box.eta0},
                 {"vbar", vec_json(seed.box.vbar)},
                 {"d1", seed.d1},
                 {"Delta", seed.Delta},
                 {"tau0", seed.tau0},
                 {"log_a0_ladder", seed.log_a0},
                 {"ladder_levels", seed.levels()},
                 {"level", db.level},
                 {"log_alpha_level", log_alpha},
                 {"log_A", db.log_A},
                 {"B", db.B},
                 {"delta", db.delta},
                 {"delta_pp", db.delta_pp}};
  }
  seed_info["log_a0"] = in.log_a0;
  seed_info["log_b_wall"] = in.log_b_wall;
  seed_info["R_min"] = in.R_min;
  seed_info["delta_V"] = in.delta_V;
  seed_info["tau_sequences"] = in.tau;
  res.inputs["seed"] = seed_info;

  if (cfg.noncutoff()) {
    log << "certify: non-cutoff eps schedule, nu = " << cfg.kernel.nu << '\n';
    NoncutoffInputs nin;
    nin.seq = in;
    nin.b = AngularKernel::singular(cfg.kernel.nu, cfg.kernel.b0);
    nin.nu = cfg.kernel.nu;
    nin.C_phi = kernel.phi.C_phi;
    nin.cst_L = cal.cst_L;
    nin.cst_S = cal.cst_S;
    nin.cst_Q1 = cal.cst_Q1;
    nin.E_f = rc.bounds.E_f;
    nin.E_f_prime = rc.bounds.E_f_prime;
    nin.W_f = rc.bounds.W_f;
    nin.tau = rc.tau;
    res.cert = noncutoff_certificate(nin);
  } else {
    log << "certify: spreading sequences, N = " << rc.N << '\n';
    res.seq = spread_sequences(in);
    res.ledger = growth_ledger(*res.seq);
    res.cert = maxwellian_certificate(*res.ledger, *res.seq, rc.tau);
  }
  res.cert.calibration_flags = flags;
  return res;
}

int cmd_certify(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  prepare_output_dir(out);
  write_text(out / "config.toml", to_toml(cfg));
  try {
    const CertifyOutcome res = certify(cfg, log);
    write_text(out / "certificate.json", certificate_json(res.cert, res.inputs).dump(2) + "\n");
    log << "certify: kind = "
        << (res.cert.kind == LowerBoundCertificate::Kind::Maxwellian ? "maxwellian" : "exponential")
        << ", certified window |v| < " << res.cert.v_window << '\n';
    return kOk;
  } catch (const CertificateRefused& e) {
    const Json j = {{"refused", true}, {"failing_level", e.failing_level()}, {"reason", e.what()}};
    write_text(out / "refusal.json", j.dump(2) + "\n");
    throw;
  }
}

// ------------------------------------------------------------------ check

int cmd_check(const fs::path& snapshot, const fs::path& certificate, const std::optional<fs::path>& out,
              std::ostream& csv, std::ostream& log) {
  Json j;
  try {
    j = Json::parse(read_text(certificate));
  } catch (const Json::parse_error& e) {
    throw ConfigError("certificate " + certificate.string() + " is not valid JSON: " + e.what());
  }
  const CertificateFile cf = certificate_from_json(j);
  const auto rows = read_snapshot(snapshot);

  std::vector<FieldSample> samples;
  samples.reserve(rows.size());
  for (const auto& r : rows) {
    const double i = r.v1 / cf.h_v, k = r.v2 / cf.h_v;
    if (std::abs(i - std::round(i)) > 1e-6 || std::abs(k - std::round(k)) > 1e-6 ||
        std::hypot(r.v1, r.v2) > cf.v_max * (1.0 + 1e-12))
      throw ConfigError("snapshot velocity grid does not match the certificate grid (h_v = " +
                        format_double(cf.h_v) + ", v_max = " + format_double(cf.v_max) + ")");
    if (r.t != rows.front().t) throw ConfigError("snapshot mixes several times");
    samples.push_back({std::hypot(r.v1, r.v2), r.f});
  }
  if (!rows.empty() && rows.front().t < cf.cert.tau - 1e-9)
    throw ConfigError("snapshot time " + format_double(rows.front().t) + " precedes the certificate time " +
                      format_double(cf.cert.tau));

  const CheckReport rep = check_certificate(samples, cf.cert, cf.h_v, cf.V_check);
  const std::string text = check_csv(rep);
  if (out) {
    prepare_output_dir(*out);
    write_text(*out / "check.csv", text);
  } else {
    csv << text;
  }
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& m : rep.shells) worst = std::min(worst, m.log_min_ratio);
  log << "check: " << rep.shells.size() << " shells on |v| <= " << cf.V_check << ", smallest log margin " << worst
      << ", " << (rep.pass ? "pass" : "FAIL") << '\n';
  return rep.pass ? kOk : kCheckFailed;
}

// ------------------------------------------------------------------ oracle

namespace {

Json spread_record(const SpreadReport& r) {
  return {{"inputs", {{"vbar", vec_json(r.inputs.vbar)}, {"r", r.inputs.r}, {"R", r.inputs.R}, {"xi", r.inputs.xi}}},
          {"measured_min", r.measured_min},
          {"bound_value", r.bound_value},
          {"cst_Q", r.cst_Q},
          {"grid_spec",
           {{"v_max", r.grid_spec.v_max},
            {"h_v", r.grid_spec.h_v},
            {"n_sigma", r.grid_spec.n_sigma},
            {"target_nodes", r.grid_spec.target_nodes},
            {"rim_points", r.grid_spec.rim_points}}},
          {"pass", r.pass}};
}

Json oracle_spread(const RunConfig& cfg, std::uint64_t seed, std::ostream& log) {
  const auto& rc = cfg.certifier;
  if (seed == rc.calibration_seed) throw ConfigError("oracle spread: --seed must differ from calibration_seed");
  const std::optional<double> eps = cfg.noncutoff() ? cfg.kernel.eps : std::nullopt;
  auto grid = std::make_shared<VelocityGrid>(rc.oracle_v_max, rc.oracle_h_v);
  SpreadOracle oracle(std::make_shared<CollisionOperators>(grid, cfg.make_kernel(), cfg.kernel.n_sigma, eps));
  log << "oracle spread: calibrating cst_Q\n";
  const double cst = calibrate_cst(oracle, calibration_samples(rc.calibration_samples, rc.calibration_seed), 64);
  std::vector<SpreadInputs> set{{{0.0, 0.0}, 1.0, 1.0, 0.25}};
  const auto acc = spread_samples(64, seed);
  set.insert(set.end(), acc.begin(), acc.end());
  log << "oracle spread: verifying " << set.size() << " configurations\n";
  Json records = Json::array();
  bool pass = true;
  for (const auto& s : set) {
    const SpreadReport r = oracle.verify(s, cst);
    pass = pass && r.pass;
    records.push_back(spread_record(r));
  }
  return {{"oracle", "spread"}, {"cst_Q", cst}, {"acceptance_seed", seed}, {"records", records}, {"pass", pass}};
}

Json oracle_iterated(const RunConfig& cfg) {
  const auto& rc = cfg.certifier;
  const std::optional<double> eps = cfg.noncutoff() ? cfg.kernel.eps : std::nullopt;
  auto grid = std::make_shared<VelocityGrid>(rc.seed_v_max, rc.seed_h_v);
  CollisionOperators ops(grid, cfg.make_kernel(), cfg.kernel.n_sigma, eps);
  const ConvexDomain domain = cfg.make_domain();
  const auto phi = lower_envelope(cfg.make_initial(), rc.x1, domain.distance_to_boundary(rc.x1), *grid);
  const SeedBox box = iterated_seed(ops, phi);
  return {{"oracle", "iterated"},
          {"x1", vec_json(rc.x1)},
          {"grid", {{"v_max", rc.seed_v_max}, {"h_v", rc.seed_h_v}}},
          {"R0", box.R0},
          {"r0", box.r0},
          {"eta0", box.eta0},
          {"vbar", vec_json(box.vbar)},
          {"pass", box.eta0 > 0.0}};
}

Json oracle_bc_flux(const RunConfig& cfg) {
  std::vector<double> temps{0.5, 1.0, 2.0};
  if (std::find(temps.begin(), temps.end(), cfg.boundary.T_wall) == temps.end()) temps.push_back(cfg.boundary.T_wall);
  Json records = Json::array();
  bool pass = true;
  for (double T : temps) {
    const BoundaryModel wall(T);
    const double exact = wall.normalization(), quad = wall.normalization_quadrature();
    const double ratio = quad / exact;
    const bool ok = std::abs(ratio - 1.0) <= 1e-8;
    pass = pass && ok;
    records.push_back({{"T_wall", T}, {"normalization", exact}, {"quadrature", quad}, {"ratio", ratio}, {"pass", ok}});
  }
  return {{"oracle", "bc-flux"}, {"tolerance", 1e-8}, {"records", records}, {"pass", pass}};
}

Json oracle_kernel_asymptotics(const RunConfig& cfg) {
  std::vector<double> nus{0.5, 1.0, 1.5};
  if (cfg.noncutoff() && std::find(nus.begin(), nus.end(), cfg.kernel.nu) == nus.end()) nus.push_back(cfg.kernel.nu);
  const std::vector<double> eps{1e-2, 1e-3, 1e-4};
  Json records = Json::array();
  bool pass = true;
  for (double nu : nus) {
    const AsymptoticReport r = asymptotic_check(AngularKernel::singular(nu, cfg.kernel.b0), eps);
    pass = pass && r.pass();
    records.push_back({{"nu", nu},
                       {"eps", r.eps},
                       {"n_co", r.n_co},
                       {"m_nco", r.m_nco},
                       {"slope_n", r.slope_n},
                       {"expected_n", r.expected_n},
                       {"slope_m", r.slope_m},
                       {"expected_m", r.expected_m},
                       {"pass_n", r.pass_n},
                       {"pass_m", r.pass_m},
                       {"pass", r.pass()}});
  }
  return {{"oracle", "kernel-asymptotics"}, {"tolerance", 0.1}, {"records", records}, {"pass", pass}};
}

}  // namespace

int cmd_oracle(const std::string& name, const RunConfig& cfg, const fs::path& out, std::optional<std::uint64_t> seed,
               std::ostream& log) {
  Json rep;
  if (name == "spread")
    rep = oracle_spread(cfg, seed.value_or(2), log);
  else if (name == "iterated")
    rep = oracle_iterated(cfg);
  else if (name == "bc-flux")
    rep = oracle_bc_flux(cfg);
  else if (name == "kernel-asymptotics")
    rep = oracle_kernel_asymptotics(cfg);
  else
    throw ConfigError("unknown oracle '" + name + "' (spread, iterated, bc-flux, kernel-asymptotics)");
  prepare_output_dir(out);
  write_text(out / ("oracle_" + name + ".json"), rep.dump(2) + "\n");
  const bool pass = rep["pass"].get<bool>();
  log << "oracle " << name << ": " << (pass ? "pass" : "FAIL") << '\n';
  return pass ? kOk : kCheckFailed;
}

}  // namespace boltzwall::cli
