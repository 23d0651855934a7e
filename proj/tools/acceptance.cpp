// Acceptance run: one PASS/FAIL line per criterion. Exit 0 when all pass.
//
//   acceptance [--only 1,2,...] [--threads n] [--work dir]

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "boltzwall/kernel.hpp"
#include "boltzwall/parallel.hpp"
#include "boltzwall/spreading.hpp"
#include "commands.hpp"

using namespace boltzwall;
using namespace boltzwall::cli;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kWallTol = 1e-8;            // 1: relative flux error
constexpr double kEquilibriumFactor = 5.0;   // 2: multiple of the quadrature tolerance
constexpr int kSpreadSamples = 64;           // 3: acceptance set size
constexpr std::uint64_t kSpreadSeed = 2;     // 3: differs from the calibration seed
constexpr double kKTol = 1e-12;              // 5
constexpr double kSlopeTol = 0.10;           // 6: relative error of the fitted exponents
constexpr double kMassDrift = 0.01;          // 7: over one time unit
constexpr double kClampedPerStep = 1e-6;     // 7: clamped mass per step / total mass
constexpr double kEquilibriumDrift = 0.01;   // 7: sup-norm over 100 steps
constexpr int kEquilibriumSteps = 100;
constexpr double kVWindow = 3.0;             // 8
constexpr double kRelativeUlp = 1e-14;       // 4: rounding of r_0 2^{n/2} in the radius bracket

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

RunConfig default_config() { return parse_config(""); }

// Criterion 1.
Outcome wall_normalization() {
  double worst = 0.0;
  for (double T : {0.5, 1.0, 2.0}) {
    const BoundaryModel wall(T);
    const double exact = std::sqrt(2.0 * M_PI) * std::pow(T, 1.5);
    worst = std::max(worst, std::abs(wall.normalization_quadrature() - exact) / exact);
    worst = std::max(worst, std::abs(wall.normalization() - exact) / exact);
  }
  return {worst <= kWallTol, fmt("max relative error %.3e", worst) + fmt(" (tol %.0e)", kWallTol)};
}

// Criterion 2.
Outcome equilibrium_identity() {
  const RunConfig cfg = default_config();
  auto grid = std::make_shared<VelocityGrid>(cfg.grid.v_max, cfg.grid.h_v);
  const CollisionOperators ops(grid, cfg.make_kernel(), cfg.kernel.n_sigma);
  std::vector<double> M(grid->size());
  for (std::size_t k = 0; k < M.size(); ++k) M[k] = maxwellian(grid->velocity(k));
  const auto gain = ops.gain(M, M);
  const auto loss = ops.loss(M);
  double sup = 0.0;
  for (std::size_t k = 0; k < M.size(); ++k) sup = std::max(sup, std::abs(gain[k] - loss[k] * M[k]));
  const double tol = ops.quadrature_tolerance();
  return {sup <= kEquilibriumFactor * tol,
          fmt("sup |Q+(M,M) - L[M]M| = %.3e", sup) + fmt(", quadrature tolerance %.3e", tol) +
              fmt(", ratio %.3f (limit 5)", sup / tol)};
}

// Criterion 3.
Outcome spreading_oracle() {
  const RunConfig cfg = default_config();
  const auto& rc = cfg.certifier;
  auto grid = std::make_shared<VelocityGrid>(rc.oracle_v_max, rc.oracle_h_v);
  const SpreadOracle oracle(std::make_shared<CollisionOperators>(grid, cfg.make_kernel(), cfg.kernel.n_sigma));
  const auto calib = calibration_samples(rc.calibration_samples, rc.calibration_seed);
  const double cst = calibrate_cst(oracle, calib, 64);

  std::vector<SpreadInputs> set = spread_samples(kSpreadSamples, kSpreadSeed);
  for (const auto& a : set)
    for (const auto& c : calib)
      if (a.vbar.x == c.vbar.x && a.vbar.y == c.vbar.y && a.r == c.r && a.R == c.R && a.xi == c.xi)
        return {false, "acceptance set overlaps the calibration set"};
  set.insert(set.begin(), SpreadInputs{{0.0, 0.0}, 1.0, 1.0, 0.25});

  int passed = 0;
  double worst = std::numeric_limits<double>::infinity();
  bool quadratic = false;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const SpreadReport r = oracle.verify(set[i], cst);
    passed += r.pass;
    if (i == 0) quadratic = r.pass;
    worst = std::min(worst, r.measured_min / r.bound_value);
  }
  return {passed == static_cast<int>(set.size()),
          std::to_string(passed) + "/" + std::to_string(set.size()) + " pass (quadratic case " +
              (quadratic ? "pass" : "FAIL") + ")" + fmt(", cst_Q = %.4f", cst) +
              fmt(", smallest measured/bound %.3f", worst)};
}

// Criterion 4.
Outcome sequence_floors(const CertifyOutcome& c) {
  if (!c.seq || !c.ledger) return {false, "no cutoff ledger"};
  const auto& s = *c.seq;
  const auto& g = *c.ledger;
  const double r0 = s.r[0];
  int bad = 0;
  const int N = static_cast<int>(s.r.size()) - 1;
  for (int n = 0; n <= N; ++n) {
    if (s.log_b[n] < std::ldexp(g.log_alpha1, n)) ++bad;
    if (s.log_a[n] < std::ldexp(g.log_alpha2, n)) ++bad;
    const double p = std::pow(2.0, 0.5 * n);
    if (g.c_r * p > s.r[n]) ++bad;
    if (s.r[n] > r0 * p * (1.0 + kRelativeUlp)) ++bad;
  }
  return {bad == 0 && N == c.cert.N, "n = 0.." + std::to_string(N) + ", " + std::to_string(bad) + " violations" +
                                         fmt(", log alpha1 = %.4g", g.log_alpha1) +
                                         fmt(", log alpha2 = %.4g", g.log_alpha2) + fmt(", c_r = %.4g", g.c_r)};
}

// Criterion 5. K > 2 log2(2 + 2 nu / (2 - nu)); K = 2 allowed at nu = 0.
Outcome k_exponents() {
  double err = 0.0;
  bool strict = true;
  for (double nu : {0.25, 0.5, 1.0, 1.5, 1.9}) {
    const double floor = 2.0 * std::log2(2.0 + 2.0 * nu / (2.0 - nu));
    err = std::max(err, std::abs(exponent_K_floor(nu) - floor));
    strict = strict && exponent_K(nu) > floor;
  }
  const double k0 = exponent_K(0.0), f1 = exponent_K_floor(1.0), k1 = exponent_K(1.0);
  const bool ok = std::abs(k0 - 2.0) <= kKTol && std::abs(f1 - 4.0) <= kKTol && err <= kKTol && strict;
  return {ok, fmt("K(0) = %.15g", k0) + fmt(", K floor(1) = %.15g", f1) + fmt(", K(1) = %.15g", k1) +
                  fmt(", max floor error %.1e", err) + (strict ? ", K above floor" : ", K NOT above floor")};
}

// Criterion 6. Exponents -nu and 2 - nu.
Outcome asymptotics() {
  std::string detail;
  bool ok = true;
  for (double nu : {0.5, 1.0, 1.5}) {
    const AsymptoticReport r = asymptotic_check(AngularKernel::singular(nu, 1.0), {1e-2, 1e-3, 1e-4});
    const double en = std::abs(r.slope_n + nu) / nu;
    const double em = std::abs(r.slope_m - (2.0 - nu)) / (2.0 - nu);
    ok = ok && en <= kSlopeTol && em <= kSlopeTol;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%snu=%.1f: n_co %.4f (%.2f), m_nco %.4f (%.2f)", detail.empty() ? "" : "; ",
                  nu, r.slope_n, -nu, r.slope_m, 2.0 - nu);
    detail += buf;
  }
  return {ok, detail};
}

struct DefaultRun {
  RunResult result;
};

DefaultRun default_run() {
  const RunConfig cfg = default_config();
  const TransportSolver solver(cfg.make_domain(), cfg.make_kernel(), cfg.scheme(), BoundaryModel(cfg.boundary.T_wall));
  DefaultRun r;
  r.result = run(solver, cfg.make_initial(), 1.0, {cfg.certifier.tau, 1.0});
  return r;
}

// Criterion 7.
Outcome conservation(const DefaultRun& run) {
  const auto& s = run.result.series;
  const double m0 = s.front().mass, m1 = s.back().mass;
  const double drift = std::abs(m1 - m0) / m0;
  double clamped = 0.0;
  for (const auto& st : s) clamped = std::max(clamped, st.clamped_mass / st.mass);

  RunConfig cfg = default_config();
  cfg.initial.kind = "maxwellian";
  cfg.initial.T = cfg.boundary.T_wall;
  const TransportSolver solver(cfg.make_domain(), cfg.make_kernel(), cfg.scheme(), BoundaryModel(cfg.boundary.T_wall));
  const DistributionField f0 = solver.initial_field(cfg.make_initial());
  DistributionField f = f0;
  for (int i = 0; i < kEquilibriumSteps; ++i) solver.step(f);
  double sup = 0.0;
  for (std::size_t i = 0; i < f.values().size(); ++i) sup = std::max(sup, std::abs(f.values()[i] - f0.values()[i]));
  const double eq = sup / f0.max();

  return {drift <= kMassDrift && clamped <= kClampedPerStep && eq <= kEquilibriumDrift,
          fmt("mass drift %.3e over t = 1", drift) + fmt(", max clamped fraction %.1e", clamped) +
              fmt(", equilibrium sup drift %.3e after 100 steps", eq)};
}

// Criterion 8.
Outcome positivity(const DefaultRun& run, const CertifyOutcome& cert, const fs::path& work) {
  const RunConfig cfg = default_config();
  const DistributionField* f = nullptr;
  for (const auto& s : run.result.snapshots)
    if (std::abs(s.time - cfg.certifier.tau) < 1e-9) f = &s;
  if (!f) return {false, "no snapshot at tau"};
  double fmin = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < f->cells(); ++c) {
    if (f->space().flag(c) != SpatialGrid::Flag::Interior) continue;
    for (std::size_t k = 0; k < f->nodes(); ++k)
      if (norm(f->velocity().velocity(k)) <= kVWindow + 1e-12) fmin = std::min(fmin, (*f)(c, k));
  }

  fs::remove_all(work);
  fs::create_directories(work);
  write_snapshot(work / "snapshot_tau.csv", *f);
  write_text(work / "certificate.json", certificate_json(cert.cert, cert.inputs).dump(2) + "\n");
  std::ostringstream csv, log;
  const int rc = guarded(
      [&] {
        return cmd_check(work / "snapshot_tau.csv", work / "certificate.json", std::nullopt, csv, log);
      },
      log);
  return {fmin > 0.0 && rc == kOk, fmt("min f on interior cells, |v| <= 3: %.3e", fmin) +
                                       "; check exit " + std::to_string(rc) +
                                       fmt(", certified window |v| < %.4g", cert.cert.v_window)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  int threads = 0;
  std::string work = (fs::temp_directory_path() / "boltzwall_acceptance").string();
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 8));
  app.add_option("--threads", threads, "worker threads")->check(CLI::NonNegativeNumber);
  app.add_option("--work", work, "scratch directory for the end-to-end check");
  CLI11_PARSE(app, argc, argv);
  set_thread_count(threads);
  const std::set<int> sel = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8} : std::set<int>(only.begin(), only.end());

  bool all = true;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& body) {
    if (!sel.count(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && o.pass;
    std::printf("[%s] %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  std::optional<CertifyOutcome> cert;
  auto certified = [&]() -> const CertifyOutcome& {
    if (!cert) {
      std::ostringstream log;
      cert = certify(default_config(), log);
    }
    return *cert;
  };
  std::optional<DefaultRun> sim;
  auto simulated = [&]() -> const DefaultRun& {
    if (!sim) sim = default_run();
    return *sim;
  };

  report(1, "wall normalization", wall_normalization);
  report(2, "equilibrium identity", equilibrium_identity);
  report(3, "spreading oracle", spreading_oracle);
  report(4, "sequence floors", [&] { return sequence_floors(certified()); });
  report(5, "K exponents", k_exponents);
  report(6, "non-cutoff asymptotics", asymptotics);
  report(7, "conservation", [&] { return conservation(simulated()); });
  report(8, "end-to-end positivity", [&] { return positivity(simulated(), certified(), work); });
  std::printf("%s\n", all ? "ALL PASS" : "SOME CRITERIA FAILED");
  return all ? 0 : 1;
}
