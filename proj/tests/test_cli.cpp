#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "commands.hpp"

using namespace boltzwall;
using namespace boltzwall::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("boltzwall_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

const char* kSmall = R"(
[grid]
v_max = 4.0
h_v = 1.0
h_x = 0.25

[time]
dt = 0.05
t_end = 0.1
snapshots = [0.0, 0.1]

[initial]
x_center = [0.3, 0.0]

[certifier]
tau = 0.1
seed_h_v = 0.5
oracle_h_v = 0.125
bound_samples = 16
n = 10
)";

RunConfig small() { return parse_config(kSmall); }

int run_guarded(const std::function<int()>& f) {
  std::ostringstream err;
  return guarded(f, err);
}

// Certificate on the small grid with a hand-set Maxwellian envelope rho exp(-|v|^2 / 2 theta).
fs::path write_certificate(const fs::path& dir, double rho, double theta, double tau) {
  LowerBoundCertificate c;
  c.kind = LowerBoundCertificate::Kind::Maxwellian;
  c.log_rho = std::log(rho);
  c.theta = theta;
  c.tau = tau;
  c.c_r = 0.1;
  c.xi = 0.5;
  c.N = 10;
  c.v_window = 100.0;
  const Json inputs = {{"grid", {{"v_max", 4.0}, {"h_v", 1.0}, {"h_x", 0.25}}}, {"v_check", 3.0}};
  fs::create_directories(dir);
  const fs::path p = dir / "certificate.json";
  write_text(p, certificate_json(c, inputs).dump(2));
  return p;
}

// Snapshot of the wall Maxwellian at time t on the small grid.
fs::path write_maxwellian_snapshot(const fs::path& dir, double t) {
  const RunConfig cfg = small();
  const TransportSolver solver(cfg.make_domain(), cfg.make_kernel(), cfg.scheme(), BoundaryModel(1.0));
  InitialData init;
  init.kind = InitialData::Kind::Maxwellian;
  DistributionField f = solver.initial_field(init);
  f.time = t;
  fs::create_directories(dir);
  const fs::path p = dir / "snap.csv";
  write_snapshot(p, f);
  return p;
}

}  // namespace

TEST_CASE("config: defaults parse from empty text") {
  const RunConfig c = parse_config("");
  CHECK(c.domain.shape == "disk");
  CHECK(c.grid.h_v == 0.5);
  CHECK(c.grid.h_x == 0.1);
  CHECK(c.time.dt == 0.05);
  CHECK(c.certifier.N == 30);
  CHECK(c.certifier.x1.x == -0.5);
  CHECK_FALSE(c.noncutoff());
  CHECK_FALSE(c.certifier.seed.has_value());
}

TEST_CASE("config: unknown keys, sections and wrong types are rejected") {
  CHECK_THROWS_AS(parse_config("[grid]\nhv = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[gird]\nh_v = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nh_v = \"fine\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[domain]\nshape = \"square\"\n"), ConfigError);
}

TEST_CASE("config: environment overrides") {
  const RunConfig c = parse_config("[grid]\nh_x = 0.1\n", {{"BOLTZWALL_GRID_H_X", "0.2"}, {"BOLTZWALL_DOMAIN_SHAPE", "ellipse"}});
  CHECK(c.grid.h_x == 0.2);
  CHECK(c.domain.shape == "ellipse");
  CHECK_THROWS_AS(parse_config("", {{"BOLTZWALL_NOPE_X", "1"}}), ConfigError);
  CHECK_THROWS_AS(parse_config("", {{"BOLTZWALL_GRID_H_V", "fine"}}), ConfigError);
}

TEST_CASE("config: cross-field checks") {
  SUBCASE("supplied seed is all or none") {
    CHECK_THROWS_AS(parse_config("[certifier]\nseed_log_a0 = -3.0\n"), ConfigError);
    const RunConfig c = parse_config(
        "[certifier]\nseed_log_a0 = -3.0\nseed_log_b_wall = -2.0\nseed_r_min = 2.0\nseed_delta_v = 1.0\n");
    REQUIRE(c.certifier.seed.has_value());
    CHECK(c.certifier.seed->R_min == 2.0);
  }
  SUBCASE("CFL") {
    CHECK_THROWS_AS(parse_config("[time]\ndt = 0.1\nt_end = 0.5\n[grid]\nh_x = 0.1\nv_max = 6.0\n"), ConfigError);
  }
  SUBCASE("t_end is a multiple of dt") { CHECK_THROWS_AS(parse_config("[time]\nt_end = 0.52\n"), ConfigError); }
  SUBCASE("singular kernel requires eps") {
    CHECK_THROWS_AS(parse_config("[kernel]\nangular = \"singular\"\nnu = 0.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[kernel]\nangular = \"singular\"\nnu = 0.5\neps = 1.0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[kernel]\neps = 0.1\n"), ConfigError);
    CHECK(parse_config("[kernel]\nangular = \"singular\"\nnu = 0.5\neps = 0.1\n").noncutoff());
  }
  SUBCASE("x1 outside the domain") { CHECK_THROWS_AS(parse_config("[certifier]\nx1 = [1.5, 0.0]\n"), ConfigError); }
  SUBCASE("snapshot outside [0, t_end]") { CHECK_THROWS_AS(parse_config("[time]\nsnapshots = [0.7]\n"), ConfigError); }
  SUBCASE("v_check beyond the grid") { CHECK_THROWS_AS(parse_config("[certifier]\nv_check = 7.0\n"), ConfigError); }
}

TEST_CASE("config: canonical TOML round-trips") {
  const RunConfig a = parse_config(
      std::string(kSmall) + "\n[domain]\nshape = \"superellipse\"\na = 1.1\nb = 0.9\np = 6\n");
  const std::string ta = to_toml(a);
  const RunConfig b = parse_config(ta);
  CHECK(to_toml(b) == ta);
  CHECK(b.domain.p == 6);
  CHECK(b.grid.h_x == 0.25);
}

TEST_CASE("io: snapshot round trip is exact") {
  const fs::path dir = scratch("snap");
  const RunConfig cfg = small();
  const TransportSolver solver(cfg.make_domain(), cfg.make_kernel(), cfg.scheme(), BoundaryModel(1.0));
  DistributionField f = solver.initial_field(cfg.make_initial());
  fs::create_directories(dir);
  write_snapshot(dir / "s.csv", f);
  const auto rows = read_snapshot(dir / "s.csv");
  REQUIRE(rows.size() == f.cells() * f.nodes());
  std::size_t i = 0;
  for (std::size_t c = 0; c < f.cells(); ++c)
    for (std::size_t k = 0; k < f.nodes(); ++k, ++i) CHECK(rows[i].f == f(c, k));
  write_text(dir / "bad.csv", "t,x,f\n");
  CHECK_THROWS_AS(read_snapshot(dir / "bad.csv"), ConfigError);
  write_text(dir / "bad2.csv", "t,x1,x2,v1,v2,f\n0,0,0,0,zero,1\n");
  CHECK_THROWS_AS(read_snapshot(dir / "bad2.csv"), ConfigError);
}

TEST_CASE("io: certificate JSON round trip") {
  const fs::path dir = scratch("cert_json");
  const fs::path p = write_certificate(dir, 0.01, 0.5, 0.1);
  const CertificateFile cf = certificate_from_json(Json::parse(read_text(p)));
  CHECK(cf.cert.kind == LowerBoundCertificate::Kind::Maxwellian);
  CHECK(cf.cert.log_rho == std::log(0.01));
  CHECK(cf.cert.theta == 0.5);
  CHECK(cf.h_v == 1.0);
  CHECK(cf.v_max == 4.0);
  CHECK(cf.V_check == 3.0);
  CHECK_THROWS_AS(certificate_from_json(Json::parse("{\"kind\": \"other\"}")), ConfigError);
}

TEST_CASE("io: output directory must be fresh") {
  const fs::path dir = scratch("outdir");
  prepare_output_dir(dir);
  prepare_output_dir(dir);
  write_text(dir / "x", "1");
  CHECK_THROWS_AS(prepare_output_dir(dir), ConfigError);
  const RunConfig cfg = small();
  CHECK(run_guarded([&] { return cmd_simulate(cfg, dir, std::cerr); }) == kUsage);
}

TEST_CASE("check: pass, fail and usage errors") {
  const fs::path dir = scratch("check");
  const fs::path snap = write_maxwellian_snapshot(dir / "snap", 0.1);
  std::ostringstream csv, log;

  SUBCASE("margin 2 passes") {
    // f = (2 pi)^{-1} exp(-|v|^2/2) against half of it
    const fs::path cert = write_certificate(dir / "c", 0.5 / (2 * M_PI), 1.0, 0.1);
    CHECK(cmd_check(snap, cert, std::nullopt, csv, log) == kOk);
    CHECK(csv.str().rfind("shell_speed,min_ratio,log_min_ratio,pass\n", 0) == 0);
  }
  SUBCASE("envelope ten times the field fails") {
    const fs::path cert = write_certificate(dir / "c", 10.0 / (2 * M_PI), 1.0, 0.1);
    CHECK(cmd_check(snap, cert, dir / "out", csv, log) == kCheckFailed);
    CHECK(fs::exists(dir / "out" / "check.csv"));
  }
  SUBCASE("empty snapshot fails") {
    const fs::path cert = write_certificate(dir / "c", 1e-3, 1.0, 0.1);
    write_text(dir / "empty.csv", "t,x1,x2,v1,v2,f\n");
    CHECK(cmd_check(dir / "empty.csv", cert, std::nullopt, csv, log) == kCheckFailed);
  }
  SUBCASE("velocity grid mismatch") {
    const fs::path cert = write_certificate(dir / "c", 1e-3, 1.0, 0.1);
    write_text(dir / "off.csv", "t,x1,x2,v1,v2,f\n0.1,0,0,0.5,0,0.1\n");
    CHECK(run_guarded([&] { return cmd_check(dir / "off.csv", cert, std::nullopt, csv, log); }) == kUsage);
    write_text(dir / "far.csv", "t,x1,x2,v1,v2,f\n0.1,0,0,5,0,0.1\n");
    CHECK(run_guarded([&] { return cmd_check(dir / "far.csv", cert, std::nullopt, csv, log); }) == kUsage);
  }
  SUBCASE("snapshot earlier than tau") {
    const fs::path cert = write_certificate(dir / "c", 1e-3, 1.0, 0.5);
    CHECK(run_guarded([&] { return cmd_check(snap, cert, std::nullopt, csv, log); }) == kUsage);
  }
}

TEST_CASE("simulate: zero-length run keeps only the initial snapshot") {
  const fs::path dir = scratch("sim0");
  const RunConfig cfg = parse_config(std::string(kSmall) + "", {{"BOLTZWALL_TIME_T_END", "0.0"},
                                                               {"BOLTZWALL_TIME_SNAPSHOTS", "[0.0]"}});
  std::ostringstream log;
  CHECK(cmd_simulate(cfg, dir, log) == kOk);
  CHECK(fs::exists(dir / "snapshots" / "snapshot_step000000.csv"));
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "snapshots")) ++n;
  CHECK(n == 1);
  CHECK(fs::exists(dir / "observables.csv"));
  CHECK(fs::exists(dir / "plot.py"));
  CHECK(parse_config(read_text(dir / "config.toml")).time.t_end == 0.0);
}

TEST_CASE("simulate: reruns are byte-identical") {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  const RunConfig cfg = small();
  std::ostringstream log;
  REQUIRE(cmd_simulate(cfg, a, log) == kOk);
  REQUIRE(cmd_simulate(cfg, b, log) == kOk);
  for (const char* f : {"observables.csv", "snapshots/snapshot_step000000.csv", "snapshots/snapshot_step000002.csv",
                        "config.toml", "plot.py"})
    CHECK(read_text(a / f) == read_text(b / f));
  const auto rows = read_snapshot(a / "snapshots/snapshot_step000002.csv");
  REQUIRE_FALSE(rows.empty());
  CHECK(rows.front().t == doctest::Approx(0.1));
}

TEST_CASE("oracle: names and the wall normalization") {
  const RunConfig cfg = small();
  std::ostringstream log;
  CHECK(run_guarded([&] { return cmd_oracle("nope", cfg, scratch("oracle_nope"), std::nullopt, log); }) == kUsage);
  const fs::path dir = scratch("oracle_bc");
  CHECK(cmd_oracle("bc-flux", cfg, dir, std::nullopt, log) == kOk);
  const Json j = Json::parse(read_text(dir / "oracle_bc-flux.json"));
  CHECK(j["pass"].get<bool>());
  CHECK(j["records"].size() == 3);
  CHECK(run_guarded([&] { return cmd_oracle("spread", cfg, scratch("oracle_sp"), 1, log); }) == kUsage);
}

TEST_CASE("certify: reruns are byte-identical") {
  const fs::path a = scratch("cert_a"), b = scratch("cert_b");
  const RunConfig cfg = small();
  std::ostringstream log;
  REQUIRE(cmd_certify(cfg, a, log) == kOk);
  REQUIRE(cmd_certify(cfg, b, log) == kOk);
  CHECK(read_text(a / "certificate.json") == read_text(b / "certificate.json"));
  CHECK(read_text(a / "config.toml") == read_text(b / "config.toml"));
}

TEST_CASE("certify: default config gives a Maxwellian certificate") {
  const fs::path a = scratch("cert_default");
  const RunConfig cfg = parse_config("");
  std::ostringstream log;
  REQUIRE(cmd_certify(cfg, a, log) == kOk);
  const Json j = Json::parse(read_text(a / "certificate.json"));
  CHECK(j["kind"] == "maxwellian");
  CHECK(j["C2"].is_null());
  CHECK(j["theta"].get<double>() > 0.0);
  CHECK(j["log_rho"].get<double>() < 0.0);
  CHECK(j["calibration_flags"].size() == 3);
  CHECK(j["calibration_flags"][2] == "seed:constructive");
  CHECK(j["inputs"]["grid"]["h_v"] == 0.5);
  const CertificateFile cf = certificate_from_json(j);
  CHECK(cf.cert.tau == 0.5);
}

TEST_CASE("certify: singular kernel with a supplied seed gives an exponential certificate") {
  const RunConfig cfg = parse_config(R"(
[kernel]
angular = "singular"
nu = 0.5
eps = 0.1

[initial]
kind = "maxwellian"

[certifier]
n = 2
oracle_h_v = 0.125
bound_samples = 16
seed_log_a0 = -3.0
seed_log_b_wall = -2.0
seed_r_min = 2.0
seed_delta_v = 1.0
)");
  std::ostringstream log;
  const CertifyOutcome r = certify(cfg, log);
  CHECK(r.cert.kind == LowerBoundCertificate::Kind::Exponential);
  CHECK(r.cert.K == doctest::Approx(exponent_K(0.5)));
  CHECK(r.cert.C2 > 0.0);
  CHECK(std::find(r.cert.calibration_flags.begin(), r.cert.calibration_flags.end(), "seed:supplied") !=
        r.cert.calibration_flags.end());
}

TEST_CASE("certify: refusal writes refusal.json and exits 4") {
  const fs::path dir = scratch("refuse");
  const RunConfig cfg = parse_config(R"(
[kernel]
angular = "singular"
nu = 1.0
eps = 0.1

[initial]
kind = "maxwellian"

[certifier]
n = 2
oracle_h_v = 0.125
bound_samples = 16
seed_log_a0 = -3.0
seed_log_b_wall = -2.0
seed_r_min = 2.0
seed_delta_v = 1.0
)");
  std::ostringstream log;
  CHECK(run_guarded([&] { return cmd_certify(cfg, dir, log); }) == kRefused);
  const Json j = Json::parse(read_text(dir / "refusal.json"));
  CHECK(j["refused"].get<bool>());
  CHECK(j["failing_level"].get<int>() >= 0);
}
