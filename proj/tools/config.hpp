#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "boltzwall/certifier.hpp"
#include "boltzwall/transport.hpp"

namespace boltzwall::cli {

/// Raised for unreadable, ill-typed, unknown or inconsistent configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DomainConfig {
  std::string shape = "disk";  // disk | ellipse | superellipse
  Vec2 center;
  double a = 1.0;  // radius for a disk
  double b = 1.0;
  int p = 4;
};

struct KernelConfig {
  std::string potential = "power";  // power | mollified
  double gamma = 0.0;
  double c_phi = 1.0;
  double C_phi = 1.0;
  std::string angular = "constant";  // constant | singular
  double b_value = 1.0;
  double nu = 0.5;
  double b0 = 1.0;
  std::optional<double> eps;
  int n_sigma = 16;
  bool equilibrium_correction = true;
  bool collision_mass_fix = true;
};

struct GridConfig {
  double v_max = 6.0;
  double h_v = 0.5;
  double h_x = 0.1;
};

struct TimeConfig {
  double dt = 0.05;
  double t_end = 0.5;
  std::vector<double> snapshots{0.0, 0.5};
  double cfl_factor = 4.0;
};

struct BoundaryConfig {
  double T_wall = 1.0;
  int wall_samples = 256;
  bool conservative = false;
};

struct InitialConfig {
  std::string kind = "vacuum_patch";  // maxwellian | vacuum_patch | blob | gaussian_blob
  double rho = 1.0;
  double T = 1.0;
  Vec2 u;
  Vec2 x_center{0.4, 0.0};
  double x_radius = 0.3;
  Vec2 v_center;
  double v_radius = 1.0;
};

/// Seed values that replace the constructive route (all four or none).
struct SuppliedSeed {
  double log_a0 = 0.0;
  double log_b_wall = 0.0;
  double R_min = 0.0;
  double delta_V = 0.0;
};

struct CertifierConfig {
  Vec2 x1{-0.5, 0.0};
  double tau = 0.5;
  double xi = 0.5;
  int N = 30;
  double V_check = 3.0;
  double seed_v_max = 6.0;
  double seed_h_v = 0.25;
  double oracle_v_max = 6.0;
  double oracle_h_v = 0.0625;
  int calibration_samples = 64;
  std::uint64_t calibration_seed = 1;
  int bound_samples = 128;
  std::uint64_t bound_seed = 7;
  double bound_h_v = 0.5;
  AprioriBounds bounds;
  std::optional<SuppliedSeed> seed;
};

struct OutputConfig {
  std::string dir = "out";
  bool snapshots = true;
  bool plot_script = true;
};

struct RunConfig {
  DomainConfig domain;
  KernelConfig kernel;
  GridConfig grid;
  TimeConfig time;
  BoundaryConfig boundary;
  InitialConfig initial;
  CertifierConfig certifier;
  OutputConfig output;

  ConvexDomain make_domain() const;
  CollisionKernel make_kernel() const;
  /// True for a singular angular kernel with nu >= 0.
  bool noncutoff() const;
  SchemeParams scheme() const;
  InitialData make_initial() const;
};

using Environment = std::map<std::string, std::string>;

/// Environment variables named BOLTZWALL_<SECTION>_<KEY>.
Environment process_environment();

/// Parses TOML text, applies environment overrides, reads every key against the
/// schema and runs the cross-field checks. Throws ConfigError.
RunConfig parse_config(const std::string& text, const Environment& env = {});
RunConfig load_config(const std::string& path, const Environment& env = {});

/// Cross-field checks: grid sizes, CFL, gamma and nu ranges, snapshot times, x1 inside the domain.
void validate(const RunConfig& cfg);

/// Canonical TOML rendering of the full configuration (every key, fixed order).
std::string to_toml(const RunConfig& cfg);

}  // namespace boltzwall::cli
