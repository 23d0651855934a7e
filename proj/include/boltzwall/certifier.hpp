#pragma once

#include <span>
#include <string>
#include <vector>

#include "boltzwall/geometry.hpp"
#include "boltzwall/spreading.hpp"
#include "boltzwall/transport.hpp"

namespace boltzwall {

// Every quantity that can fall below the double range is carried as a natural
// logarithm (prefix log_). Plain fields hold exp(log_), which may underflow to 0.

/// Uniform a priori bounds on the solution.
struct AprioriBounds {
  double E_f = 2.5;        // sup local energy
  double E_f_prime = 2.5;  // sup weighted energy, exponent (2 + gamma)^+
  double Lp_f = 0.0;       // sup local L^p norm
  double p_gamma = 2.0;
  double W_f = 1.0;        // sup local W^{2,inf} norm
  double M = 1.0;          // total mass
  double R_f = 0.0;        // inf local mass
  double H_f = 1.0;        // sup |local entropy|
  double T_wall = 1.0;

  /// Throws InvalidArgument for negative or non-finite entries, M <= 0, or p_gamma
  /// outside (d/(d+gamma), inf) when gamma < 0.
  void validate(double gamma) const;
};

/// Kernel-dependent constants of the lower-bound recursions.
struct RecursionConstants {
  double C_L = 0.0;    // loss bound, cst_L n_b C_phi E_f (+ L^p for soft potentials)
  double C_Q = 0.0;    // spreading constant, cst_Q l_b c_phi
  double cst_L = 0.0;
  double cst_Q = 0.0;
  double gamma = 0.0;
  int d = 2;
};

/// C_L from bound_constants with the a priori energy (plus the S bound for a
/// non-cutoff split) and C_Q from the calibrated spreading constant.
RecursionConstants recursion_constants(const CollisionOperators& ops, const AprioriBounds& bounds,
                                       const CalibratedConstants& cal, double cst_Q);

/// inf over x in B(x1, radius) of f0(x, v) on the velocity grid, exact for each initial kind.
std::vector<double> lower_envelope(const InitialData& init, Vec2 x1, double radius, const VelocityGrid& grid);

/// Localized first lower bound at x1 and the ladder alpha_n(t) built on it.
///
/// Times are measured from tau0: the seed level a0 holds on [0, Delta] and
/// alpha_n(t) for n >= 1 is tabulated on a fixed grid of [0, Delta] that
/// accumulates geometrically at 0 and contains tau0 / 2.
struct UpheavalSeed {
  SeedBox box;
  Vec2 x1;
  double d1 = 0.0;
  double Delta = 0.0;  // min(1, d1 / (3 R0))
  double tau0 = 0.0;
  double log_a0 = 0.0;  // log(tau0^3 exp(-3 C_L <R0>^{gamma+}) eta0 / 2)
  Vec2 v1;
  RecursionConstants k;
  std::vector<double> r;                      // r_0 = min(Delta, r0), r_{n+1} = (3 sqrt 2 / 4) r_n
  std::vector<double> times;                  // ascending, times.front() == 0
  std::vector<std::vector<double>> log_alpha; // [level][time index], nondecreasing in time

  int levels() const { return static_cast<int>(log_alpha.size()) - 1; }
  double a0() const;
};

/// Runs iterated_seed on phi and builds the ladder up to the first level with
/// r_n >= 2 diam / tau0 + |v1| (or `levels` if larger). tau0 <= 0 selects Delta.
/// Throws InvalidArgument for a zero-mass phi, tau0 > Delta or x1 outside the domain.
UpheavalSeed constructive_seed(const CollisionOperators& ops, std::span<const double> phi,
                               const RecursionConstants& k, const ConvexDomain& domain, Vec2 x1,
                               double tau0 = 0.0, int levels = 0);

/// log alpha_n(t): the tabulated value at the largest grid time <= t.
double upheaval_log_alpha(const UpheavalSeed& seed, int n, double t);
double upheaval_alpha(const UpheavalSeed& seed, int n, double t);

/// One step of the ladder with alpha_n frozen at the window's left end:
/// C_Q r_n^{d+gamma} / 4^{d/2-1} alpha_n^2 int_{t_n(t)}^t exp(-s C_L <2 r_n + |v1|>^{gamma+}) ds.
double upheaval_step(const RecursionConstants& k, double r_n, double v1, double Delta, int n, double alpha_n,
                     double t);
/// t_n(t) = max(0, t - Delta / (2^{n+1} (|v1| + r_n))).
double upheaval_window_start(double Delta, int n, double v1, double r_n, double t);

struct DiffusionBound {
  int level = 0;  // first n with r_n >= R_min + |v1|
  double R_min = 0.0;
  double log_A = 0.0;
  double B = 0.0;
  double delta = 0.0;  // min(r_0, 2 d1 / tau0)
  double delta_prime = 0.0;
  double delta_pp = 0.0;  // min(delta, 2 delta' / Delta)
  double Delta = 0.0;
  double log_b_wall = 0.0;
  double b_wall() const;
};

/// log(2 A B |B(0, delta'')| / Delta) in d = 2.
double assemble_log_b_wall(double log_A, double B, double delta_pp, double Delta);

/// Throws InvalidArgument when the ladder is shorter than the required level.
DiffusionBound diffusion_bound(const UpheavalSeed& seed, const ConvexDomain& domain);

enum class XiSchedule { Geometric, Constant };

struct SequenceInputs {
  double log_a0 = 0.0;
  double log_b_wall = 0.0;
  double R_min = 0.0;
  double delta_V = 1.0;
  double tau = 1.0;
  double xi = 0.5;
  XiSchedule schedule = XiSchedule::Geometric;
  int N = 30;
  RecursionConstants k;
  double T_wall = 1.0;
};

/// xi_n = xi^n (geometric) or xi.
double xi_at(const SequenceInputs& in, int n);

/// log b at radius r_tilde: b_wall exp(-C_L tau <r_tilde>^{gamma+} - r_tilde^2 / 2T) / ((2 pi)^{(d-1)/2} T^{(d+1)/2}).
double log_b_term(const SequenceInputs& in, double r_tilde, double C_L);

struct SpreadSequences {
  SequenceInputs in;
  std::vector<double> r, r_tilde, log_a, log_b;
};

/// Term n + 1 of (r, r_tilde, log a, log b) from term n, with loss constant C_L and an
/// extra log factor on the a-term (zero in the cutoff case).
struct SequenceTerm {
  double r, r_tilde, log_a, log_b;
};
SequenceTerm spread_step(const SequenceInputs& in, int n, const SequenceTerm& prev, double C_L,
                         double log_a_factor = 0.0);

/// Throws InvalidArgument for non-positive inputs or xi outside (0, 1), and
/// NumericalAbort if a log term is not finite.
SpreadSequences spread_sequences(const SequenceInputs& in);

/// r_0 prod_{k>=1} (1 - xi^k), evaluated until the factors round to 1.
double floor_constant(double r0, double xi);

struct GrowthLedger {
  double log_alpha1 = 0.0;
  double log_alpha2 = 0.0;
  double log_C3 = 0.0;
  double q = 0.0;  // 2^{(d+gamma)/2} xi^{d/2-1} / 2^{3/2}
  double lambda = 0.0;
  double c_r = 0.0;
  std::vector<int> k_n;  // k_n for n = 1..N (index n - 1); -1 when no k qualifies
  double log_alpha() const { return log_alpha1 < log_alpha2 ? log_alpha1 : log_alpha2; }
};

/// Throws CertificateRefused with the first n where b_n < alpha1^{2^n} or a_n < alpha2^{2^n}.
GrowthLedger growth_ledger(const SpreadSequences& seq);

struct Provenance {
  std::string name;
  double value = 0.0;
  std::string source;  // formula | calibrated | derived | input | safety
};

struct LowerBoundCertificate {
  enum class Kind { Maxwellian, Exponential };
  Kind kind = Kind::Maxwellian;
  double tau = 0.0;
  double log_rho = 0.0, theta = 0.0;  // Maxwellian
  double log_C1 = 0.0, C2 = 0.0, K = 2.0;  // exponential
  double log_alpha1 = 0.0, log_alpha2 = 0.0;
  double lambda = 0.0;
  double c_r = 0.0;
  double cst_Q = 0.0, cst_L = 0.0;
  double log_b_wall = 0.0;
  double xi = 0.0;
  int N = 0;
  double v_window = 0.0;  // the sweep certifies |v| < v_window
  std::vector<std::string> calibration_flags;
  std::vector<Provenance> provenance;

  double rho() const;
  double C1() const;
  double log_envelope(double speed) const;
  double envelope(double speed) const;
};

/// theta = c_r^2 / (2 ln(1/alpha)).
double maxwellian_theta(double log_alpha, double c_r);

/// First n whose shell [R_{n-1}, R_n), R_n = c_r 2^{n/2}, is not dominated by c_n,
/// or -1 when every level passes.
int sweep_failure(const LowerBoundCertificate& cert, std::span<const double> log_c);

/// Needs a geometric schedule. The sweep uses theta from alpha^2 so the envelope at
/// the inner radius of every shell stays below the floor. Throws CertificateRefused
/// when alpha is not in (0, 1) or the sweep fails.
LowerBoundCertificate maxwellian_certificate(const GrowthLedger& ledger, const SpreadSequences& seq, double tau);

struct NoncutoffInputs {
  SequenceInputs seq;
  AngularKernel b = AngularKernel::singular(0.5, 1.0);  // untruncated singular kernel
  double nu = 0.0;
  double C_phi = 1.0;
  double cst_L = 1.0, cst_S = 1.0, cst_Q1 = 1.0;
  double E_f = 1.0, E_f_prime = 1.0, W_f = 1.0;
  double tau = 1.0;
};

/// K = 2 for nu = 0, else 1.01 x 2 log(2 + 2 nu / (2 - nu)) / log 2.
double exponent_K(double nu);
/// 2 log(2 + 2 nu / (2 - nu)) / log 2.
double exponent_K_floor(double nu);

/// m of the part of b below eps: quadrature above 1e-6, the bound b0 eps^{2-nu}/(2-nu) below.
double log_m_nco(const AngularKernel& b, double log_eps);
/// n of the part of b above eps, with the exact power integral below 1e-6.
double log_n_co(const AngularKernel& b, double log_eps);

struct NoncutoffTrace {
  std::vector<double> log_eps;  // eps_{n+1}, n = 0..N-1
  std::vector<double> log_C_L;
  SpreadSequences seq;
};

/// Per level: eps_{n+1} by bisection on log eps in [-1e300, log(pi/4)), then the
/// sequences with C_L(eps) and the factor 1/2 left by the Q^1 remainder, the
/// time partition Delta_k = 2^{-(k+1)}, and (C1, C2) fitted to the shell floors.
/// Refuses nu > 1.9, an exhausted eps interval, or a failing sweep.
LowerBoundCertificate noncutoff_certificate(const NoncutoffInputs& in, NoncutoffTrace* trace = nullptr);

struct ShellMargin {
  double shell_speed = 0.0;  // lower edge of the shell
  double min_ratio = 0.0;
  double log_min_ratio = 0.0;
  bool pass = false;
};

struct CheckReport {
  std::vector<ShellMargin> shells;
  bool pass = false;
};

struct FieldSample {
  double speed;
  double f;
};

/// Shells of width h_v on |v| <= V_check; margin = min f / envelope over the shell.
/// An empty sample set fails with zero margins.
CheckReport check_certificate(std::span<const FieldSample> samples, const LowerBoundCertificate& cert, double h_v,
                              double V_check = 3.0);
CheckReport check_certificate(const DistributionField& field, const LowerBoundCertificate& cert,
                              double V_check = 3.0);

}  // namespace boltzwall
