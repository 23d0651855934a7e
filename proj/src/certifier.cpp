#include "boltzwall/certifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace boltzwall {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kRhoSafety = 0.9;
constexpr double kKMargin = 0.01;
constexpr double kNuMax = 1.9;
constexpr double kEpsQuad = 1e-6;
constexpr double kLogEpsFloor = 1e300;  // eps >= exp(-1e300)
constexpr int kTimeGrid = 400;
constexpr double kTimeRatio = 0.9;

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

double bracket_pow(double z, double gamma) {
  const double gp = gamma > 0.0 ? gamma : 0.0;
  return gp == 0.0 ? 1.0 : std::pow(bracket(z), gp);
}

// log int_s^{s+L} exp(-sigma K) d sigma; the window length is passed directly
// because t - t_n underflows once Delta / 2^{n+1} drops below the spacing of t.
double log_exp_integral(double s, double L, double K) {
  if (!(L > 0.0)) return kNegInf;
  if (K == 0.0) return std::log(L);
  return -s * K + std::log(-std::expm1(-L * K)) - std::log(K);
}

double window_length(double Delta, int n, double v1, double r_n, double t) {
  return std::min(t, Delta / (std::ldexp(1.0, n + 1) * (v1 + r_n)));
}

double log_upheaval_prefactor(const RecursionConstants& k, double r_n) {
  return std::log(k.C_Q) + (k.d + k.gamma) * std::log(r_n) - (0.5 * k.d - 1.0) * std::log(4.0);
}

void refuse_if_not_finite(double x, const char* what, int n) {
  if (!std::isfinite(x)) throw CertificateRefused(std::string(what) + " is not representable", n);
}

}  // namespace

// ------------------------------------------------------------------ inputs

void AprioriBounds::validate(double gamma) const {
  for (double x : {E_f, E_f_prime, Lp_f, p_gamma, W_f, M, R_f, H_f, T_wall})
    if (!finite_nonneg(x)) throw InvalidArgument("apriori bounds: entries must be finite and nonnegative");
  if (!(M > 0.0)) throw InvalidArgument("apriori bounds: total mass must be positive");
  if (!(T_wall > 0.0)) throw InvalidArgument("apriori bounds: wall temperature must be positive");
  if (gamma < 0.0 && !(p_gamma > 2.0 / (2.0 + gamma)))
    throw InvalidArgument("apriori bounds: soft potentials need p_gamma > d/(d+gamma)");
}

RecursionConstants recursion_constants(const CollisionOperators& ops, const AprioriBounds& bounds,
                                       const CalibratedConstants& cal, double cst_Q) {
  const auto& phi = ops.kernel().phi;
  bounds.validate(phi.gamma);
  if (!(cst_Q > 0.0)) throw InvalidArgument("recursion constants: cst_Q must be positive");
  Observables obs;
  obs.energy = bounds.E_f;
  obs.lp = bounds.Lp_f;
  obs.p = bounds.p_gamma;
  const BoundConstants bc = bound_constants(obs, phi, ops.n_b(), ops.m_b(), cal);
  RecursionConstants k;
  k.C_L = bc.C_L + (ops.noncutoff() ? bc.C_S : 0.0);
  k.C_Q = cst_Q * ops.l_b() * phi.c_phi;
  k.cst_L = cal.cst_L;
  k.cst_Q = cst_Q;
  k.gamma = phi.gamma;
  return k;
}

std::vector<double> lower_envelope(const InitialData& init, Vec2 x1, double radius, const VelocityGrid& grid) {
  const double dist = norm(x1 - init.x_center);
  return grid.sample([&](Vec2 v) {
    switch (init.kind) {
      case InitialData::Kind::Maxwellian:
        return maxwellian(v, init.rho, init.T, init.u);
      case InitialData::Kind::VacuumPatch:
        return dist >= radius + init.x_radius ? maxwellian(v, init.rho, init.T, init.u) : 0.0;
      case InitialData::Kind::Blob:
        return (dist + radius < init.x_radius && norm(v - init.v_center) < init.v_radius) ? init.rho : 0.0;
      case InitialData::Kind::GaussianBlob: {
        const double far = dist + radius;
        return init.rho * std::exp(-far * far / (2.0 * init.x_radius * init.x_radius)) *
               maxwellian(v, 1.0, init.T, init.u);
      }
    }
    return 0.0;
  });
}

// ------------------------------------------------------------------ upheaval ladder

double UpheavalSeed::a0() const { return std::exp(log_a0); }

double upheaval_window_start(double Delta, int n, double v1, double r_n, double t) {
  return std::max(0.0, t - Delta / (std::ldexp(1.0, n + 1) * (v1 + r_n)));
}

double upheaval_step(const RecursionConstants& k, double r_n, double v1, double Delta, int n, double alpha_n,
                     double t) {
  const double K = k.C_L * bracket_pow(2.0 * r_n + v1, k.gamma);
  const double s = upheaval_window_start(Delta, n, v1, r_n, t);
  const double L = window_length(Delta, n, v1, r_n, t);
  return std::exp(log_upheaval_prefactor(k, r_n) + 2.0 * std::log(alpha_n) + log_exp_integral(s, L, K));
}

UpheavalSeed constructive_seed(const CollisionOperators& ops, std::span<const double> phi,
                               const RecursionConstants& k, const ConvexDomain& domain, Vec2 x1, double tau0,
                               int levels) {
  if (!domain.contains(x1)) throw InvalidArgument("constructive seed: x1 must lie inside the domain");
  if (!(k.C_Q > 0.0) || !(k.C_L >= 0.0)) throw InvalidArgument("constructive seed: invalid recursion constants");
  UpheavalSeed s;
  s.box = iterated_seed(ops, phi);
  s.k = k;
  s.x1 = x1;
  s.v1 = s.box.vbar;
  s.d1 = domain.distance_to_boundary(x1);
  s.Delta = std::min(1.0, s.d1 / (3.0 * s.box.R0));
  s.tau0 = tau0 > 0.0 ? tau0 : s.Delta;
  if (s.tau0 > s.Delta) throw InvalidArgument("constructive seed: tau0 must not exceed Delta");
  s.log_a0 = std::log(0.5) + 3.0 * std::log(s.tau0) - 3.0 * k.C_L * bracket_pow(s.box.R0, k.gamma) +
             std::log(s.box.eta0);

  const double v1 = norm(s.v1);
  const double growth = 3.0 * std::sqrt(2.0) / 4.0;
  const double target = 2.0 * domain.diameter() / s.tau0 + v1;
  s.r.push_back(std::min(s.Delta, s.box.r0));
  while (s.r.back() < target || static_cast<int>(s.r.size()) <= levels) s.r.push_back(growth * s.r.back());

  s.times.push_back(0.0);
  for (int i = 0; i < kTimeGrid; ++i) s.times.push_back(s.Delta * std::pow(kTimeRatio, i));
  s.times.push_back(0.5 * s.tau0);
  std::sort(s.times.begin(), s.times.end());
  s.times.erase(std::unique(s.times.begin(), s.times.end()), s.times.end());

  const std::size_t G = s.times.size();
  s.log_alpha.assign(1, std::vector<double>(G, s.log_a0));
  for (std::size_t n = 0; n + 1 < s.r.size(); ++n) {
    const auto& prev = s.log_alpha[n];
    const double rn = s.r[n];
    const double K = k.C_L * bracket_pow(2.0 * rn + v1, k.gamma);
    const double pref = log_upheaval_prefactor(k, rn);
    std::vector<double> next(G, kNegInf);
    double running = kNegInf;
    for (std::size_t j = 0; j < G; ++j) {
      const double t = s.times[j];
      const double tn = upheaval_window_start(s.Delta, static_cast<int>(n), v1, rn, t);
      const std::size_t i0 = static_cast<std::size_t>(std::upper_bound(s.times.begin(), s.times.end(), tn) -
                                                      s.times.begin()) - 1;
      const double L = window_length(s.Delta, static_cast<int>(n), v1, rn, t);
      double best = 2.0 * prev[i0] + log_exp_integral(tn, L, K);
      for (std::size_t i = i0 + 1; i < j; ++i)
        best = std::max(best, 2.0 * prev[i] + log_exp_integral(s.times[i], t - s.times[i], K));
      running = std::max(running, pref + best);
      next[j] = running;
    }
    s.log_alpha.push_back(std::move(next));
  }
  return s;
}

double upheaval_log_alpha(const UpheavalSeed& seed, int n, double t) {
  if (n < 0 || n > seed.levels()) throw InvalidArgument("upheaval_alpha: level outside the ladder");
  if (t < 0.0) throw InvalidArgument("upheaval_alpha: negative time");
  const auto it = std::upper_bound(seed.times.begin(), seed.times.end(), t);
  return seed.log_alpha[n][static_cast<std::size_t>(it - seed.times.begin()) - 1];
}

double upheaval_alpha(const UpheavalSeed& seed, int n, double t) { return std::exp(upheaval_log_alpha(seed, n, t)); }

// ------------------------------------------------------------------ diffusion

double DiffusionBound::b_wall() const { return std::exp(log_b_wall); }

double assemble_log_b_wall(double log_A, double B, double delta_pp, double Delta) {
  return std::log(2.0) + log_A + std::log(B) + std::log(kPi * delta_pp * delta_pp) - std::log(Delta);
}

DiffusionBound diffusion_bound(const UpheavalSeed& seed, const ConvexDomain& domain) {
  DiffusionBound db;
  const double v1 = norm(seed.v1);
  db.R_min = 2.0 * domain.diameter() / seed.tau0;
  db.level = -1;
  for (std::size_t n = 0; n < seed.r.size(); ++n)
    if (seed.r[n] >= db.R_min + v1) {
      db.level = static_cast<int>(n);
      break;
    }
  if (db.level < 0 || db.level > seed.levels()) throw InvalidArgument("diffusion bound: upheaval ladder too short");
  db.Delta = seed.Delta;
  db.log_A = std::log(0.5) + upheaval_log_alpha(seed, db.level, 0.5 * seed.tau0) -
             0.5 * seed.Delta * seed.k.C_L * bracket_pow(db.R_min, seed.k.gamma);
  db.B = domain.geometric_constants(seed.x1).bconst;
  db.delta_prime = db.B;
  db.delta = std::min(seed.r.front(), 2.0 * seed.d1 / seed.tau0);
  db.delta_pp = std::min(db.delta, 2.0 * db.delta_prime / seed.Delta);
  db.log_b_wall = assemble_log_b_wall(db.log_A, db.B, db.delta_pp, db.Delta);
  return db;
}

// ------------------------------------------------------------------ spreading sequences

double xi_at(const SequenceInputs& in, int n) {
  return in.schedule == XiSchedule::Geometric ? std::pow(in.xi, n) : in.xi;
}

double log_b_term(const SequenceInputs& in, double r_tilde, double C_L) {
  const int d = in.k.d;
  const double T = in.T_wall;
  const double log_norm = 0.5 * (d - 1) * std::log(2.0 * kPi) + 0.5 * (d + 1) * std::log(T);
  return in.log_b_wall - C_L * in.tau * bracket_pow(r_tilde, in.k.gamma) - r_tilde * r_tilde / (2.0 * T) - log_norm;
}

SequenceTerm spread_step(const SequenceInputs& in, int n, const SequenceTerm& prev, double C_L,
                         double log_a_factor) {
  const int d = in.k.d;
  const double xi = xi_at(in, n + 1);
  SequenceTerm t;
  t.r = std::sqrt(2.0) * (1.0 - xi) * prev.r;
  t.r_tilde = in.R_min + t.r;
  t.log_b = log_b_term(in, t.r_tilde, C_L);
  const double log_c = std::min(prev.log_a, prev.log_b);
  const double window = std::ldexp(in.tau, -(n + 2));
  t.log_a = 2.0 * log_c + std::log(in.k.C_Q) + (d + in.k.gamma) * std::log(prev.r) + (0.5 * d - 1.0) * std::log(xi) +
            std::log(window) - std::log(t.r_tilde) -
            C_L * window * bracket_pow(t.r_tilde, in.k.gamma) / t.r_tilde + log_a_factor;
  return t;
}

namespace {

void check_sequence_inputs(const SequenceInputs& in) {
  if (!(in.delta_V > 0.0) || !(in.tau > 0.0) || !(in.R_min >= 0.0) || !(in.T_wall > 0.0) || !(in.k.C_Q > 0.0) ||
      !(in.k.C_L >= 0.0))
    throw InvalidArgument("spread sequences: inputs must be positive");
  if (!(in.xi > 0.0 && in.xi < 1.0)) throw InvalidArgument("spread sequences: xi must lie in (0, 1)");
  if (in.N < 1) throw InvalidArgument("spread sequences: N must be at least 1");
  if (!std::isfinite(in.log_a0) || !std::isfinite(in.log_b_wall))
    throw InvalidArgument("spread sequences: a0 and b_wall must be positive");
}

void push(SpreadSequences& s, const SequenceTerm& t) {
  s.r.push_back(t.r);
  s.r_tilde.push_back(t.r_tilde);
  s.log_a.push_back(t.log_a);
  s.log_b.push_back(t.log_b);
}

SequenceTerm term(const SpreadSequences& s, int n) { return {s.r[n], s.r_tilde[n], s.log_a[n], s.log_b[n]}; }

}  // namespace

SpreadSequences spread_sequences(const SequenceInputs& in) {
  check_sequence_inputs(in);
  SpreadSequences s;
  s.in = in;
  push(s, {in.delta_V, in.R_min + in.delta_V, in.log_a0, in.log_b_wall});
  for (int n = 0; n < in.N; ++n) {
    const SequenceTerm t = spread_step(in, n, term(s, n), in.k.C_L);
    if (!std::isfinite(t.log_a) || !std::isfinite(t.log_b) || !(t.r > 0.0))
      throw NumericalAbort("spread sequences: term " + std::to_string(n + 1) + " is not finite");
    push(s, t);
  }
  return s;
}

double floor_constant(double r0, double xi) {
  double p = r0;
  double x = xi;
  for (int k = 1; k < 4096; ++k) {
    const double f = 1.0 - x;
    if (f == 1.0) break;
    p *= f;
    x *= xi;
  }
  return p;
}

// ------------------------------------------------------------------ growth ledger

GrowthLedger growth_ledger(const SpreadSequences& seq) {
  const auto& in = seq.in;
  const int N = static_cast<int>(seq.log_a.size()) - 1;
  if (N < 1) throw InvalidArgument("growth ledger: empty sequences");
  GrowthLedger g;
  g.log_alpha1 = std::numeric_limits<double>::infinity();
  for (int n = 0; n <= N; ++n) g.log_alpha1 = std::min(g.log_alpha1, std::ldexp(seq.log_b[n], -n));

  const int d = in.k.d;
  g.q = std::pow(2.0, 0.5 * (d + in.k.gamma)) * std::pow(in.xi, 0.5 * d - 1.0) / std::pow(2.0, 1.5);
  const double log_q = std::log(g.q);
  // a_{n+1} = F_n min(a_n, b_n)^2; F_n is evaluated on its own rather than as a
  // difference of logs, which loses all digits once log a_n is large.
  g.log_C3 = std::numeric_limits<double>::infinity();
  for (int n = 0; n < N; ++n) {
    const double log_F = spread_step(in, n, {seq.r[n], seq.r_tilde[n], 0.0, 0.0}, in.k.C_L).log_a;
    g.log_C3 = std::min(g.log_C3, log_F - n * log_q);
  }
  const double log_lambda = std::min(0.0, g.log_C3) + log_q;
  g.lambda = std::exp(log_lambda);
  g.log_alpha2 = g.lambda >= 1.0 ? g.log_alpha1 : g.log_alpha1 + log_lambda;

  for (int n = 1; n <= N; ++n) {
    int kn = -1;
    for (int k = 0; k <= n - 1; ++k)
      if (seq.log_a[n - k] >= seq.log_b[n - k]) {
        kn = k;
        break;
      }
    g.k_n.push_back(kn);
  }
  g.c_r = in.schedule == XiSchedule::Geometric ? floor_constant(in.delta_V, in.xi) : 0.0;

  for (int n = 0; n <= N; ++n) {
    if (seq.log_b[n] < std::ldexp(g.log_alpha1, n))
      throw CertificateRefused("growth ledger: b_n below alpha1^(2^n)", n);
    if (seq.log_a[n] < std::ldexp(g.log_alpha2, n))
      throw CertificateRefused("growth ledger: a_n below alpha2^(2^n)", n);
  }
  return g;
}

// ------------------------------------------------------------------ certificates

double LowerBoundCertificate::rho() const { return std::exp(log_rho); }
double LowerBoundCertificate::C1() const { return std::exp(log_C1); }

double LowerBoundCertificate::log_envelope(double speed) const {
  if (kind == Kind::Maxwellian) return log_rho - std::log(2.0 * kPi * theta) - speed * speed / (2.0 * theta);
  return log_C1 - C2 * std::pow(speed, K);
}

double LowerBoundCertificate::envelope(double speed) const { return std::exp(log_envelope(speed)); }

double maxwellian_theta(double log_alpha, double c_r) { return c_r * c_r / (2.0 * -log_alpha); }

int sweep_failure(const LowerBoundCertificate& cert, std::span<const double> log_c) {
  for (std::size_t n = 0; n < log_c.size(); ++n) {
    const double inner = n == 0 ? 0.0 : cert.c_r * std::pow(2.0, 0.5 * (static_cast<double>(n) - 1.0));
    if (!(cert.log_envelope(inner) <= log_c[n])) return static_cast<int>(n);
  }
  return -1;
}

namespace {

std::vector<double> floors(const SpreadSequences& seq) {
  std::vector<double> c(seq.log_a.size());
  for (std::size_t n = 0; n < c.size(); ++n) c[n] = std::min(seq.log_a[n], seq.log_b[n]);
  return c;
}

void common_provenance(LowerBoundCertificate& c, const SequenceInputs& in) {
  c.provenance.push_back({"cst_Q", in.k.cst_Q, "calibrated"});
  c.provenance.push_back({"cst_L", in.k.cst_L, "calibrated"});
  c.provenance.push_back({"C_Q", in.k.C_Q, "formula"});
  c.provenance.push_back({"C_L", in.k.C_L, "formula"});
  c.provenance.push_back({"log_a0", in.log_a0, "derived"});
  c.provenance.push_back({"log_b_wall", in.log_b_wall, "derived"});
  c.provenance.push_back({"R_min", in.R_min, "formula"});
  c.provenance.push_back({"delta_V", in.delta_V, "input"});
  c.provenance.push_back({"xi", in.xi, "input"});
  c.provenance.push_back({"c_r", c.c_r, "formula"});
}

}  // namespace

LowerBoundCertificate maxwellian_certificate(const GrowthLedger& ledger, const SpreadSequences& seq, double tau) {
  if (seq.in.schedule != XiSchedule::Geometric)
    throw InvalidArgument("maxwellian certificate: needs a geometric xi schedule");
  const double log_alpha = ledger.log_alpha();
  if (!(log_alpha < 0.0) || !std::isfinite(log_alpha))
    throw CertificateRefused("maxwellian certificate: alpha must lie in (0, 1)", -1);
  LowerBoundCertificate c;
  c.kind = LowerBoundCertificate::Kind::Maxwellian;
  c.tau = tau;
  c.c_r = ledger.c_r;
  c.theta = maxwellian_theta(2.0 * log_alpha, c.c_r);
  c.log_rho = std::log(2.0 * kPi * c.theta) + 2.0 * log_alpha + std::log(kRhoSafety);
  c.log_alpha1 = ledger.log_alpha1;
  c.log_alpha2 = ledger.log_alpha2;
  c.lambda = ledger.lambda;
  c.cst_Q = seq.in.k.cst_Q;
  c.cst_L = seq.in.k.cst_L;
  c.log_b_wall = seq.in.log_b_wall;
  c.xi = seq.in.xi;
  c.N = seq.in.N;
  c.v_window = c.c_r * std::pow(2.0, 0.5 * c.N);
  common_provenance(c, seq.in);
  c.provenance.push_back({"log_alpha1", c.log_alpha1, "derived"});
  c.provenance.push_back({"log_C3", ledger.log_C3, "derived"});
  c.provenance.push_back({"lambda", c.lambda, "formula"});
  c.provenance.push_back({"log_alpha2", c.log_alpha2, "formula"});
  c.provenance.push_back({"theta", c.theta, "formula"});
  c.provenance.push_back({"rho_safety", kRhoSafety, "safety"});
  c.provenance.push_back({"log_rho", c.log_rho, "formula"});
  const auto log_c = floors(seq);
  const int bad = sweep_failure(c, log_c);
  if (bad >= 0) throw CertificateRefused("maxwellian certificate: envelope exceeds the floor", bad);
  return c;
}

double exponent_K_floor(double nu) { return 2.0 * std::log(2.0 + 2.0 * nu / (2.0 - nu)) / std::log(2.0); }

double exponent_K(double nu) {
  if (nu == 0.0) return 2.0;
  return (1.0 + kKMargin) * exponent_K_floor(nu);
}

double log_m_nco(const AngularKernel& b, double log_eps) {
  const double eps = std::exp(log_eps);
  if (eps >= kEpsQuad) return std::log(compute_m_b(split_at(b, eps).second));
  const double nu = b.nu();
  return std::log(b.b0()) + (2.0 - nu) * log_eps - std::log(2.0 - nu);
}

double log_n_co(const AngularKernel& b, double log_eps) {
  const double eps = std::exp(log_eps);
  if (eps >= kEpsQuad) return std::log(compute_n_b(split_at(b, eps).first));
  const double nu = b.nu();
  const double n_q = compute_n_b(split_at(b, kEpsQuad).first);
  if (nu == 0.0) return std::log(n_q + 2.0 * b.b0() * (std::log(kEpsQuad) - log_eps));
  // n(eps) = n(eps_q) + (2 b0 / nu) (eps^{-nu} - eps_q^{-nu})
  const double log_x = std::log(2.0 * b.b0() / nu) - nu * log_eps;
  const double rest = n_q - 2.0 * b.b0() / nu * std::pow(kEpsQuad, -nu);
  return log_x + std::log1p(rest * std::exp(-log_x));
}

LowerBoundCertificate noncutoff_certificate(const NoncutoffInputs& in, NoncutoffTrace* trace) {
  if (!(in.nu >= 0.0)) throw InvalidArgument("noncutoff certificate: nu must be nonnegative");
  if (in.nu > kNuMax) throw CertificateRefused("noncutoff certificate: nu above 1.9", -1);
  if (in.b.family() != AngularKernel::Family::Singular || in.b.side() != AngularKernel::Side::Full)
    throw InvalidArgument("noncutoff certificate: needs an untruncated singular kernel");
  const SequenceInputs& sq = in.seq;
  check_sequence_inputs(sq);
  if (sq.schedule != XiSchedule::Geometric) throw InvalidArgument("noncutoff certificate: needs a geometric xi schedule");
  const int d = sq.k.d;
  const double gamma = sq.k.gamma;
  const double gt = std::max(0.0, 2.0 + gamma);
  const double log_Cf = std::log(in.cst_Q1 * in.C_phi * in.E_f_prime * in.W_f);
  const double moment = in.C_phi * in.E_f;

  SpreadSequences s;
  s.in = sq;
  push(s, {sq.delta_V, sq.R_min + sq.delta_V, sq.log_a0, sq.log_b_wall});
  NoncutoffTrace tr;
  const double y_max = std::log(kLogEpsFloor);
  const double hi0 = std::log(0.25 * kPi) - 1e-12;
  for (int n = 0; n < sq.N; ++n) {
    const SequenceTerm prev = term(s, n);
    const double xi = xi_at(sq, n + 1);
    const double r_next = std::sqrt(2.0) * (1.0 - xi) * prev.r;
    const double rt_next = sq.R_min + r_next;
    const double log_c = std::min(prev.log_a, prev.log_b);
    const double target = std::log(0.5) + 2.0 * log_c + std::log(sq.k.C_Q) + (d + gamma) * std::log(prev.r) +
                          (0.5 * d - 1.0) * std::log(xi);
    const double reach = gt * std::log(bracket(rt_next));
    auto lhs = [&](double le) { return log_Cf + log_m_nco(in.b, le) + reach; };
    // bisection in y = log(-log eps), so the whole log-eps interval is resolved
    double le;
    if (lhs(hi0) <= target) {
      le = hi0;
    } else {
      if (!(lhs(-std::exp(y_max)) <= target)) throw CertificateRefused("noncutoff certificate: eps interval exhausted", n);
      double lo = std::log(-hi0), hi = y_max;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (lhs(-std::exp(mid)) <= target ? hi : lo) = mid;
      }
      le = -std::exp(hi);
    }
    const double log_n = log_n_co(in.b, le);
    const double log_m = log_m_nco(in.b, le);
    // cst_L n^{CO} + cst_S m^{NCO}, times C_phi E_f
    const double la = std::log(in.cst_L) + log_n, lm = std::log(in.cst_S) + log_m;
    const double top = std::max(la, lm);
    const double log_CL = std::log(moment) + top + std::log1p(std::exp(std::min(la, lm) - top));
    const double C_L = std::exp(log_CL);
    refuse_if_not_finite(C_L, "noncutoff certificate: loss constant", n);
    const SequenceTerm t = spread_step(sq, n, prev, C_L, std::log(0.5));
    refuse_if_not_finite(t.log_a, "noncutoff certificate: a-sequence", n + 1);
    refuse_if_not_finite(t.log_b, "noncutoff certificate: b-sequence", n + 1);
    push(s, t);
    tr.log_eps.push_back(le);
    tr.log_C_L.push_back(log_CL);
  }

  LowerBoundCertificate c;
  c.kind = LowerBoundCertificate::Kind::Exponential;
  c.tau = in.tau;
  c.K = exponent_K(in.nu);
  c.c_r = floor_constant(sq.delta_V, sq.xi);
  const auto log_c = floors(s);
  c.log_C1 = std::log(kRhoSafety) + log_c[0];
  double C2 = 0.0;
  for (std::size_t n = 1; n < log_c.size(); ++n) {
    const double inner = c.c_r * std::pow(2.0, 0.5 * (static_cast<double>(n) - 1.0));
    C2 = std::max(C2, (c.log_C1 - log_c[n]) / std::pow(inner, c.K));
  }
  c.C2 = std::max(C2 * (1.0 + 1e-12), std::numeric_limits<double>::min());
  refuse_if_not_finite(c.C2, "noncutoff certificate: C2", -1);
  c.log_alpha1 = std::numeric_limits<double>::quiet_NaN();
  c.log_alpha2 = std::numeric_limits<double>::quiet_NaN();
  c.lambda = std::numeric_limits<double>::quiet_NaN();
  c.cst_Q = sq.k.cst_Q;
  c.cst_L = in.cst_L;
  c.log_b_wall = sq.log_b_wall;
  c.xi = sq.xi;
  c.N = sq.N;
  c.v_window = c.c_r * std::pow(2.0, 0.5 * c.N);
  common_provenance(c, sq);
  c.provenance.push_back({"nu", in.nu, "input"});
  c.provenance.push_back({"K_floor", exponent_K_floor(in.nu), "formula"});
  c.provenance.push_back({"K_margin", in.nu == 0.0 ? 0.0 : kKMargin, "safety"});
  c.provenance.push_back({"C1_safety", kRhoSafety, "safety"});
  for (std::size_t n = 0; n < tr.log_eps.size(); ++n)
    c.provenance.push_back({"log_eps_" + std::to_string(n + 1), tr.log_eps[n], "derived"});
  const int bad = sweep_failure(c, log_c);
  if (bad >= 0) throw CertificateRefused("noncutoff certificate: envelope exceeds the floor", bad);
  if (trace) {
    tr.seq = std::move(s);
    *trace = std::move(tr);
  }
  return c;
}

// ------------------------------------------------------------------ check

CheckReport check_certificate(std::span<const FieldSample> samples, const LowerBoundCertificate& cert, double h_v,
                              double V_check) {
  if (!(h_v > 0.0) || !(V_check >= 0.0)) throw InvalidArgument("check: need h_v > 0 and V_check >= 0");
  const int shells = static_cast<int>(std::floor(V_check / h_v + 1e-9)) + 1;
  std::vector<double> worst(shells, std::numeric_limits<double>::infinity());
  std::vector<bool> seen(shells, false);
  for (const auto& s : samples) {
    if (s.speed > V_check + 1e-12) continue;
    const int k = std::min(shells - 1, static_cast<int>(std::floor(s.speed / h_v + 1e-9)));
    const double lr = s.f > 0.0 ? std::log(s.f) - cert.log_envelope(s.speed) : kNegInf;
    worst[k] = std::min(worst[k], lr);
    seen[k] = true;
  }
  CheckReport rep;
  const bool empty = std::none_of(seen.begin(), seen.end(), [](bool b) { return b; });
  rep.pass = !empty;
  for (int k = 0; k < shells; ++k) {
    if (!seen[k] && !empty) continue;
    ShellMargin m;
    m.shell_speed = k * h_v;
    m.log_min_ratio = seen[k] ? worst[k] : kNegInf;
    m.min_ratio = std::exp(m.log_min_ratio);
    m.pass = m.log_min_ratio >= 0.0;
    rep.pass = rep.pass && m.pass;
    rep.shells.push_back(m);
  }
  return rep;
}

CheckReport check_certificate(const DistributionField& field, const LowerBoundCertificate& cert, double V_check) {
  if (field.time < cert.tau - 1e-9) throw InvalidArgument("check: field time precedes the certificate time");
  const VelocityGrid& g = field.velocity();
  std::vector<FieldSample> samples;
  for (std::size_t c = 0; c < field.cells(); ++c)
    for (std::size_t k = 0; k < field.nodes(); ++k) {
      const double s = norm(g.velocity(k));
      if (s <= V_check + 1e-12) samples.push_back({s, field(c, k)});
    }
  return check_certificate(samples, cert, g.h(), V_check);
}

}  // namespace boltzwall
