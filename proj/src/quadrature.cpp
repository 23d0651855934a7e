#include "boltzwall/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include "boltzwall/common.hpp"

namespace boltzwall {

double unit_ball_volume(int d) {
  return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

double sphere_measure(int k) {
  // |S^k| = 2 pi^{(k+1)/2} / Gamma((k+1)/2)
  return 2.0 * std::pow(kPi, 0.5 * (k + 1)) / std::tgamma(0.5 * (k + 1));
}

}  // namespace boltzwall

namespace boltzwall::quad {

Rule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw InvalidArgument("gauss_legendre: n must be >= 1");
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = mid - half * x;
    r.nodes[n - 1 - i] = mid + half * x;
    r.weights[i] = half * w;
    r.weights[n - 1 - i] = half * w;
  }
  return r;
}

namespace {

constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082,
                           0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975,
                           0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double rk = fc * kWgk[7];
  double rg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double s = f(c - dx) + f(c + dx);
    rk += kWgk[j] * s;
    if (j % 2 == 1) rg += kWg[j / 2] * s;
  }
  const double value = rk * h;
  const double err = std::abs((rk - rg) * h);
  return {a, b, value, err};
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol, double abs_tol) {
  if (a == b) return 0.0;
  std::priority_queue<Segment> heap;
  Segment s0 = gk15(f, a, b);
  heap.push(s0);
  double total = s0.value;
  double err = s0.error;
  constexpr int kMaxSegments = 4000;
  int count = 1;
  while (err > std::max(abs_tol, rel_tol * std::abs(total)) && count < kMaxSegments) {
    const Segment top = heap.top();
    heap.pop();
    const double m = 0.5 * (top.a + top.b);
    if (m <= top.a || m >= top.b) {
      // interval no longer divisible; accept as is
      heap.push({top.a, top.b, top.value, 0.0});
      err -= top.error;
      if (heap.top().error == 0.0) break;
      continue;
    }
    const Segment l = gk15(f, top.a, m);
    const Segment r = gk15(f, m, top.b);
    total += l.value + r.value - top.value;
    err += l.error + r.error - top.error;
    heap.push(l);
    heap.push(r);
    ++count;
  }
  // resum in a deterministic order for a stable result
  std::vector<Segment> segs;
  segs.reserve(heap.size());
  while (!heap.empty()) {
    segs.push_back(heap.top());
    heap.pop();
  }
  std::sort(segs.begin(), segs.end(), [](const Segment& x, const Segment& y) { return x.a < y.a; });
  double sum = 0.0;
  for (const auto& s : segs) sum += s.value;
  return sum;
}

double integrate_left_singular(const std::function<double(double)>& f, double b,
                               double rel_tol) {
  if (b <= 0.0) throw InvalidArgument("integrate_left_singular: b must be positive");
  double sum = 0.0;
  double prev = 0.0, last = 0.0;
  double hi = b;
  constexpr int kMinPanels = 8;
  constexpr int kMaxPanels = 1000;
  int k = 0;
  for (; k < kMaxPanels; ++k) {
    const double lo = 0.5 * hi;
    const double v = integrate(f, lo, hi, rel_tol * 0.1);
    sum += v;
    prev = last;
    last = v;
    hi = lo;
    if (k >= kMinPanels && prev != 0.0) {
      const double q = last / prev;
      if (q > 0.0 && q < 1.0) {
        const double tail = last * q / (1.0 - q);
        if (std::abs(tail) <= rel_tol * std::abs(sum)) {
          return sum + tail;
        }
      }
    }
    if (last == 0.0 && k >= kMinPanels) return sum;
  }
  const double q = (prev != 0.0) ? last / prev : 0.0;
  if (q > 0.0 && q < 1.0) sum += last * q / (1.0 - q);
  return sum;
}

double integrate_graded(const std::function<double(double)>& f, double a, double b,
                        double rel_tol) {
  if (!(a > 0.0) || !(b > a)) throw InvalidArgument("integrate_graded: need 0 < a < b");
  double sum = 0.0;
  double lo = a;
  while (lo < b) {
    const double hi = std::min(b, 2.0 * lo);
    sum += integrate(f, lo, hi, rel_tol * 0.1);
    lo = hi;
  }
  return sum;
}

double golden_min(const std::function<double(double)>& f, double a, double b, double tol) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (std::abs(b - a) > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fit_slope: need >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace boltzwall::quad
