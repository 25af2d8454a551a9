#pragma once

// Reference computations for the tests. Deliberately naive and written
// without the library's helpers, so agreement means something.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace oracle {

// Exact fractions for small closed-form checks.
struct Frac {
  std::int64_t n = 0, d = 1;
  Frac(std::int64_t num = 0, std::int64_t den = 1) : n(num), d(den) {
    if (d < 0) n = -n, d = -d;
    const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
    if (g > 1) n /= g, d /= g;
  }
  double value() const { return static_cast<double>(n) / static_cast<double>(d); }
  friend Frac operator+(Frac a, Frac b) { return {a.n * b.d + b.n * a.d, a.d * b.d}; }
  friend Frac operator-(Frac a, Frac b) { return {a.n * b.d - b.n * a.d, a.d * b.d}; }
  friend Frac operator*(Frac a, Frac b) { return {a.n * b.n, a.d * b.d}; }
  friend Frac operator/(Frac a, Frac b) { return {a.n * b.d, a.d * b.n}; }
  friend bool operator==(Frac a, Frac b) { return a.n == b.n && a.d == b.d; }
};

// Cascade by fixed-point iteration: kill everything at or below the current
// shift, recount, repeat. Converges to the smallest consistent shift.
inline double cascade(std::vector<double> y) {
  const double n = static_cast<double>(y.size());
  std::size_t killed = 0;
  for (;;) {
    const double shift = static_cast<double>(killed) / n;
    std::size_t below = 0;
    for (double v : y) below += (v <= shift) ? 1 : 0;
    if (below == killed) return shift;
    killed = below;
  }
}

// Band density rebuilt from scratch: endpoints for a1 = 1, mass summed band
// by band, then rescaled so the total is 1.
struct Bands {
  double alpha1, alpha2, p, q, a1;
  std::vector<double> ends;  // a_1 > a_2 > ... (scaled)

  Bands(double al1, double al2, double pp, double qq) : alpha1(al1), alpha2(al2), p(pp), q(qq) {
    std::vector<double> e{1.0};
    while (e.back() > 1e-200) {
      const double even = p * e.back();
      e.push_back(even);
      e.push_back(q * even);
    }
    long double mass = 0;
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
      const double level = (i % 2 == 0) ? alpha1 : alpha2;  // [a_{i+2}, a_{i+1}]
      mass += static_cast<long double>(level) * (e[i] - e[i + 1]);
    }
    a1 = static_cast<double>(1.0L / mass);
    for (double& v : e) v *= a1;
    ends = e;
  }
  double pdf(double x) const {
    if (x <= 0 || x >= a1) return 0.0;
    for (std::size_t i = 0; i + 1 < ends.size(); ++i) {
      if (x >= ends[i + 1]) return (i % 2 == 0) ? alpha1 : alpha2;
    }
    return 0.0;
  }
  double cdf(double x) const {
    if (x <= 0) return 0.0;
    if (x >= a1) return 1.0;
    long double acc = 0;
    for (std::size_t i = ends.size() - 1; i > 0; --i) {
      const double lo = ends[i], hi = ends[i - 1];
      const double level = ((i - 1) % 2 == 0) ? alpha1 : alpha2;
      if (x >= hi) {
        acc += static_cast<long double>(level) * (hi - lo);
      } else {
        if (x > lo) acc += static_cast<long double>(level) * (x - lo);
        break;
      }
    }
    return static_cast<double>(acc);
  }
};

// int_lo^hi 1/2 (1 + sin(x^-1)) dx through u = 1/x: composite Simpson on the
// finite u range, integration by parts for the far tail.
inline double sine_mass(double lo, double hi, double du = 0.005, double u_cap = 1e5) {
  const double u_lo = 1.0 / hi;
  double u_hi = lo > 0 ? 1.0 / lo : INFINITY;
  double tail = 0.0;
  if (u_hi > u_cap) {
    // int_U^inf sin u / u^2 du = cos U / U^2 + 2 sin U / U^3 + O(U^-4)
    const double U = u_cap;
    tail = std::cos(U) / (U * U) + 2.0 * std::sin(U) / (U * U * U);
    u_hi = u_cap;
  }
  double body = 0.0;
  if (u_hi > u_lo) {
    std::size_t n = static_cast<std::size_t>(std::ceil((u_hi - u_lo) / du));
    if (n % 2) ++n;
    const double h = (u_hi - u_lo) / static_cast<double>(n);
    auto g = [](double u) { return std::sin(u) / (u * u); };
    long double s = g(u_lo) + g(u_hi);
    for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0L : 2.0L) * g(u_lo + h * static_cast<double>(i));
    body = static_cast<double>(s * h / 3.0L);
  }
  return 0.5 * (hi - lo) + 0.5 * (body + tail);
}

// Midpoint Riemann sum of f over [lo, hi].
template <class F>
double riemann(F&& f, double lo, double hi, std::size_t panels) {
  const double h = (hi - lo) / static_cast<double>(panels);
  long double s = 0;
  for (std::size_t i = 0; i < panels; ++i) s += f(lo + (static_cast<double>(i) + 0.5) * h);
  return static_cast<double>(s * h);
}

inline double mean(const std::vector<double>& v) {
  long double s = 0;
  for (double x : v) s += x;
  return static_cast<double>(s / static_cast<long double>(v.size()));
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  long double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return static_cast<double>(s / static_cast<long double>(v.size() - 1));
}

// Two-sample Kolmogorov-Smirnov statistic and its asymptotic p-value.
inline double ks_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  const double lam = (en + 0.12 + 0.11 / en) * d;
  if (lam < 0.2) return 1.0;  // series is useless here and p is ~1
  double p = 0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
  return std::clamp(p, 0.0, 1.0);
}

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kMeanAbsNormal = 0.79788456080286535588;  // sqrt(2/pi)
inline constexpr double kProbAbsNormalGe1 = 0.31731050786291410283;  // erfc(1/sqrt 2)

}  // namespace oracle
