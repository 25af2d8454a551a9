#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>
#include <stdexcept>

namespace stefan {

inline constexpr double kPi = 3.14159265358979323846;
// E|N| for a standard normal N.
inline const double kMeanAbsNormal = std::sqrt(2.0 / kPi);

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t intervals = 0;
  bool converged = true;
};

// Adaptive Simpson quadrature with an absolute tolerance and a cap on the
// number of accepted subintervals.
QuadratureResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                                  double abs_tol = 1e-10, std::size_t max_intervals = 1'000'000);

// 20-point Gauss-Legendre rule on [a, b].
double gauss_legendre(const std::function<double(double)>& f, double a, double b);

// Bisection for the smallest root of a nondecreasing function on [lo, hi]
// (fn(lo) <= 0 <= fn(hi) assumed). Stops when hi - lo <= abs_tol.
template <class Fn>
double bisect_increasing(Fn&& fn, double lo, double hi, double abs_tol, int max_iter = 400) {
  for (int i = 0; i < max_iter && hi - lo > abs_tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (fn(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

// Golden-section search for a maximum of f on [lo, hi]; returns the argmax.
template <class Fn>
double golden_section_max(Fn&& f, double lo, double hi, double abs_tol = 1e-12,
                          int max_iter = 200) {
  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < max_iter && hi - lo > abs_tol; ++i) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    }
  }
  return f1 >= f2 ? x1 : x2;
}

// Log-spaced grid of n points from lo to hi inclusive (n >= 2, 0 < lo < hi).
std::vector<double> log_space(double lo, double hi, std::size_t n);

// Uniform grid of n points from lo to hi inclusive.
std::vector<double> lin_space(double lo, double hi, std::size_t n);

}  // namespace stefan
