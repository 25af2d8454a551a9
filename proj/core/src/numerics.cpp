#include "stefan/numerics.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "stefan/parallel.hpp"
#include "stefan/rng.hpp"

namespace stefan {

namespace {

struct SimpsonPanel {
  double a, b, fa, fm, fb, whole;
};

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

}  // namespace

QuadratureResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                                  double abs_tol, std::size_t max_intervals) {
  QuadratureResult out;
  if (!(b > a)) return out;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  // Explicit stack; tolerance is split in proportion to panel width.
  std::vector<SimpsonPanel> stack{{a, b, fa, fm, fb, simpson(a, b, fa, fm, fb)}};
  const double width = b - a;
  while (!stack.empty()) {
    const SimpsonPanel p = stack.back();
    stack.pop_back();
    const double m = 0.5 * (p.a + p.b);
    const double lm = 0.5 * (p.a + m);
    const double rm = 0.5 * (m + p.b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(p.a, m, p.fa, flm, p.fm);
    const double right = simpson(m, p.b, p.fm, frm, p.fb);
    const double delta = left + right - p.whole;
    const double tol = abs_tol * (p.b - p.a) / width;
    const bool too_many = out.intervals + stack.size() + 2 >= max_intervals;
    if (std::abs(delta) <= 15.0 * tol || m <= p.a || p.b <= m || too_many) {
      if (too_many && std::abs(delta) > 15.0 * tol) out.converged = false;
      out.value += left + right + delta / 15.0;
      out.error_estimate += std::abs(delta) / 15.0;
      ++out.intervals;
    } else {
      stack.push_back({m, p.b, p.fm, frm, p.fb, right});
      stack.push_back({p.a, m, p.fa, flm, p.fm, left});
    }
  }
  return out;
}

double gauss_legendre(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
}

std::vector<double> log_space(double lo, double hi, std::size_t n) {
  if (n < 2 || !(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("log_space: need n >= 2 and 0 < lo < hi");
  std::vector<double> out(n);
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo * std::exp(step * static_cast<double>(i));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> lin_space(double lo, double hi, std::size_t n) {
  if (n < 2) throw std::invalid_argument("lin_space: need n >= 2");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  out.back() = hi;
  return out;
}

double normal_quantile(double u) noexcept {
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace parallel {

namespace {
std::atomic<unsigned> g_threads{std::max(1u, std::thread::hardware_concurrency())};
}

void set_threads(unsigned n) noexcept { g_threads.store(std::max(1u, n)); }
unsigned threads() noexcept { return g_threads.load(); }

}  // namespace parallel

}  // namespace stefan
