#include "stefan/exact.hpp"

#include <stdexcept>

#include <gmpxx.h>

#include "stefan/geometric_bands.hpp"

namespace stefan::exact {

namespace {

mpq_class q_of(const Ratio& r) {
  mpq_class v(mpz_class(std::to_string(r.num)), mpz_class(std::to_string(r.den)));
  v.canonicalize();
  return v;
}

GeometricBands<mpq_class> bands_of(const Params& p) {
  GeometricBands<mpq_class> b{q_of(p.alpha1), q_of(p.alpha2), q_of(p.p), q_of(p.q), mpq_class(1)};
  b.a1 = mpq_class(1) / b.beta1();
  return b;
}

std::string str(const mpq_class& v) { return v.get_str(); }

}  // namespace

Constants constants(const Params& p) {
  const auto b = bands_of(p);
  Constants c;
  c.beta1 = str(b.beta1());
  c.beta2 = str(b.beta2());
  c.a1 = str(b.a1);
  c.rho = str(b.rho());
  const mpq_class L = b.slope_bound();
  c.L = str(L);
  c.admissible = b.admissible();
  c.L_below_one = L < 1;
  if (b.alpha2 != L) c.threshold = str((b.alpha2 - 1) / (b.alpha2 - L));
  return c;
}

bool band_identities(const Params& p, std::size_t n_max) {
  const auto b = bands_of(p);
  const std::size_t walk = n_max + 2;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const mpq_class odd = b.endpoint(2 * n - 1), even = b.endpoint(2 * n);
    if (b.cdf(odd, walk) != b.beta1() * odd) return false;
    if (b.cdf(even, walk) != b.beta2() * even) return false;
  }
  return b.cdf(b.a1, walk) == 1;
}

bool psi_hits_alpha2(const Params& p, std::size_t n_max) {
  const auto b = bands_of(p);
  if (b.q > mpq_class(1, 2)) throw std::invalid_argument("psi check needs q <= 1/2");
  const mpq_class mu = b.q / (1 - b.q);
  for (std::size_t n = 1; n <= n_max; ++n) {
    const mpq_class lambda = b.endpoint(2 * n) * (1 - b.q);
    if (b.psi(lambda, mu, n_max + 2) != b.alpha2) return false;
  }
  return true;
}

bool slope_sequence_nondecreasing(const Params& p, std::size_t n_max, std::size_t y_points) {
  const auto b = bands_of(p);
  const std::size_t walk = n_max + 3;
  const mpq_class rho = b.rho();
  for (std::size_t n = 1; n <= n_max; ++n) {
    const mpq_class lo = b.endpoint(2 * n + 2), hi = rho * b.endpoint(2 * n + 1);
    for (std::size_t i = 0; i < y_points; ++i) {
      const mpq_class y = lo + (hi - lo) * mpq_class(static_cast<long>(i), static_cast<long>(y_points - 1));
      const mpq_class fy = b.cdf(y, walk);
      mpq_class prev;
      for (std::size_t k = n; k >= 1; --k) {  // k = n is the innermost a_{2k}
        const mpq_class a = b.endpoint(2 * k);
        const mpq_class v = (b.cdf(a, walk) - fy) / (a - y);
        // nondecreasing in k means each outer value is <= the inner one
        if (k < n && v > prev) return false;
        prev = v;
      }
    }
  }
  return true;
}

std::string quotient_at_rho_a3(const Params& p) {
  const auto b = bands_of(p);
  const mpq_class y = b.rho() * b.endpoint(3);
  const mpq_class z = b.endpoint(2);
  return str((b.cdf(z) - b.cdf(y)) / (z - y));
}

std::string cdf_at_endpoint(const Params& p, std::size_t k) {
  const auto b = bands_of(p);
  return str(b.cdf(b.endpoint(k), k + 2));
}

}  // namespace stefan::exact
