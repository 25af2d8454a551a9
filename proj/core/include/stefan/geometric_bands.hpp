#pragma once

#include <cstddef>

namespace stefan {

// Closed-form band geometry of the oscillating piecewise-constant density,
// generic over the scalar so the same formulas run in double and in exact
// rational arithmetic.
//
// Endpoints: a_{2n-1} = r^{n-1} a1, a_{2n} = p r^{n-1} a1 with r = p q.
// Level alpha1 on [a_{2n}, a_{2n-1}), alpha2 on [a_{2n+1}, a_{2n}).
template <class Scalar>
struct GeometricBands {
  Scalar alpha1;
  Scalar alpha2;
  Scalar p;
  Scalar q;
  Scalar a1;

  Scalar r() const { return p * q; }

  Scalar beta1() const {
    return (alpha2 * p * (Scalar(1) - q) + alpha1 * (Scalar(1) - p)) / (Scalar(1) - p * q);
  }
  Scalar beta2() const {
    return (alpha2 * (Scalar(1) - q) + alpha1 * q * (Scalar(1) - p)) / (Scalar(1) - p * q);
  }

  // Admissibility alpha2 < 1 + q (1-p)/(1-q) (1-alpha1), equivalent to beta2 < 1.
  bool admissible() const {
    return alpha2 < Scalar(1) + q * (Scalar(1) - p) / (Scalar(1) - q) * (Scalar(1) - alpha1);
  }

  Scalar rho() const { return (Scalar(1) + p) / Scalar(2); }

  // Slope bound of F on the good set G.
  Scalar slope_bound() const {
    const Scalar rh = rho();
    return ((Scalar(1) - q) * alpha2 + q * (Scalar(1) - rh) * alpha1) / (Scalar(1) - q * rh);
  }

  // a_k for k >= 1.
  Scalar endpoint(std::size_t k) const {
    Scalar x = a1;
    const std::size_t n = (k + 1) / 2;  // a_{2n-1} or a_{2n}
    for (std::size_t i = 1; i < n; ++i) x *= r();
    if (k % 2 == 0) x *= p;
    return x;
  }

  // CDF by walking the bands from the top; exact for rational scalars.
  // max_bands bounds the walk (x below a_{2*max_bands+1} uses the
  // telescoped value beta1 * x on the unresolved core).
  Scalar cdf(const Scalar& x, std::size_t max_bands = 64) const {
    if (x <= Scalar(0)) return Scalar(0);
    if (x >= a1) return beta1() * a1;
    Scalar hi = a1;  // a_{2n-1}
    for (std::size_t n = 1; n <= max_bands; ++n) {
      const Scalar even = p * hi;   // a_{2n}
      const Scalar odd = q * even;  // a_{2n+1}
      if (x >= even) return beta2() * even + alpha1 * (x - even);
      if (x >= odd) return beta1() * odd + alpha2 * (x - odd);
      hi = odd;
    }
    return beta1() * x;
  }

  // Window average psi(lambda, mu) = (F(lambda (mu+1)) - F(lambda mu)) / lambda.
  Scalar psi(const Scalar& lambda, const Scalar& mu, std::size_t max_bands = 64) const {
    return (cdf(lambda * (mu + Scalar(1)), max_bands) - cdf(lambda * mu, max_bands)) / lambda;
  }
};

}  // namespace stefan
