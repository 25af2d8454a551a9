#pragma once

#include <cstddef>
#include <string>

#include "stefan/densities.hpp"

// Rational-arithmetic checks of the band geometry. Results are exact; values
// come back as reduced "num/den" strings.
namespace stefan::exact {

using Params = PiecewiseGeometricDensity::ExactParams;

struct Constants {
  std::string beta1, beta2, a1, rho, L, threshold;  // threshold = (alpha2-1)/(alpha2-L)
  bool admissible = false;
  bool L_below_one = false;
};

Constants constants(const Params& p);

// F(a_{2n-1}) = beta1 a_{2n-1} and F(a_{2n}) = beta2 a_{2n}, 1 <= n <= n_max.
bool band_identities(const Params& p, std::size_t n_max);

// psi(lambda, mu~) = alpha2 exactly with mu~ = q/(1-q), lambda = a_{2n}(1-q),
// i.e. the window [a_{2n+1}, a_{2n}]; needs q <= 1/2 so that mu~ <= 1.
bool psi_hits_alpha2(const Params& p, std::size_t n_max);

// (F(a_{2k}) - F(y))/(a_{2k} - y), k = 1..n, nondecreasing for y on
// `y_points` rationals spanning [a_{2n+2}, rho a_{2n+1}], 1 <= n <= n_max.
bool slope_sequence_nondecreasing(const Params& p, std::size_t n_max, std::size_t y_points = 9);

// Difference quotient at y = rho a_3, h = a_2 - rho a_3, reduced.
std::string quotient_at_rho_a3(const Params& p);

// F(a_k), exact.
std::string cdf_at_endpoint(const Params& p, std::size_t k);

}  // namespace stefan::exact
