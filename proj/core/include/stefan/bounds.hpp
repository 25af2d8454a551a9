#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stefan/conditions.hpp"
#include "stefan/densities.hpp"
#include "stefan/solver.hpp"

namespace stefan {

struct SlopeBound {
  double rho = 0.0;
  double L = 0.0;
  bool below_one = false;
};

// rho = (1+p)/2, L = ((1-q) a2 + q (1-rho) a1) / (1 - q rho)
SlopeBound compute_L(const PiecewiseGeometricDensity& d);

// Max of (F(y+h) - F(y))/h over y on the good set (bands [a_{2n+2}, rho a_{2n+1}],
// 1 <= n <= band_cap, plus [a_2, a_1]) and y + h on a log grid of (y, a_1].
double bruteforce_sup_ratio(const PiecewiseGeometricDensity& d, std::size_t n_y = 1000,
                            std::size_t n_h = 1000, std::size_t band_cap = 30);

// True when y lies in the good set, bands n <= band_cap.
bool in_good_set(const PiecewiseGeometricDensity& d, double y, std::size_t band_cap = 30);

struct SqrtConstants {
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
};

// Throws std::domain_error when beta2 >= 1 or beta_slope >= 1.
SqrtConstants compute_sqrt_constants(const PiecewiseGeometricDensity& d, double beta_slope);

// Observed minus required. `pass` means every node clears -3 SE.
struct Margin {
  bool evaluated = false;
  double value = 0.0;
  double se = 0.0;
  double t = 0.0;
  bool pass = true;
  std::size_t nodes = 0;
};

struct FrontierMargins {
  Margin lower;    // Lambda - c1 sqrt t
  Margin upper;    // c2 sqrt t - Lambda
  Margin holder;   // c3 sqrt h - (Lambda_{t+h} - Lambda_t)
  Margin chi_bar;  // chi_bar_t - Lambda, on nodes where chi_bar is defined
};

struct EnvelopeConstants {
  std::optional<double> c1, c2, c3;
};

FrontierMargins verify_frontier_envelopes(const FrontierPath& frontier, const EnvelopeConstants& c,
                                          const EnvelopeFunction* g = nullptr);

// alpha2 sqrt(2/pi) sqrt(t) - (Lambda_t - F(Lambda_t)) over the grid.
Margin small_time_margin(const FrontierPath& frontier, const Density& d, double alpha2);

struct BetaSlope {
  double value = 0.0;
  double se = 0.0;
  double t = 0.0, x = 0.0;
};

// max over (t, x) of E[F(Lambda_t - B_t + x) - F(Lambda_t - B_t)] / x, B_t ~ sqrt(t) N.
BetaSlope estimate_beta_slope(const FrontierPath& frontier, const Density& d,
                              const std::vector<std::size_t>& t_index, const std::vector<double>& x_grid,
                              std::size_t n_samples, std::uint64_t seed);

// Samples of U = sup_{s<=1} (B_s + c3 sqrt s), sorted ascending.
std::vector<double> sample_U(double c3, std::size_t n_samples, std::uint64_t seed, std::size_t steps = 1000);

struct WindowRow {
  double t = 0.0, a = 0.0, b = 0.0;
  double lhs = 0.0, lhs_se = 0.0;
  double rhs = 0.0, rhs_se = 0.0;
  double prob_abs_normal = 0.0;  // P(|N| >= a)
  double prob_U = 0.0;           // P(U <= b - a)
};

struct WindowTriple {
  std::size_t t_index;
  double a, b;
};

std::vector<WindowRow> estimate_window_bound(const FrontierPath& frontier, double c3,
                                         const std::vector<WindowTriple>& triples, std::size_t n_paths,
                                         std::uint64_t seed);

struct ProbGRow {
  double t = 0.0;
  double prob_G = 0.0, prob_G_se = 0.0;
  WindowRow band;  // the band chosen for this t
};

struct ProbGReport {
  std::vector<ProbGRow> rows;
  double threshold = 0.0;  // (alpha2 - 1)/(alpha2 - L)
  double min_prob_G = 0.0;
  bool above_threshold = false;
};

ProbGReport estimate_prob_in_G(const FrontierPath& frontier, const PiecewiseGeometricDensity& d, double c3,
                               const std::vector<std::size_t>& t_index, std::size_t n_paths, std::uint64_t seed);

struct Delta0Report {
  double delta0_hat = 0.0;
  double se = 0.0;
  double t = 0.0, h = 0.0;
  std::vector<double> t_grid, h_grid;
  std::vector<double> ratio;  // row-major t by h: E[F(Y_t + h) - F(Y_t)] / h
};

Delta0Report estimate_delta0(const FrontierPath& frontier, const Density& d,
                             const std::vector<std::size_t>& t_index, const std::vector<double>& h_grid,
                             std::size_t n_paths, std::uint64_t seed);

// Log-spaced grid indices in (0, K].
std::vector<std::size_t> log_time_indices(std::size_t steps, std::size_t count);

struct BoundsOptions {
  std::size_t n_paths = 100'000;
  std::uint64_t seed = 1;
  std::size_t n_t = 10;
  std::size_t n_h = 40;
  std::size_t n_x = 40;
  std::size_t band_cap = 30;
  std::size_t grid_y = 1000, grid_h = 1000;
  double lambda0 = 1e-2;  // for the averaging check behind chi_bar
};

struct BoundsReport {
  std::string family;
  bool piecewise = false;
  double beta1 = 0.0, beta2 = 0.0;
  bool admissible_4_4 = false;
  double rho = 0.0, L = 0.0;
  bool L_below_one = false;
  double sup_ratio = 0.0;
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
  BetaSlope beta_slope;
  Delta0Report delta0;
  FrontierMargins envelopes;
  Margin small_time;
  Margin window;
  Margin probG;
  ProbGReport prob_G;
  std::vector<double> chi_bar_t, chi_bar_values;

  // True when every evaluated margin passes.
  bool all_pass() const;
};

BoundsReport run_bounds(const Density& d, const FrontierPath& frontier, const BoundsOptions& opt);

}  // namespace stefan
