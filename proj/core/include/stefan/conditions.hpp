#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "stefan/densities.hpp"

namespace stefan {

// psi(lambda, mu) = int_mu^{mu+1} f(lambda x) dx; at lambda = 0 this is f(0).
double psi(const Density& d, double lambda, double mu);

// psi at many mu for one lambda, through cumulative masses at sorted points.
std::vector<double> psi_row(const Density& d, double lambda, const std::vector<double>& mus);

struct SupPsi {
  double value = 0.0;
  double mu = 0.0;
};

// Max over mu in [0,1]: a grid starting at `seeds` points and doubled while
// its max still moves (at least ~4k points, at most 64k), then golden-section
// around the best local maxima.
SupPsi sup_psi(const Density& d, double lambda, std::size_t seeds = 256);

// Nondecreasing g, left-constant on a grid or wrapping a callable.
class EnvelopeFunction {
public:
  static EnvelopeFunction from_grid(std::vector<double> s, std::vector<double> g);
  static EnvelopeFunction from_function(std::function<double(double)> g, double s_max = 1e3);

  double operator()(double s) const;
  double tilde(double s) const { return s * (*this)(s); }
  double s_max() const { return s_max_; }
  const std::vector<double>& s_grid() const { return s_; }
  const std::vector<double>& g_values() const { return g_; }

private:
  EnvelopeFunction() = default;
  std::vector<double> s_, g_;
  std::function<double(double)> fn_;
  double s_max_ = 0.0;
};

// Smallest s in [0, s_max] with s g(s) >= y, to 1e-12. Throws
// std::out_of_range when y exceeds s_max g(s_max).
double g_tilde_inverse(const EnvelopeFunction& g, double y);

// g~^{-1}(E|N| sqrt t)
double chi_bar(const EnvelopeFunction& g, double t);

struct ConditionGrids {
  double lambda_min = 1e-6;
  std::size_t n_lambda = 200;
  std::size_t n_mu = 101;
  std::size_t n_s_bins = 256;
  std::size_t sup_seeds = 256;
  double pointwise_x_max = 0.25;
  std::size_t pointwise_windows = 40;
};

struct PointwiseResult {
  bool holds = false;
  double margin = 0.0;  // min over windows of 1 - sup f
  std::optional<double> witness;
  std::vector<double> window_hi;
  std::vector<double> window_margin;
};

struct MomentResult {
  bool f_le_1 = false;
  double max_pdf = 0.0;
  double first_moment = 0.0;
};

struct WorstPsi {
  double lambda, mu, psi;
};

struct ConditionReport {
  std::vector<double> lambda_grid, mu_grid;
  std::vector<double> psi_values;  // row-major, lambda by mu
  std::vector<double> sup_psi_per_lambda;
  std::vector<WorstPsi> worst_psi;
  std::vector<double> s_grid;  // left bin edges
  std::vector<double> g_envelope;
  double s_max = 0.0;

  bool holds_1_5 = false, holds_1_6 = false, holds_1_7 = false;
  double margin_1_5 = 0.0, margin_1_6 = 0.0, margin_1_7 = 0.0;
  std::optional<double> witness_1_5;
  double first_moment = 0.0;
  double lambda0 = 0.0;

  double psi_at(std::size_t i, std::size_t j) const { return psi_values[i * mu_grid.size() + j]; }
  EnvelopeFunction envelope() const { return EnvelopeFunction::from_grid(s_grid, g_envelope); }
};

ConditionReport check_averaging_condition(const Density& d, double lambda0_candidate = 1e-2,
                                          const ConditionGrids& grids = {});

// Dyadic windows (2^{-k-1} x_max, 2^{-k} x_max], k < windows.
PointwiseResult check_pointwise_condition(const Density& d, double x_max = 0.25,
                                          std::size_t windows = 40);

MomentResult check_moment_condition(const Density& d);

}  // namespace stefan
