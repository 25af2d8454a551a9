#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace stefan {

// Exact rational number used to carry user-supplied parameters (e.g. "21/20")
// into exact-arithmetic checks.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;

  [[nodiscard]] double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  [[nodiscard]] std::string str() const;
  // Parses "a/b", an integer, or a finite decimal literal such as "1.05".
  static Ratio parse(std::string_view text);
};

// Piecewise-constant geometric bands

// Density alternating between alpha1 and alpha2 on geometrically shrinking
// bands accumulating at 0. The outermost endpoint is a1 = 1/beta1 so the
// density has unit mass on (0, a1].
class PiecewiseGeometricDensity {
public:
  struct ExactParams {
    Ratio alpha1, alpha2, p, q;
  };

  // Throws std::invalid_argument unless 0 < alpha1 < 1 < alpha2 and p, q in (0,1).
  static PiecewiseGeometricDensity make(double alpha1, double alpha2, double p, double q);
  static PiecewiseGeometricDensity make(const ExactParams& exact);

  double alpha1() const { return alpha1_; }
  double alpha2() const { return alpha2_; }
  double p() const { return p_; }
  double q() const { return q_; }
  double r() const { return p_ * q_; }
  double a1() const { return a1_; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  // beta2 < 1; the bounds module needs it, the simulators do not.
  bool admissible() const { return admissible_; }
  const std::optional<ExactParams>& exact_params() const { return exact_; }

  // a_k, k >= 1.
  double endpoint(std::size_t k) const;
  // Number of resolved alpha2 bands; below the innermost resolved endpoint
  // the density is the sliver level beta1.
  std::size_t resolved_bands() const { return bands_; }

  double pdf(double x) const;
  double cdf(double x) const;
  double mass(double lo, double hi) const { return cdf(hi) - cdf(lo); }
  double quantile(double u) const;
  double max_pdf(double lo, double hi) const;
  double first_moment() const;
  double support_end() const { return a1_; }

private:
  PiecewiseGeometricDensity() = default;
  std::size_t segment_of(double x) const;

  double alpha1_ = 0, alpha2_ = 0, p_ = 0, q_ = 0;
  double a1_ = 0, beta1_ = 0, beta2_ = 0;
  bool admissible_ = false;
  std::size_t bands_ = 0;
  std::optional<ExactParams> exact_;
  // Ascending nodes starting at 0; levels_[i] applies on [nodes_[i], nodes_[i+1]).
  std::vector<double> nodes_;
  std::vector<double> levels_;
  std::vector<double> cdf_nodes_;
};

// Piecewise-linear (tabulated) densities

// Linear interpolation between (x_i, f_i), zero outside [x_0, x_n]. Integrals
// are exact. Values are rescaled to unit mass on construction.
class TabulatedDensity {
public:
  // Throws std::invalid_argument for fewer than two nodes, non-increasing
  // abscissae, negative abscissae or values, or zero total mass.
  static TabulatedDensity make(std::vector<double> x, std::vector<double> f);

  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& f() const { return f_; }
  // Mass of the input table before rescaling.
  double input_mass() const { return input_mass_; }

  double pdf(double x) const;
  double cdf(double x) const;
  double mass(double lo, double hi) const { return cdf(hi) - cdf(lo); }
  double quantile(double u) const;
  double max_pdf(double lo, double hi) const;
  double first_moment() const;
  double support_end() const { return x_.back(); }

private:
  friend class GaussianPathDensity;
  TabulatedDensity() = default;
  static TabulatedDensity unnormalized(std::vector<double> x, std::vector<double> f);
  void scale(double factor);

  std::vector<double> x_, f_, cdf_;
  double input_mass_ = 1.0;
};

// Periodic profiles and the oscillating density 1/2 (1 + Psi(x^-alpha))

// Periodic function Psi: [0, inf) -> [-1, 1], either the built-in sine or a
// table of equally spaced samples over one period (linear interpolation).
class PeriodicProfile {
public:
  static PeriodicProfile sine();
  // samples[i] = Psi(i * period / samples.size()); the period endpoint is implied.
  static PeriodicProfile tabulated(std::vector<double> samples, double period);
  static PeriodicProfile constant(double value);

  bool is_sine() const { return sine_; }
  double period() const { return period_; }
  const std::vector<double>& samples() const { return samples_; }
  double mean() const { return mean_; }
  double max() const { return max_; }
  bool is_constant() const { return constant_; }

  double operator()(double u) const;
  // Zero-mean iterated antiderivatives of Psi - mean: G_0' = Psi - mean,
  // G_j' = G_{j-1}, each shifted to zero mean over a period.
  double antiderivative(std::size_t level, double u) const;
  double antiderivative_bound(std::size_t level) const { return bounds_.at(level); }
  // Spacing of interpolation knots (period for the sine).
  double knot_spacing() const { return sine_ ? period_ / 4.0 : period_ / static_cast<double>(samples_.size()); }

  static constexpr std::size_t kLevels = 8;

private:
  PeriodicProfile() = default;
  void build_tables();

  bool sine_ = false;
  bool constant_ = false;
  double period_ = 0.0;
  double mean_ = 0.0;
  double max_ = 0.0;
  std::vector<double> samples_;
  std::vector<std::vector<double>> levels_;  // tabulated antiderivatives
  std::vector<double> bounds_;
};

class PeriodicOscillatoryDensity {
public:
  // Normalizes on construction; throws std::runtime_error if no support
  // endpoint is found below the bracket cap.
  static PeriodicOscillatoryDensity make(double alpha, PeriodicProfile profile);

  double alpha() const { return alpha_; }
  const PeriodicProfile& profile() const { return profile_; }
  double a() const { return a_; }

  double pdf(double x) const;
  double cdf(double x) const { return mass(0.0, x); }
  double mass(double lo, double hi) const;
  double quantile(double u) const;
  double max_pdf(double lo, double hi) const;
  double first_moment() const;
  double support_end() const { return a_; }

  // Unnormalized integral of 1/2 (1 + Psi(y^-alpha)) over [lo, hi], ignoring the support cut.
  static double raw_mass(double alpha, const PeriodicProfile& profile, double lo, double hi);

private:
  PeriodicOscillatoryDensity() = default;
  double alpha_ = 1.0;
  PeriodicProfile profile_ = PeriodicProfile::sine();
  double a_ = 0.0;
  std::vector<double> table_x_, table_cdf_;
};

// Support endpoint a with integral_0^a 1/2 (1 + Psi(x^-alpha)) dx = 1.
double normalize_periodic(double alpha, const PeriodicProfile& profile);

// Gaussian-path densities (1 + S_x - kappa_x)_+ ^ 1 on [0,1] plus a tail

class GaussianPathDensity {
public:
  // Samples fractional Brownian motion with Hurst index `hurst` on a uniform
  // grid of `grid_size` points in [0,1] by Cholesky factorization.
  static GaussianPathDensity build(double hurst, double beta_lil, std::size_t grid_size,
                                   std::uint64_t seed);
  // Uses a caller-supplied path (grid must start at 0 and end at 1).
  static GaussianPathDensity from_path(std::vector<double> grid, std::vector<double> path,
                                       double hurst, double beta_lil,
                                       std::uint64_t seed = 0);

  // kappa_x = beta sqrt(x^{2H} |log|log x||); 0 at x = 0, +inf at x = 1.
  static double envelope(double x, double hurst, double beta_lil);

  const std::vector<double>& grid() const { return core_.x(); }
  const std::vector<double>& path() const { return path_; }
  // Density values on the grid after normalization.
  const std::vector<double>& values() const { return core_.f(); }
  double hurst() const { return hurst_; }
  double beta_lil() const { return beta_lil_; }
  std::uint64_t seed() const { return seed_; }
  // Mass m of the tail m exp(-(x-1)) on (1, inf).
  double tail_mass() const { return tail_mass_; }
  // True when the [0,1] part already had mass >= 1 and the whole density was rescaled.
  bool rescaled() const { return rescaled_; }

  double pdf(double x) const;
  double cdf(double x) const;
  double mass(double lo, double hi) const { return cdf(hi) - cdf(lo); }
  double quantile(double u) const;
  double max_pdf(double lo, double hi) const;
  double first_moment() const;
  double support_end() const { return std::numeric_limits<double>::infinity(); }

private:
  GaussianPathDensity() = default;
  TabulatedDensity core_;
  std::vector<double> path_;
  double hurst_ = 0.5, beta_lil_ = 1.0, tail_mass_ = 0.0;
  std::uint64_t seed_ = 0;
  bool rescaled_ = false;
};


using Density = std::variant<PiecewiseGeometricDensity, PeriodicOscillatoryDensity,
                             GaussianPathDensity, TabulatedDensity>;

std::string_view family_name(const Density& d);

double pdf(const Density& d, double x);
double cdf(const Density& d, double x);
// Integral of f over [lo, hi].
double mass(const Density& d, double lo, double hi);
// Inverse CDF: smallest x with F(x) >= u.
double sample(const Density& d, double u);
// Supremum of f over [lo, hi].
double max_pdf(const Density& d, double lo, double hi);
double first_moment(const Density& d);
double support_end(const Density& d);

// Convenience constructors used throughout tests and the CLI.
PiecewiseGeometricDensity make_piecewise(double alpha1, double alpha2, double p, double q);
GaussianPathDensity build_gaussian_path(double hurst, double beta_lil, std::size_t grid_size,
                                        std::uint64_t seed);
TabulatedDensity uniform_density(double lo, double hi);

}  // namespace stefan
