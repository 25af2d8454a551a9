#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stefan/densities.hpp"

namespace stefan {

struct PicardConfig {
  std::size_t n_paths = 100'000;
  std::size_t max_iters = 50;
  double tol = 1e-3;
};

struct SolverConfig {
  std::size_t n_particles = 100'000;
  double dt = 5e-4;
  double T = 0.25;
  std::uint64_t seed = 1;
  bool bridge_correction = false;
  PicardConfig picard;
  std::optional<double> jump_threshold;  // default max(5/n, 10 sqrt(dt))

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  // K = round(T / dt); grid t_k = k T / K.
  std::size_t steps() const;
  double step() const { return T / static_cast<double>(steps()); }
  double threshold(std::size_t n) const;
};

struct Jump {
  double t;
  double size;
};

struct FrontierPath {
  std::vector<double> t;
  std::vector<double> lambda;
  std::vector<double> alive_fraction;
  std::vector<Jump> jumps;
  std::size_t sample_size = 0;  // particles or paths behind each value

  // sqrt(L (1 - L) / n) at node k
  double standard_error(std::size_t k) const;
};

struct ParticleEnsemble {
  std::size_t n = 0;
  std::vector<double> positions;  // last position; meaningful for alive particles
  std::vector<std::uint8_t> alive;
  std::vector<double> death_time;  // +inf while alive
  std::uint64_t seed = 0;
};

struct SimulationResult {
  FrontierPath frontier;
  ParticleEnsemble ensemble;
};

// Physical jump on an empirical measure with atoms 1/n at `values`:
// Delta = k*/n with k* = min{k : y_(k+1) > k/n}.
double physical_jump_scan(std::span<const double> values, std::size_t n);
std::size_t physical_jump_count(std::span<const double> values, std::size_t n);

// Reference: first x on the x_step grid with nu(-inf, x] < x, snapped to {k/n}.
double physical_jump_bruteforce(std::span<const double> values, std::size_t n, double x_step);

// F(x) = P(X_0- <= x), floating-point monotone and cheap. Densities whose CDF
// is expensive are tabulated once.
class MonotoneCdf {
public:
  explicit MonotoneCdf(const Density& d);
  double operator()(double x) const;

private:
  const Density* density_;
  bool tabulated_ = false;
  double x_max_ = 0.0, inv_h_ = 0.0;
  std::vector<double> table_;
};

SimulationResult simulate_particles(const Density& d, const SolverConfig& cfg);

struct PicardResult {
  FrontierPath frontier;
  std::size_t iterations = 0;
  bool converged = false;
  bool monotone = true;  // every iterate >= the previous one at every node
  std::vector<double> sup_change;
  std::vector<std::vector<double>> history;  // Lambda^(0), Lambda^(1), ...
};

PicardResult picard_minimal(const Density& d, const SolverConfig& cfg);

struct YSamples {
  std::vector<std::size_t> t_index;
  std::vector<std::vector<double>> values;  // values[i][path]
};

// Per path the running max of -B + Lambda at the requested grid indices.
// With `continuous`, the sup between grid nodes is sampled exactly from the
// Brownian bridge (Lambda held at its left value).
YSamples compute_Y_samples(const FrontierPath& frontier, std::size_t n_paths, std::uint64_t seed,
                           const std::vector<std::size_t>& t_index, bool continuous = true);

// Jump records from consecutive differences exceeding `threshold`.
std::vector<Jump> detect_jumps(const std::vector<double>& t, const std::vector<double>& lambda,
                               double threshold);

}  // namespace stefan
