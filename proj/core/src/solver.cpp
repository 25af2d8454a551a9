#include "stefan/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "stefan/numerics.hpp"
#include "stefan/parallel.hpp"
#include "stefan/rng.hpp"

namespace stefan {

namespace {

constexpr std::size_t kParticleChunk = 4096;
constexpr std::size_t kPathChunk = 1024;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Candidate {
  double value;
  std::size_t index;
  bool operator<(const Candidate& o) const { return value < o.value || (value == o.value && index < o.index); }
};

// k* = min{k : y_(k+1) > (k + offset)/n} over the sorted candidates, all of
// which are <= eps; nullopt when the answer needs values above eps.
std::optional<std::size_t> cascade_from_prefix(const std::vector<Candidate>& c, std::size_t n,
                                               double eps, double offset) {
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0;; ++k) {
    const double level = (static_cast<double>(k) + offset) / dn;
    if (k < c.size()) {
      if (c[k].value > level) return k;
      continue;
    }
    if (k >= n) return n;
    if (eps >= level) return k;
    return std::nullopt;
  }
}

}  // namespace


void SolverConfig::validate() const {
  if (n_particles < 1) throw std::invalid_argument("config field 'n_particles' must be >= 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("config field 'dt' must be positive");
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("config field 'T' must be positive");
  if (T / dt > 1e8) throw std::invalid_argument("config fields 'T'/'dt' give more than 1e8 steps");
  if (picard.n_paths < 1) throw std::invalid_argument("config field 'picard.n_paths' must be >= 1");
  if (picard.max_iters < 1) throw std::invalid_argument("config field 'picard.max_iters' must be >= 1");
  if (!(picard.tol > 0.0)) throw std::invalid_argument("config field 'picard.tol' must be positive");
  if (jump_threshold && !(*jump_threshold >= 0.0)) {
    throw std::invalid_argument("config field 'jump_threshold' must be nonnegative");
  }
}

std::size_t SolverConfig::steps() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(T / dt)));
}

double SolverConfig::threshold(std::size_t n) const {
  if (jump_threshold) return *jump_threshold;
  return std::max(5.0 / static_cast<double>(n), 10.0 * std::sqrt(step()));
}

double FrontierPath::standard_error(std::size_t k) const {
  const double l = lambda.at(k);
  if (sample_size == 0) return 0.0;
  return std::sqrt(std::max(0.0, l * (1.0 - l)) / static_cast<double>(sample_size));
}

std::vector<Jump> detect_jumps(const std::vector<double>& t, const std::vector<double>& lambda,
                               double threshold) {
  std::vector<Jump> out;
  if (lambda.empty()) return out;
  if (lambda[0] > threshold) out.push_back({t[0], lambda[0]});
  for (std::size_t k = 1; k < lambda.size(); ++k) {
    const double delta = lambda[k] - lambda[k - 1];
    if (delta > threshold) out.push_back({t[k], delta});
  }
  return out;
}


std::size_t physical_jump_count(std::span<const double> values, std::size_t n) {
  if (values.size() > n) throw std::invalid_argument("jump scan: more values than the total count n");
  std::vector<double> y(values.begin(), values.end());
  std::sort(y.begin(), y.end());
  const double dn = static_cast<double>(n);
  std::size_t k = 0;
  while (k < y.size() && !(y[k] > static_cast<double>(k) / dn)) ++k;
  return k;
}

double physical_jump_scan(std::span<const double> values, std::size_t n) {
  if (n == 0) return 0.0;
  return static_cast<double>(physical_jump_count(values, n)) / static_cast<double>(n);
}

double physical_jump_bruteforce(std::span<const double> values, std::size_t n, double x_step) {
  if (!(x_step > 0.0)) throw std::invalid_argument("x_step must be positive");
  if (n == 0) return 0.0;
  std::vector<double> y(values.begin(), values.end());
  std::sort(y.begin(), y.end());
  const double dn = static_cast<double>(n);
  std::size_t below = 0;
  const auto last = static_cast<std::size_t>(std::ceil(1.0 / x_step)) + 2;
  for (std::size_t j = 1; j <= last; ++j) {
    const double x = static_cast<double>(j) * x_step;
    while (below < y.size() && y[below] <= x) ++below;
    if (static_cast<double>(below) / dn < x) {
      const double k = std::ceil(x * dn - dn * x_step - 1e-9);
      return std::clamp(k, 0.0, dn) / dn;
    }
  }
  return 1.0;
}


MonotoneCdf::MonotoneCdf(const Density& d) : density_(&d) {
  if (const auto* p = std::get_if<PeriodicOscillatoryDensity>(&d)) {
    constexpr std::size_t nodes = 1 << 16;
    tabulated_ = true;
    x_max_ = p->a();
    const double h = x_max_ / static_cast<double>(nodes);
    inv_h_ = 1.0 / h;
    table_.resize(nodes + 1);
    table_[0] = 0.0;
    for (std::size_t i = 1; i <= nodes; ++i) {
      table_[i] = table_[i - 1] + p->mass(static_cast<double>(i - 1) * h, static_cast<double>(i) * h);
    }
    for (auto& v : table_) v = std::min(v / table_.back(), 1.0);
  }
}

double MonotoneCdf::operator()(double x) const {
  if (!tabulated_) return cdf(*density_, x);
  if (x <= 0.0) return 0.0;
  if (x >= x_max_) return 1.0;
  const double t = x * inv_h_;
  const auto i = std::min(static_cast<std::size_t>(t), table_.size() - 2);
  const double v = table_[i] + (t - static_cast<double>(i)) * (table_[i + 1] - table_[i]);
  return std::clamp(v, table_[i], table_[i + 1]);
}


SimulationResult simulate_particles(const Density& d, const SolverConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_particles;
  const std::size_t steps = cfg.steps();
  const double dt = cfg.step();
  const double sqdt = std::sqrt(dt);
  const double dn = static_cast<double>(n);
  const CounterRng rng(cfg.seed);

  // x holds X_0- + B; the live position is x - Lambda.
  std::vector<double> x(n);
  parallel::for_each_chunk(n, kParticleChunk, [&](const parallel::Chunk& c) {
    for (std::size_t i = c.begin; i < c.end; ++i) x[i] = sample(d, (static_cast<double>(i) + 0.5) / dn);
  });

  SimulationResult res;
  auto& ens = res.ensemble;
  ens.n = n;
  ens.seed = cfg.seed;
  ens.alive.assign(n, 1);
  ens.death_time.assign(n, kInf);

  auto& fr = res.frontier;
  fr.sample_size = n;
  fr.t.resize(steps + 1);
  fr.lambda.resize(steps + 1);
  fr.alive_fraction.resize(steps + 1);

  std::size_t dead = 0;
  auto kill_prefix = [&](const std::vector<Candidate>& c, std::size_t k, double t) {
    for (std::size_t j = 0; j < k; ++j) {
      ens.alive[c[j].index] = 0;
      ens.death_time[c[j].index] = t;
    }
    dead += k;
  };

  // Collect live positions <= eps, sorted; chunk order keeps it deterministic.
  std::vector<std::vector<Candidate>> parts(parallel::chunk_count(n, kParticleChunk));
  auto collect = [&](double lam, double eps) {
    parallel::for_each_chunk(n, kParticleChunk, [&](const parallel::Chunk& c) {
      auto& out = parts[c.index];
      out.clear();
      for (std::size_t i = c.begin; i < c.end; ++i) {
        if (ens.alive[i] && x[i] - lam <= eps) out.push_back({x[i] - lam, i});
      }
    });
    std::vector<Candidate> all;
    for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
    std::sort(all.begin(), all.end());
    return all;
  };
  auto resolve = [&](double lam, double offset, double t) {
    double eps = 16.0 / dn;
    for (;;) {
      auto c = collect(lam, eps);
      // Atoms weigh 1/n against the full population, dead or not.
      const auto k = cascade_from_prefix(c, n, eps, offset);
      if (k) {
        kill_prefix(c, *k, t);
        return *k;
      }
      eps *= 4.0;
    }
  };

  // Time-0 cascade on the stratified sample (half-atom offset, see README).
  resolve(0.0, 0.5, 0.0);
  double lam = static_cast<double>(dead) / dn;
  fr.t[0] = 0.0;
  fr.lambda[0] = lam;
  fr.alive_fraction[0] = static_cast<double>(n - dead) / dn;

  for (std::size_t k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    parallel::for_each_chunk(n, kParticleChunk, [&](const parallel::Chunk& c) {
      for (std::size_t i = c.begin; i < c.end; ++i) {
        if (!ens.alive[i]) continue;
        const auto [z, u] = rng.normal_and_uniform(StreamPurpose::particle_increment, i, k);
        const double before = x[i] - lam;
        x[i] += sqdt * z;
        if (cfg.bridge_correction) {
          const double after = x[i] - lam;
          if (after > 0.0 && u < std::exp(-2.0 * before * after / dt)) x[i] = lam;
        }
      }
    });
    resolve(lam, 0.0, t);
    lam = static_cast<double>(dead) / dn;
    fr.t[k] = t;
    fr.lambda[k] = lam;
    fr.alive_fraction[k] = static_cast<double>(n - dead) / dn;
  }
  fr.t.back() = cfg.T;
  fr.jumps = detect_jumps(fr.t, fr.lambda, cfg.threshold(n));

  ens.positions.resize(n);
  for (std::size_t i = 0; i < n; ++i) ens.positions[i] = x[i] - lam;
  return res;
}


PicardResult picard_minimal(const Density& d, const SolverConfig& cfg) {
  cfg.validate();
  const std::size_t m_paths = cfg.picard.n_paths;
  const std::size_t steps = cfg.steps();
  const double dt = cfg.step();
  const double sqdt = std::sqrt(dt);
  const bool bridge = cfg.bridge_correction;
  const CounterRng rng(cfg.seed);
  const MonotoneCdf F(d);

  // Common random numbers: -B at the nodes and, with the bridge, the sup of
  // -B over each step, drawn once and stored in single precision.
  std::vector<float> neg_b(m_paths * steps);
  std::vector<float> step_max(bridge ? m_paths * steps : 0);
  parallel::for_each_chunk(m_paths, kPathChunk, [&](const parallel::Chunk& c) {
    for (std::size_t m = c.begin; m < c.end; ++m) {
      double prev = 0.0;
      for (std::size_t k = 1; k <= steps; ++k) {
        const auto [z, u] = rng.normal_and_uniform(StreamPurpose::picard_path, m, k);
        const double next = prev - sqdt * z;
        neg_b[m * steps + k - 1] = static_cast<float>(next);
        if (bridge) {
          const double diff = next - prev;
          const double top = 0.5 * (prev + next + std::sqrt(diff * diff - 2.0 * dt * std::log(u)));
          step_max[m * steps + k - 1] = static_cast<float>(top);
        }
        prev = next;
      }
    }
  });

  PicardResult res;
  std::vector<double> lam(steps + 1, 0.0);
  res.history.push_back(lam);
  const double inv_m = 1.0 / static_cast<double>(m_paths);

  for (std::size_t it = 1; it <= cfg.picard.max_iters; ++it) {
    auto sums = parallel::reduce_chunks(
        m_paths, kPathChunk, std::vector<double>(),
        [&](const parallel::Chunk& c) {
          std::vector<double> s(steps + 1, 0.0);
          for (std::size_t m = c.begin; m < c.end; ++m) {
            const float* nb = neg_b.data() + m * steps;
            const float* top = bridge ? step_max.data() + m * steps : nullptr;
            double y = lam[0];
            s[0] += F(y);
            for (std::size_t k = 1; k <= steps; ++k) {
              if (top) y = std::max(y, lam[k - 1] + static_cast<double>(top[k - 1]));
              y = std::max(y, lam[k] + static_cast<double>(nb[k - 1]));
              s[k] += F(y);
            }
          }
          return s;
        },
        [](std::vector<double> acc, std::vector<double> part) {
          if (acc.empty()) return part;
          for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += part[k];
          return acc;
        });
    double change = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
      const double next = sums[k] * inv_m;
      if (next < lam[k]) res.monotone = false;
      change = std::max(change, std::abs(next - lam[k]));
      lam[k] = next;
    }
    res.history.push_back(lam);
    res.sup_change.push_back(change);
    res.iterations = it;
    if (change < cfg.picard.tol) {
      res.converged = true;
      break;
    }
  }

  auto& fr = res.frontier;
  fr.sample_size = m_paths;
  fr.t.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) fr.t[k] = static_cast<double>(k) * dt;
  fr.t.back() = cfg.T;
  fr.lambda = lam;
  fr.alive_fraction.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) fr.alive_fraction[k] = 1.0 - lam[k];
  fr.jumps = detect_jumps(fr.t, fr.lambda, cfg.threshold(m_paths));
  return res;
}


YSamples compute_Y_samples(const FrontierPath& frontier, std::size_t n_paths, std::uint64_t seed,
                           const std::vector<std::size_t>& t_index, bool continuous) {
  const auto& lam = frontier.lambda;
  if (lam.empty()) throw std::invalid_argument("Y samples: empty frontier");
  for (std::size_t idx : t_index) {
    if (idx >= lam.size()) throw std::invalid_argument("Y samples: time index " + std::to_string(idx) + " beyond the grid");
  }
  YSamples out;
  out.t_index = t_index;
  out.values.assign(t_index.size(), std::vector<double>(n_paths));
  if (t_index.empty()) return out;
  // Requested slots per grid node.
  std::vector<std::vector<std::size_t>> slots(lam.size());
  for (std::size_t i = 0; i < t_index.size(); ++i) slots[t_index[i]].push_back(i);
  const std::size_t last = *std::max_element(t_index.begin(), t_index.end());
  const CounterRng rng(seed);

  parallel::for_each_chunk(n_paths, kPathChunk, [&](const parallel::Chunk& c) {
    for (std::size_t m = c.begin; m < c.end; ++m) {
      double y = lam[0];
      double prev = 0.0;
      for (std::size_t i : slots[0]) out.values[i][m] = y;
      for (std::size_t k = 1; k <= last; ++k) {
        const double dt = frontier.t[k] - frontier.t[k - 1];
        const auto [z, u] = rng.normal_and_uniform(StreamPurpose::y_samples, m, k);
        const double next = prev - std::sqrt(dt) * z;
        if (continuous) {
          const double diff = next - prev;
          y = std::max(y, lam[k - 1] + 0.5 * (prev + next + std::sqrt(diff * diff - 2.0 * dt * std::log(u))));
        }
        y = std::max(y, lam[k] + next);
        prev = next;
        for (std::size_t i : slots[k]) out.values[i][m] = y;
      }
    }
  });
  return out;
}

}  // namespace stefan
