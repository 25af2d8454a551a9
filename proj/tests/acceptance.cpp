// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "stefan/bounds.hpp"
#include "stefan/conditions.hpp"
#include "stefan/exact.hpp"
#include "stefan/io.hpp"
#include "stefan/numerics.hpp"
#include "stefan/parallel.hpp"
#include "stefan/solver.hpp"

using namespace stefan;

namespace {

struct Line {
  int id;
  bool pass;
  std::string what;
  double seconds;
};

std::vector<Line> lines;

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void criterion(int id, const std::function<std::pair<bool, std::string>()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::pair<bool, std::string> r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("threw: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  lines.push_back({id, r.first, r.second, s});
  std::printf("criterion %2d: %s  %s  (%.1f s)\n", id, r.first ? "PASS" : "FAIL", r.second.c_str(), s);
  std::fflush(stdout);
}

// Running digest over every number the randomized criteria produce.
struct Digest {
  std::uint64_t h = 1469598103934665603ull;
  void add(double v) {
    unsigned char b[sizeof v];
    std::memcpy(b, &v, sizeof v);
    for (unsigned char c : b) h = (h ^ c) * 1099511628211ull;
  }
  void add(const std::vector<double>& v) {
    for (double x : v) add(x);
  }
};

const PiecewiseGeometricDensity& pw() {
  static const auto d = make_piecewise(0.5, 1.05, 0.5, 0.5);
  return d;
}

const exact::Params& pw_exact() {
  static const exact::Params p{Ratio::parse("1/2"), Ratio::parse("21/20"), Ratio::parse("1/2"), Ratio::parse("1/2")};
  return p;
}

SolverConfig main_config() {
  SolverConfig c;
  c.n_particles = 100'000;
  c.dt = 5e-4;
  c.T = 0.25;
  c.seed = 20240601;
  c.picard.n_paths = 100'000;
  c.picard.max_iters = 50;
  c.picard.tol = 1e-3;
  return c;
}

double worst_se_margin(const Margin& m) { return m.se > 0 ? m.value / m.se : m.value; }

// Criteria 3 to 10. Returns the digest of their numeric outputs.
std::uint64_t randomized_block(bool report) {
  Digest dig;
  auto run = [&](int id, const std::function<std::pair<bool, std::string>()>& body) {
    if (report) {
      criterion(id, body);
    } else {
      body();
    }
  };

  const auto cfg = main_config();
  PicardResult picard;
  SimulationResult particles;

  run(3, [&] {
    picard = picard_minimal(pw(), cfg);
    bool mono = true;
    for (std::size_t it = 1; it < picard.history.size(); ++it) {
      for (std::size_t k = 0; k < picard.history[it].size(); ++k) mono = mono && picard.history[it][k] >= picard.history[it - 1][k];
    }
    for (const auto& h : picard.history) dig.add(h);
    dig.add(picard.sup_change);
    const bool ok = mono && picard.monotone && picard.converged && picard.iterations <= 50;
    return std::pair{ok, fmt("iterations %zu, last sup-change %.2e, monotone %s, M = %zu, K = %zu", picard.iterations,
                             picard.sup_change.empty() ? 0.0 : picard.sup_change.back(), mono ? "yes" : "no",
                             cfg.picard.n_paths, cfg.steps())};
  });

  run(4, [&] {
    particles = simulate_particles(pw(), cfg);
    dig.add(particles.frontier.lambda);
    double sup = 0;
    for (std::size_t k = 0; k < particles.frontier.lambda.size(); ++k) {
      sup = std::max(sup, std::abs(particles.frontier.lambda[k] - picard.frontier.lambda[k]));
    }
    return std::pair{sup < 0.02, fmt("sup |particle - picard| = %.5f (< 0.02), n = %zu", sup, cfg.n_particles)};
  });

  run(5, [&] {
    const auto sine = PeriodicOscillatoryDensity::make(1.0, PeriodicProfile::sine());
    const auto rep = check_averaging_condition(sine, 1e-2);
    double sup = 0;
    for (std::size_t i = 0; i < rep.lambda_grid.size(); ++i) {
      if (rep.lambda_grid[i] <= 1e-2) sup = std::max(sup, rep.sup_psi_per_lambda[i]);
    }
    dig.add(rep.sup_psi_per_lambda);
    const bool exact_hit = exact::psi_hits_alpha2(pw_exact(), 10);
    double worst = 0;
    for (std::size_t n = 1; n <= 10; ++n) worst = std::max(worst, std::abs(psi(pw(), pw().endpoint(2 * n + 1), 1.0) - 1.05));
    const auto pw_rep = check_averaging_condition(pw(), 1e-2);
    const bool ok = rep.holds_1_7 && sup < 0.75 + 1e-6 && exact_hit && worst < 1e-12 && !pw_rep.holds_1_7;
    return std::pair{ok, fmt("sine: sup psi = %.6f (< 3/4), holds; piecewise: psi(a_2n+1, 1) = 21/20 exactly "
                             "for n <= 10 %s (float error %.1e), fails",
                             sup, exact_hit ? "yes" : "no", worst)};
  });

  run(6, [&] {
    const double L = compute_L(pw()).L;
    const double s = bruteforce_sup_ratio(pw(), 1000, 1000);
    dig.add(s);
    const auto e = exact::constants(pw_exact());
    const bool seq = exact::slope_sequence_nondecreasing(pw_exact(), 10);
    const bool ok = e.L == "47/50" && s >= L - 0.01 && s <= L + 1e-9 && seq;
    return std::pair{ok, fmt("sup ratio %.6f in [L - 0.01, L], L = %s, k-sequence nondecreasing for n <= 10: %s", s,
                             e.L.c_str(), seq ? "yes" : "no")};
  });

  BoundsReport bounds;
  run(7, [&] {
    const auto c = compute_sqrt_constants(pw(), 0.0);  // c1 and c2 do not involve the slope
    EnvelopeConstants ec;
    ec.c1 = c.c1;
    ec.c2 = c.c2;
    const auto m = verify_frontier_envelopes(particles.frontier, ec);
    dig.add(m.lower.value);
    dig.add(m.upper.value);
    const bool ok = m.lower.pass && m.upper.pass && m.lower.nodes == cfg.steps();
    return std::pair{ok, fmt("c1 = %.5f, c2 = %.4f; min lower margin %.4f (%.1f SE) at t = %.4f, min upper margin %.4f",
                             c.c1, c.c2, m.lower.value, worst_se_margin(m.lower), m.lower.t, m.upper.value)};
  });

  run(8, [&] {
    const Density sine = PeriodicOscillatoryDensity::make(1.0, PeriodicProfile::sine());
    SolverConfig sc;
    sc.n_particles = 100'000;
    sc.T = 1e-4;
    sc.dt = 1e-6;
    sc.seed = cfg.seed;
    const auto sim = simulate_particles(sine, sc);
    const auto g = check_averaging_condition(sine, 1e-2).envelope();
    const auto m = verify_frontier_envelopes(sim.frontier, {}, &g);
    dig.add(sim.frontier.lambda);
    dig.add(m.chi_bar.value);
    const bool ok = m.chi_bar.evaluated && m.chi_bar.pass && m.chi_bar.nodes == sc.steps();
    return std::pair{ok, fmt("T = %g, %zu of %zu nodes with chi_bar defined, min chi_bar - Lambda = %.5f (%.1f SE)", sc.T,
                             m.chi_bar.nodes, sc.steps(), m.chi_bar.value, worst_se_margin(m.chi_bar))};
  });

  run(9, [&] {
    BoundsOptions opt;
    opt.seed = cfg.seed;
    bounds = run_bounds(pw(), particles.frontier, opt);
    dig.add(bounds.c3);
    dig.add(bounds.beta_slope.value);
    const auto t_idx = log_time_indices(cfg.steps(), 10);
    std::vector<WindowTriple> triples;
    // U >= c3 + B_1, so the right side is only informative for b - a beyond c3
    const double as[] = {0.1, 0.3, 0.5, 0.8, 1.0, 1.2, 0.2, 0.6, 0.0, 1.5};
    for (std::size_t i = 0; i < 10; ++i) {
      triples.push_back({t_idx[i % t_idx.size()], as[i], as[i] + bounds.c3 + static_cast<double>(i % 4)});
    }
    triples.push_back({t_idx.back(), 0.7, 0.7});
    const auto rows = estimate_window_bound(particles.frontier, bounds.c3, triples, 100'000, cfg.seed + 7);
    bool ok = true;
    double worst = INFINITY, min_rhs = 1, max_rhs = 0;
    for (std::size_t i = 0; i < 10; ++i) {
      const auto& r = rows[i];
      const double se = std::hypot(r.lhs_se, r.rhs_se);
      dig.add(r.lhs);
      dig.add(r.rhs);
      if (r.lhs - r.rhs + 3 * se < 0) ok = false;
      worst = std::min(worst, se > 0 ? (r.lhs - r.rhs) / se : r.lhs - r.rhs);
      min_rhs = std::min(min_rhs, r.rhs);
      max_rhs = std::max(max_rhs, r.rhs);
    }
    ok = ok && rows[10].rhs == 0.0;
    return std::pair{ok, fmt("10 triples, rhs in [%.3f, %.3f], min (lhs - rhs)/SE = %.1f, c3 = %.4f, "
                             "degenerate b = a gives rhs %g",
                             min_rhs, max_rhs, worst, bounds.c3, rows[10].rhs)};
  });

  run(10, [&] {
    const Density uni = uniform_density(0.0, 2.0);
    const auto sim = simulate_particles(uni, cfg);
    const auto t_idx = log_time_indices(cfg.steps(), 10);
    const auto h = log_space(2e-4, 2.0, 40);
    const auto du = estimate_delta0(sim.frontier, uni, t_idx, h, 100'000, cfg.seed + 2);
    dig.add(du.ratio);
    dig.add(bounds.delta0.ratio);
    const auto& dp = bounds.delta0;
    const bool ok = du.delta0_hat + 3 * du.se <= 0.51 && dp.delta0_hat + 3 * dp.se < 1.0;
    return std::pair{ok, fmt("uniform[0,2]: %.4f + 3 x %.4f <= 0.51; piecewise: %.4f + 3 x %.4f < 1", du.delta0_hat,
                             du.se, dp.delta0_hat, dp.se)};
  });
  return dig.h;
}

}  // namespace

int main() {
  std::printf("acceptance run, %u hardware threads\n", std::thread::hardware_concurrency());

  criterion(1, [] {
    std::mt19937_64 gen(1);
    std::uniform_int_distribution<std::size_t> nd(2, 64);
    std::uniform_real_distribution<double> pos(-0.3, 1.3);
    int bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t n = nd(gen);
      std::vector<double> v(n);
      for (auto& x : v) x = pos(gen);
      const double s = physical_jump_scan(v, n);
      const double b = physical_jump_bruteforce(v, n, 1e-6);
      const double k = std::round(s * static_cast<double>(n));  // on the {k/n} grid
      if (s != b || s != k / static_cast<double>(n)) ++bad;
    }
    return std::pair{bad == 0, fmt("1000 ensembles, n in 2..64, %d mismatches", bad)};
  });

  criterion(2, [] {
    SolverConfig c;
    c.n_particles = 100'000;
    c.T = 0.01;
    c.dt = 1e-3;
    const double full = simulate_particles(uniform_density(0.0, 0.5), c).frontier.lambda[0];
    const double none = simulate_particles(uniform_density(0.0, 2.0), c).frontier.lambda[0];
    return std::pair{full == 1.0 && none == 0.0, fmt("uniform[0,1/2]: Lambda_0 = %g; uniform[0,2]: Lambda_0 = %g", full, none)};
  });

  parallel::set_threads(8);
  const auto h8 = randomized_block(true);

  criterion(11, [&] {
    parallel::set_threads(1);
    const auto h1 = randomized_block(false);
    return std::pair{h1 == h8, fmt("digest of criteria 3-10 outputs: 8 threads %s, 1 thread %s", hex64(h8).c_str(),
                                   hex64(h1).c_str())};
  });

  int failed = 0;
  for (const auto& l : lines) failed += l.pass ? 0 : 1;
  std::printf("%d of %zu criteria passed\n", static_cast<int>(lines.size()) - failed, lines.size());
  return failed == 0 ? 0 : 1;
}
