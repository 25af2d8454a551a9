#include "stefan/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "stefan/numerics.hpp"
#include "stefan/parallel.hpp"
#include "stefan/rng.hpp"

namespace stefan {

namespace {

constexpr std::size_t kChunk = 1024;

// Running min of observed-minus-required with the node's SE.
struct MarginAccumulator {
  Margin m;
  void add(double raw, double se, double t) {
    if (!m.evaluated || raw < m.value) {
      m.value = raw;
      m.se = se;
      m.t = t;
    }
    m.evaluated = true;
    ++m.nodes;
    if (raw < -3.0 * se) m.pass = false;
  }
};

double binomial_se(double p, std::size_t n) {
  return n == 0 ? 0.0 : std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

double prob_abs_normal_ge(double a) { return std::erfc(a / std::sqrt(2.0)); }

}  // namespace

SlopeBound compute_L(const PiecewiseGeometricDensity& d) {
  SlopeBound out;
  out.rho = 0.5 * (1.0 + d.p());
  const double q = d.q();
  out.L = ((1.0 - q) * d.alpha2() + q * (1.0 - out.rho) * d.alpha1()) / (1.0 - q * out.rho);
  out.below_one = out.L < 1.0;
  return out;
}

bool in_good_set(const PiecewiseGeometricDensity& d, double y, std::size_t band_cap) {
  if (y >= d.endpoint(2)) return true;
  const double rho = 0.5 * (1.0 + d.p());
  for (std::size_t n = 1; n <= band_cap; ++n) {
    const double hi = rho * d.endpoint(2 * n + 1);
    if (y > hi) return false;
    if (y >= d.endpoint(2 * n + 2)) return true;
  }
  return false;
}

double bruteforce_sup_ratio(const PiecewiseGeometricDensity& d, std::size_t n_y, std::size_t n_h,
                            std::size_t band_cap) {
  const double rho = 0.5 * (1.0 + d.p());
  const double a1 = d.a1();
  std::vector<std::pair<double, double>> bands{{d.endpoint(2), a1}};
  for (std::size_t n = 1; n <= band_cap; ++n) bands.emplace_back(d.endpoint(2 * n + 2), rho * d.endpoint(2 * n + 1));
  const std::size_t per_band = std::max<std::size_t>(2, n_y / bands.size());
  std::vector<double> ys;
  for (const auto& [lo, hi] : bands) {
    for (double y : lin_space(lo, hi, per_band)) {
      if (y < a1) ys.push_back(y);
    }
  }
  return parallel::reduce_chunks(
      ys.size(), 16, 0.0,
      [&](const parallel::Chunk& c) {
        double best = 0.0;
        for (std::size_t i = c.begin; i < c.end; ++i) {
          const double y = ys[i];
          const double fy = d.cdf(y);
          const double log_span = std::log(a1 / y);
          for (std::size_t j = 1; j <= n_h; ++j) {
            double z = y * std::exp(log_span * static_cast<double>(j) / static_cast<double>(n_h));
            z = std::min(z, a1);
            if (!(z > y)) continue;
            best = std::max(best, (d.cdf(z) - fy) / (z - y));
          }
        }
        return best;
      },
      [](double a, double b) { return std::max(a, b); });
}

SqrtConstants compute_sqrt_constants(const PiecewiseGeometricDensity& d, double beta_slope) {
  if (!(d.beta2() < 1.0)) throw std::domain_error("sqrt constants: beta2 >= 1, c2 undefined");
  if (!(beta_slope >= 0.0 && beta_slope < 1.0)) throw std::domain_error("sqrt constants: beta_slope outside [0,1), c3 undefined");
  return {d.beta1() * kMeanAbsNormal, d.alpha2() * kMeanAbsNormal / (1.0 - d.beta2()),
          d.alpha2() * kMeanAbsNormal / (1.0 - beta_slope)};
}

FrontierMargins verify_frontier_envelopes(const FrontierPath& fr, const EnvelopeConstants& c,
                                          const EnvelopeFunction* g) {
  FrontierMargins out;
  MarginAccumulator lower, upper, holder, chi;
  const std::size_t n = fr.sample_size;
  for (std::size_t k = 1; k < fr.lambda.size(); ++k) {
    const double t = fr.t[k], lam = fr.lambda[k], se = fr.standard_error(k);
    const double root = std::sqrt(t);
    if (c.c1) lower.add(lam - *c.c1 * root, se, t);
    if (c.c2) upper.add(*c.c2 * root - lam, se, t);
    if (c.c3) {
      for (std::size_t j = 0; j < k; ++j) {
        const double inc = lam - fr.lambda[j];
        holder.add(*c.c3 * std::sqrt(t - fr.t[j]) - inc, binomial_se(inc, n), t);
      }
    }
    if (g) {
      try {
        chi.add(chi_bar(*g, t) - lam, se, t);
      } catch (const std::out_of_range&) {
        // beyond the verified range of g; later t are too
        g = nullptr;
      }
    }
  }
  out.lower = lower.m;
  out.upper = upper.m;
  out.holder = holder.m;
  out.chi_bar = chi.m;
  return out;
}

Margin small_time_margin(const FrontierPath& fr, const Density& d, double alpha2) {
  const MonotoneCdf F(d);
  MarginAccumulator acc;
  const double l0 = fr.lambda.at(0);
  for (std::size_t k = 1; k < fr.lambda.size(); ++k) {
    const double inc = fr.lambda[k] - l0;
    const double lhs = inc - (F(fr.lambda[k]) - F(l0));
    acc.add(alpha2 * kMeanAbsNormal * std::sqrt(fr.t[k]) - lhs, fr.standard_error(k), fr.t[k]);
  }
  return acc.m;
}

BetaSlope estimate_beta_slope(const FrontierPath& fr, const Density& d, const std::vector<std::size_t>& t_index,
                              const std::vector<double>& x_grid, std::size_t n_samples, std::uint64_t seed) {
  const MonotoneCdf F(d);
  const CounterRng rng(seed);
  const std::size_t nt = t_index.size(), nx = x_grid.size();
  using Sums = std::vector<double>;  // [sum, sum of squares] per (t, x)
  auto sums = parallel::reduce_chunks(
      n_samples, kChunk, Sums(),
      [&](const parallel::Chunk& c) {
        Sums s(2 * nt * nx, 0.0);
        for (std::size_t i = c.begin; i < c.end; ++i) {
          const double z = rng.normal(StreamPurpose::bounds_mc, i, 0);
          for (std::size_t a = 0; a < nt; ++a) {
            const std::size_t k = t_index[a];
            const double base = fr.lambda[k] - std::sqrt(fr.t[k]) * z;
            const double f0 = F(base);
            for (std::size_t b = 0; b < nx; ++b) {
              const double v = (F(base + x_grid[b]) - f0) / x_grid[b];
              s[2 * (a * nx + b)] += v;
              s[2 * (a * nx + b) + 1] += v * v;
            }
          }
        }
        return s;
      },
      [](Sums acc, Sums part) {
        if (acc.empty()) return part;
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += part[i];
        return acc;
      });
  BetaSlope best;
  const double m = static_cast<double>(n_samples);
  for (std::size_t a = 0; a < nt; ++a) {
    for (std::size_t b = 0; b < nx; ++b) {
      const double mean = sums[2 * (a * nx + b)] / m;
      const double var = std::max(0.0, sums[2 * (a * nx + b) + 1] / m - mean * mean);
      if (mean > best.value) best = {mean, std::sqrt(var / m), fr.t[t_index[a]], x_grid[b]};
    }
  }
  return best;
}

std::vector<double> sample_U(double c3, std::size_t n_samples, std::uint64_t seed, std::size_t steps) {
  const CounterRng rng(seed);
  std::vector<double> out(n_samples);
  std::vector<double> s(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) {
    const double v = static_cast<double>(j) / static_cast<double>(steps);
    s[j] = v * v;  // refined near 0 where sqrt(s) is steep
  }
  parallel::for_each_chunk(n_samples, kChunk, [&](const parallel::Chunk& c) {
    for (std::size_t i = c.begin; i < c.end; ++i) {
      double b = 0.0, prev = 0.0, top = 0.0;
      for (std::size_t j = 1; j <= steps; ++j) {
        const double h = s[j] - s[j - 1];
        const auto [z, u] = rng.normal_and_uniform(StreamPurpose::supremum_u, i, j);
        b += std::sqrt(h) * z;
        const double next = b + c3 * std::sqrt(s[j]);
        const double diff = next - prev;
        top = std::max(top, 0.5 * (prev + next + std::sqrt(diff * diff - 2.0 * h * std::log(u))));
        prev = next;
      }
      out[i] = top;
    }
  });
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

double fraction_le(const std::vector<double>& sorted, double x) {
  if (sorted.empty()) return 0.0;
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(std::distance(sorted.begin(), it)) / static_cast<double>(sorted.size());
}

WindowRow window_row(double t, double a, double b, const std::vector<double>& y, const std::vector<double>& u) {
  WindowRow row;
  row.t = t;
  row.a = a;
  row.b = b;
  const double root = std::sqrt(t);
  std::size_t hits = 0;
  for (double v : y) {
    if (v >= a * root && v <= b * root) ++hits;
  }
  row.lhs = static_cast<double>(hits) / static_cast<double>(y.size());
  row.lhs_se = binomial_se(row.lhs, y.size());
  row.prob_abs_normal = prob_abs_normal_ge(a);
  row.prob_U = b > a ? (std::isinf(b) ? 1.0 : fraction_le(u, b - a)) : 0.0;
  row.rhs = row.prob_abs_normal * row.prob_U;
  row.rhs_se = b > a && !std::isinf(b) ? row.prob_abs_normal * binomial_se(row.prob_U, u.size()) : 0.0;
  return row;
}

std::vector<std::size_t> unique_indices(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

std::vector<WindowRow> estimate_window_bound(const FrontierPath& fr, double c3, const std::vector<WindowTriple>& triples,
                                         std::size_t n_paths, std::uint64_t seed) {
  std::vector<std::size_t> idx;
  for (const auto& tr : triples) idx.push_back(tr.t_index);
  idx = unique_indices(idx);
  const auto ys = compute_Y_samples(fr, n_paths, seed, idx);
  const auto u = sample_U(c3, n_paths, seed ^ 0x5bd1e995u);
  std::vector<WindowRow> rows;
  for (const auto& tr : triples) {
    const auto pos = static_cast<std::size_t>(std::lower_bound(idx.begin(), idx.end(), tr.t_index) - idx.begin());
    rows.push_back(window_row(fr.t[tr.t_index], tr.a, tr.b, ys.values[pos], u));
  }
  return rows;
}

ProbGReport estimate_prob_in_G(const FrontierPath& fr, const PiecewiseGeometricDensity& d, double c3,
                               const std::vector<std::size_t>& t_index, std::size_t n_paths, std::uint64_t seed) {
  const auto sl = compute_L(d);
  ProbGReport rep;
  rep.threshold = (d.alpha2() - 1.0) / (d.alpha2() - sl.L);
  const auto idx = unique_indices(t_index);
  const auto ys = compute_Y_samples(fr, n_paths, seed, idx);
  const auto u = sample_U(c3, n_paths, seed ^ 0x5bd1e995u);
  rep.min_prob_G = 1.0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double t = fr.t[idx[i]];
    if (!(t > 0.0)) continue;
    ProbGRow row;
    row.t = t;
    std::size_t hits = 0;
    for (double v : ys.values[i]) {
      if (in_good_set(d, v)) ++hits;
    }
    row.prob_G = static_cast<double>(hits) / static_cast<double>(n_paths);
    row.prob_G_se = binomial_se(row.prob_G, n_paths);
    const double root = std::sqrt(t);
    if (root < d.endpoint(3)) {
      std::size_t n = 1;
      while (d.endpoint(2 * n + 3) > root) ++n;
      row.band = window_row(t, d.endpoint(2 * n + 2) / root, sl.rho * d.endpoint(2 * n + 1) / root, ys.values[i], u);
    } else {
      row.band = window_row(t, d.endpoint(2) / root, std::numeric_limits<double>::infinity(), ys.values[i], u);
    }
    rep.min_prob_G = std::min(rep.min_prob_G, row.prob_G);
    rep.rows.push_back(row);
  }
  rep.above_threshold = !rep.rows.empty() && rep.min_prob_G > rep.threshold;
  return rep;
}

Delta0Report estimate_delta0(const FrontierPath& fr, const Density& d, const std::vector<std::size_t>& t_index,
                             const std::vector<double>& h_grid, std::size_t n_paths, std::uint64_t seed) {
  const MonotoneCdf F(d);
  const auto idx = unique_indices(t_index);
  const auto ys = compute_Y_samples(fr, n_paths, seed, idx);
  const std::size_t nt = idx.size(), nh = h_grid.size();
  using Sums = std::vector<double>;
  auto sums = parallel::reduce_chunks(
      n_paths, kChunk, Sums(),
      [&](const parallel::Chunk& c) {
        Sums s(2 * nt * nh, 0.0);
        for (std::size_t a = 0; a < nt; ++a) {
          for (std::size_t m = c.begin; m < c.end; ++m) {
            const double y = ys.values[a][m];
            const double fy = F(y);
            for (std::size_t b = 0; b < nh; ++b) {
              const double v = (F(y + h_grid[b]) - fy) / h_grid[b];
              s[2 * (a * nh + b)] += v;
              s[2 * (a * nh + b) + 1] += v * v;
            }
          }
        }
        return s;
      },
      [](Sums acc, Sums part) {
        if (acc.empty()) return part;
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += part[i];
        return acc;
      });
  Delta0Report rep;
  rep.h_grid = h_grid;
  const double m = static_cast<double>(n_paths);
  bool first = true;
  for (std::size_t a = 0; a < nt; ++a) {
    rep.t_grid.push_back(fr.t[idx[a]]);
    for (std::size_t b = 0; b < nh; ++b) {
      const double mean = sums[2 * (a * nh + b)] / m;
      const double var = std::max(0.0, sums[2 * (a * nh + b) + 1] / m - mean * mean);
      rep.ratio.push_back(mean);
      if (first || mean > rep.delta0_hat) {
        first = false;
        rep.delta0_hat = mean;
        rep.se = std::sqrt(var / m);
        rep.t = fr.t[idx[a]];
        rep.h = h_grid[b];
      }
    }
  }
  return rep;
}

std::vector<std::size_t> log_time_indices(std::size_t steps, std::size_t count) {
  std::vector<std::size_t> out;
  if (steps == 0 || count == 0) return out;
  if (count == 1) return {steps};
  for (double v : log_space(1.0, static_cast<double>(steps), count)) {
    out.push_back(std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(v)), 1, steps));
  }
  return unique_indices(out);
}

bool BoundsReport::all_pass() const {
  auto ok = [](const Margin& m) { return !m.evaluated || m.pass; };
  bool pass = ok(envelopes.lower) && ok(envelopes.upper) && ok(envelopes.holder) && ok(envelopes.chi_bar) &&
              ok(small_time) && ok(window) && ok(probG);
  if (piecewise && admissible_4_4) pass = pass && delta0.delta0_hat + 3.0 * delta0.se < 1.0;
  return pass;
}

BoundsReport run_bounds(const Density& d, const FrontierPath& fr, const BoundsOptions& opt) {
  BoundsReport rep;
  rep.family = std::string(family_name(d));
  const std::size_t steps = fr.lambda.size() - 1;
  const auto t_idx = log_time_indices(steps, opt.n_t);
  const double scale = std::isfinite(support_end(d)) ? support_end(d) : 1.0;
  const auto h_grid = log_space(1e-4 * scale, scale, opt.n_h);
  EnvelopeConstants consts;

  if (const auto* pw = std::get_if<PiecewiseGeometricDensity>(&d)) {
    rep.piecewise = true;
    rep.beta1 = pw->beta1();
    rep.beta2 = pw->beta2();
    rep.admissible_4_4 = pw->admissible();
    const auto sl = compute_L(*pw);
    rep.rho = sl.rho;
    rep.L = sl.L;
    rep.L_below_one = sl.below_one;
    rep.sup_ratio = bruteforce_sup_ratio(*pw, opt.grid_y, opt.grid_h, opt.band_cap);
    rep.small_time = small_time_margin(fr, d, pw->alpha2());
    if (rep.admissible_4_4) {
      const auto x_grid = log_space(1e-4 * pw->a1(), pw->a1(), opt.n_x);
      rep.beta_slope = estimate_beta_slope(fr, d, t_idx, x_grid, opt.n_paths, opt.seed);
      if (rep.beta_slope.value < 1.0) {
        const auto c = compute_sqrt_constants(*pw, rep.beta_slope.value);
        rep.c1 = c.c1;
        rep.c2 = c.c2;
        rep.c3 = c.c3;
        consts = {c.c1, c.c2, c.c3};
        rep.prob_G = estimate_prob_in_G(fr, *pw, c.c3, t_idx, opt.n_paths, opt.seed + 1);
        MarginAccumulator win, pg;
        for (const auto& row : rep.prob_G.rows) {
          win.add(row.band.lhs - row.band.rhs, std::hypot(row.band.lhs_se, row.band.rhs_se), row.t);
          pg.add(row.prob_G - rep.prob_G.threshold, row.prob_G_se, row.t);
        }
        rep.window = win.m;
        rep.probG = pg.m;
      } else {
        consts.c1 = pw->beta1() * kMeanAbsNormal;
        consts.c2 = pw->alpha2() * kMeanAbsNormal / (1.0 - pw->beta2());
        rep.c1 = *consts.c1;
        rep.c2 = *consts.c2;
      }
    }
  }

  std::optional<EnvelopeFunction> g;
  if (!rep.piecewise) {
    const auto cond = check_averaging_condition(d, opt.lambda0);
    if (cond.holds_1_7) g = cond.envelope();
  }
  rep.envelopes = verify_frontier_envelopes(fr, consts, g ? &*g : nullptr);
  if (g) {
    for (std::size_t k = 0; k <= steps; ++k) {
      try {
        rep.chi_bar_values.push_back(chi_bar(*g, fr.t[k]));
        rep.chi_bar_t.push_back(fr.t[k]);
      } catch (const std::out_of_range&) {
        break;
      }
    }
  }
  rep.delta0 = estimate_delta0(fr, d, t_idx, h_grid, opt.n_paths, opt.seed + 2);
  return rep;
}

}  // namespace stefan
