#include "stefan/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "stefan/numerics.hpp"
#include "stefan/parallel.hpp"

namespace stefan {

double psi(const Density& d, double lambda, double mu) {
  if (lambda <= 0.0) return pdf(d, 0.0);
  return mass(d, lambda * mu, lambda * (mu + 1.0)) / lambda;
}

std::vector<double> psi_row(const Density& d, double lambda, const std::vector<double>& mus) {
  std::vector<double> out(mus.size());
  if (lambda <= 0.0) {
    std::fill(out.begin(), out.end(), pdf(d, 0.0));
    return out;
  }
  std::vector<double> pts;
  pts.reserve(2 * mus.size());
  for (double mu : mus) {
    pts.push_back(lambda * mu);
    pts.push_back(lambda * (mu + 1.0));
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<double> cum(pts.size());
  cum[0] = mass(d, 0.0, pts[0]);
  for (std::size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + mass(d, pts[i - 1], pts[i]);
  auto at = [&](double x) {
    const auto it = std::lower_bound(pts.begin(), pts.end(), x);
    return cum[static_cast<std::size_t>(std::distance(pts.begin(), it))];
  };
  for (std::size_t j = 0; j < mus.size(); ++j) {
    out[j] = (at(lambda * (mus[j] + 1.0)) - at(lambda * mus[j])) / lambda;
  }
  return out;
}

constexpr std::size_t kMinSupSeeds = 4097, kMaxSupSeeds = 65537;

SupPsi sup_psi(const Density& d, double lambda, std::size_t seeds) {
  // Oscillating densities alias on a coarse mu grid; keep doubling while the
  // grid max still moves.
  seeds = std::max<std::size_t>(seeds, 3);
  auto mus = lin_space(0.0, 1.0, seeds);
  auto vals = psi_row(d, lambda, mus);
  if (lambda > 0.0) {
    double top = *std::max_element(vals.begin(), vals.end());
    while (seeds < kMaxSupSeeds) {
      const std::size_t next = 2 * seeds - 1;
      auto m2 = lin_space(0.0, 1.0, next);
      auto v2 = psi_row(d, lambda, m2);
      const double t2 = *std::max_element(v2.begin(), v2.end());
      mus = std::move(m2);
      vals = std::move(v2);
      seeds = next;
      const bool moved = t2 > top + 1e-13;
      top = t2;
      if (!moved && seeds >= kMinSupSeeds) break;
    }
  }
  SupPsi best{vals[0], mus[0]};
  for (std::size_t j = 1; j < seeds; ++j) {
    if (vals[j] > best.value) best = {vals[j], mus[j]};
  }
  if (lambda <= 0.0) return best;

  // Local maxima, best first; refine the top few.
  std::vector<std::size_t> peaks;
  for (std::size_t j = 0; j < seeds; ++j) {
    const bool left = j == 0 || vals[j] >= vals[j - 1];
    const bool right = j + 1 == seeds || vals[j] >= vals[j + 1];
    if (left && right) peaks.push_back(j);
  }
  std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
  peaks.resize(std::min<std::size_t>(peaks.size(), 3));
  for (std::size_t j : peaks) {
    const double lo = mus[j == 0 ? 0 : j - 1];
    const double hi = mus[std::min(j + 1, seeds - 1)];
    auto f = [&](double mu) { return psi(d, lambda, mu); };
    const double mu = golden_section_max(f, lo, hi, 1e-10, 80);
    const double v = f(mu);
    if (v > best.value) best = {v, mu};
  }
  return best;
}


EnvelopeFunction EnvelopeFunction::from_grid(std::vector<double> s, std::vector<double> g) {
  if (s.empty() || s.size() != g.size()) throw std::invalid_argument("envelope: s and g must be non-empty and equal length");
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (!(s[i] > s[i - 1])) throw std::invalid_argument("envelope: s grid not increasing");
    if (g[i] < g[i - 1]) throw std::invalid_argument("envelope: g decreases at index " + std::to_string(i));
  }
  EnvelopeFunction e;
  e.s_max_ = s.back();
  e.s_ = std::move(s);
  e.g_ = std::move(g);
  return e;
}

EnvelopeFunction EnvelopeFunction::from_function(std::function<double(double)> g, double s_max) {
  if (!g) throw std::invalid_argument("envelope: empty function");
  EnvelopeFunction e;
  e.fn_ = std::move(g);
  e.s_max_ = s_max;
  return e;
}

double EnvelopeFunction::operator()(double s) const {
  if (fn_) return fn_(s);
  if (s <= s_.front()) return g_.front();
  const auto it = std::upper_bound(s_.begin(), s_.end(), s);
  return g_[static_cast<std::size_t>(std::distance(s_.begin(), it)) - 1];
}

double g_tilde_inverse(const EnvelopeFunction& g, double y) {
  if (y < 0.0) throw std::invalid_argument("g_tilde_inverse: negative argument");
  if (y == 0.0) return 0.0;
  const double top = g.tilde(g.s_max());
  if (y > top) {
    throw std::out_of_range("g_tilde_inverse: " + std::to_string(y) + " outside the range [0, " +
                            std::to_string(top) + "] of s g(s) on [0, " + std::to_string(g.s_max()) + "]");
  }
  return bisect_increasing([&](double s) { return g.tilde(s) - y; }, 0.0, g.s_max(), 1e-13);
}

double chi_bar(const EnvelopeFunction& g, double t) {
  if (t < 0.0) throw std::invalid_argument("chi_bar: negative time");
  return g_tilde_inverse(g, kMeanAbsNormal * std::sqrt(t));
}


PointwiseResult check_pointwise_condition(const Density& d, double x_max, std::size_t windows) {
  PointwiseResult out;
  out.margin = std::numeric_limits<double>::infinity();
  double hi = x_max;
  for (std::size_t k = 0; k < windows; ++k, hi *= 0.5) {
    const double lo = 0.5 * hi;
    const double m = 1.0 - max_pdf(d, lo, hi);
    out.window_hi.push_back(hi);
    out.window_margin.push_back(m);
    out.margin = std::min(out.margin, m);
    if (m <= 1e-9 && !out.witness) {
      // Locate a point attaining the window sup.
      const auto xs = lin_space(lo, hi, 1025);
      std::size_t arg = 0;
      for (std::size_t i = 1; i < xs.size(); ++i) {
        if (pdf(d, xs[i]) > pdf(d, xs[arg])) arg = i;
      }
      const double a = xs[arg == 0 ? 0 : arg - 1];
      const double b = xs[std::min(arg + 1, xs.size() - 1)];
      const double x = golden_section_max([&](double v) { return pdf(d, v); }, a, b, 1e-15 * b, 200);
      out.witness = pdf(d, x) >= pdf(d, xs[arg]) ? x : xs[arg];
    }
  }
  out.holds = out.margin > 1e-9;
  return out;
}

MomentResult check_moment_condition(const Density& d) {
  MomentResult out;
  out.max_pdf = max_pdf(d, 0.0, support_end(d));
  out.f_le_1 = out.max_pdf <= 1.0 + 1e-12;
  out.first_moment = first_moment(d);
  return out;
}

ConditionReport check_averaging_condition(const Density& d, double lambda0_candidate,
                                          const ConditionGrids& grids) {
  if (!(lambda0_candidate > grids.lambda_min)) {
    throw std::invalid_argument("averaging check: lambda0 must exceed the smallest grid lambda");
  }
  ConditionReport rep;
  rep.lambda_grid = log_space(grids.lambda_min, lambda0_candidate, grids.n_lambda);
  rep.mu_grid = lin_space(0.0, 1.0, grids.n_mu);
  const std::size_t nl = rep.lambda_grid.size(), nm = rep.mu_grid.size();
  rep.psi_values.assign(nl * nm, 0.0);
  std::vector<SupPsi> sups(nl);

  parallel::for_each_chunk(nl, 1, [&](const parallel::Chunk& c) {
    const double lambda = rep.lambda_grid[c.begin];
    const auto row = psi_row(d, lambda, rep.mu_grid);
    std::copy(row.begin(), row.end(), rep.psi_values.begin() + static_cast<std::ptrdiff_t>(c.begin * nm));
    sups[c.begin] = sup_psi(d, lambda, grids.sup_seeds);
  });

  // Bin s = lambda (mu + 1) on a log grid; d(s) = 1 - worst psi in the bin.
  const double s_lo = rep.lambda_grid.front();
  rep.s_max = 2.0 * rep.lambda_grid.back();
  const auto edges = log_space(s_lo, rep.s_max, grids.n_s_bins + 1);
  std::vector<double> worst(grids.n_s_bins, -std::numeric_limits<double>::infinity());
  auto deposit = [&](double s, double v) {
    auto it = std::upper_bound(edges.begin(), edges.end(), s);
    std::size_t b = static_cast<std::size_t>(std::distance(edges.begin(), it));
    b = std::clamp<std::size_t>(b == 0 ? 0 : b - 1, 0, grids.n_s_bins - 1);
    worst[b] = std::max(worst[b], v);
  };

  std::size_t verified = 0;
  bool prefix_ok = true;
  for (std::size_t i = 0; i < nl; ++i) {
    const double lambda = rep.lambda_grid[i];
    for (std::size_t j = 0; j < nm; ++j) deposit(lambda * (rep.mu_grid[j] + 1.0), rep.psi_at(i, j));
    deposit(lambda * (sups[i].mu + 1.0), sups[i].value);
    rep.sup_psi_per_lambda.push_back(sups[i].value);
    rep.worst_psi.push_back({lambda, sups[i].mu, sups[i].value});
    prefix_ok = prefix_ok && sups[i].value < 1.0;
    if (prefix_ok) verified = i + 1;
  }
  rep.lambda0 = verified == 0 ? 0.0 : rep.lambda_grid[verified - 1];

  rep.s_grid.assign(edges.begin(), edges.end() - 1);
  rep.g_envelope.assign(grids.n_s_bins, 0.0);
  double run = std::numeric_limits<double>::infinity();
  for (std::size_t b = grids.n_s_bins; b-- > 0;) {
    if (std::isfinite(worst[b])) run = std::min(run, 1.0 - worst[b]);
    rep.g_envelope[b] = run;
  }
  rep.margin_1_7 = rep.g_envelope.front();
  rep.holds_1_7 = verified == nl && rep.margin_1_7 > 0.0;

  const auto pw = check_pointwise_condition(d, grids.pointwise_x_max, grids.pointwise_windows);
  rep.holds_1_5 = pw.holds;
  rep.margin_1_5 = pw.margin;
  rep.witness_1_5 = pw.witness;
  const auto mom = check_moment_condition(d);
  rep.holds_1_6 = mom.f_le_1 && std::isfinite(mom.first_moment);
  rep.margin_1_6 = 1.0 - mom.max_pdf;
  rep.first_moment = mom.first_moment;
  return rep;
}

}  // namespace stefan
