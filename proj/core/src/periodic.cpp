#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stefan/densities.hpp"
#include "stefan/numerics.hpp"

// Integrals of Psi(y^-alpha) are done in u = y^-alpha, where the integrand
// becomes Psi(u) u^-s with s = 1 + 1/alpha. Panels of quarter-period width
// cover u up to a cutoff; beyond it the tail comes from repeated integration
// by parts against zero-mean antiderivatives of Psi, which is exact up to a
// remainder of relative size ~1e-15.

namespace stefan {

namespace {

constexpr std::size_t kFinePerPeriod = 8192;

double wrap(double u, double period) {
  double t = std::fmod(u, period);
  if (t < 0.0) t += period;
  return t;
}

}  // namespace

PeriodicProfile PeriodicProfile::sine() {
  PeriodicProfile p;
  p.sine_ = true;
  p.period_ = 2.0 * kPi;
  p.mean_ = 0.0;
  p.max_ = 1.0;
  p.bounds_.assign(kLevels, 1.0);
  return p;
}

PeriodicProfile PeriodicProfile::tabulated(std::vector<double> samples, double period) {
  if (samples.empty()) throw std::invalid_argument("periodic profile: no samples");
  if (!(period > 0.0) || !std::isfinite(period)) throw std::invalid_argument("periodic profile: period must be positive");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(std::abs(samples[i]) <= 1.0)) {
      throw std::invalid_argument("periodic profile: sample " + std::to_string(i) + " outside [-1, 1]");
    }
  }
  PeriodicProfile p;
  p.period_ = period;
  p.samples_ = std::move(samples);
  double sum = 0.0;
  for (double v : p.samples_) sum += v;
  p.mean_ = sum / static_cast<double>(p.samples_.size());
  p.max_ = *std::max_element(p.samples_.begin(), p.samples_.end());
  p.constant_ = std::all_of(p.samples_.begin(), p.samples_.end(),
                            [&](double v) { return v == p.samples_.front(); });
  if (p.constant_) p.mean_ = p.samples_.front();
  p.build_tables();
  return p;
}

PeriodicProfile PeriodicProfile::constant(double value) { return tabulated({value}, 1.0); }

double PeriodicProfile::operator()(double u) const {
  if (sine_) return std::sin(u);
  const std::size_t n = samples_.size();
  if (n == 1) return samples_[0];
  const double t = wrap(u, period_) / period_ * static_cast<double>(n);
  const auto i = std::min(static_cast<std::size_t>(t), n - 1);
  const double frac = t - static_cast<double>(i);
  return samples_[i] + frac * (samples_[(i + 1) % n] - samples_[i]);
}

void PeriodicProfile::build_tables() {
  levels_.clear();
  bounds_.assign(kLevels, 0.0);
  if (constant_) return;
  const std::size_t m = std::max<std::size_t>(kFinePerPeriod, 16 * samples_.size());
  const double h = period_ / static_cast<double>(m);
  std::vector<double> prev(m + 1);
  for (std::size_t i = 0; i <= m; ++i) prev[i] = (*this)(static_cast<double>(i) * h) - mean_;
  for (std::size_t level = 0; level < kLevels; ++level) {
    std::vector<double> cur(m + 1, 0.0);
    for (std::size_t i = 1; i <= m; ++i) cur[i] = cur[i - 1] + 0.5 * h * (prev[i] + prev[i - 1]);
    double avg = 0.0;
    for (std::size_t i = 0; i < m; ++i) avg += 0.5 * (cur[i] + cur[i + 1]);
    avg /= static_cast<double>(m);
    double bound = 0.0;
    for (auto& v : cur) {
      v -= avg;
      bound = std::max(bound, std::abs(v));
    }
    bounds_[level] = bound;
    levels_.push_back(cur);
    prev = std::move(cur);
  }
}

double PeriodicProfile::antiderivative(std::size_t level, double u) const {
  if (sine_) {
    switch (level % 4) {
      case 0: return -std::cos(u);
      case 1: return -std::sin(u);
      case 2: return std::cos(u);
      default: return std::sin(u);
    }
  }
  if (constant_) return 0.0;
  const auto& table = levels_.at(level);
  const std::size_t m = table.size() - 1;
  const double t = wrap(u, period_) / period_ * static_cast<double>(m);
  const auto i = std::min(static_cast<std::size_t>(t), m - 1);
  const double frac = t - static_cast<double>(i);
  return table[i] + frac * (table[i + 1] - table[i]);
}

namespace {

struct OscillatoryIntegral {
  const PeriodicProfile& profile;
  double s;
  double cutoff;

  OscillatoryIntegral(const PeriodicProfile& p, double exponent) : profile(p), s(exponent) {
    constexpr auto levels = PeriodicProfile::kLevels;
    double c = 1.0;
    for (std::size_t j = 0; j < levels; ++j) c *= s + static_cast<double>(j);
    const double b = std::max(profile.antiderivative_bound(levels - 1), 1e-300);
    const double need = c * b / (s + static_cast<double>(levels) - 1.0) * 1e15;
    cutoff = std::max(std::pow(need, 1.0 / static_cast<double>(levels - 1)),
                      4.0 * static_cast<double>(levels) * profile.period());
  }

  // int_U^inf (Psi(u) - mean) u^-s du
  double tail(double u) const {
    if (std::isinf(u)) return 0.0;
    double sum = 0.0, c = 1.0, pw = std::pow(u, -s);
    for (std::size_t j = 0; j < PeriodicProfile::kLevels; ++j) {
      sum -= c * profile.antiderivative(j, u) * pw;
      c *= s + static_cast<double>(j);
      pw /= u;
    }
    return sum;
  }

  double numeric(double a, double b) const {
    const double m = profile.mean();
    const double ks = profile.knot_spacing();
    double total = 0.0;
    double lo = a;
    while (lo < b) {
      double next = (std::floor(lo / ks) + 1.0) * ks;
      if (next <= lo + 1e-9 * ks) next += ks;  // lo sat on a knot up to rounding
      next = std::min({next, lo * 1.5, b});
      total += gauss_legendre([&](double u) { return (profile(u) - m) * std::pow(u, -s); }, lo, next);
      lo = next;
    }
    return total;
  }

  // int_A^B (Psi(u) - mean) u^-s du for 0 < A <= B <= inf
  double operator()(double a, double b) const {
    if (profile.is_constant() || !(b > a)) return 0.0;
    if (a >= cutoff) return tail(a) - tail(b);
    if (b <= cutoff) return numeric(a, b);
    return numeric(a, cutoff) + tail(cutoff) - tail(b);
  }
};

double u_of(double x, double alpha) {
  return x <= 0.0 ? std::numeric_limits<double>::infinity() : std::pow(x, -alpha);
}

}  // namespace

double PeriodicOscillatoryDensity::raw_mass(double alpha, const PeriodicProfile& profile, double lo,
                                            double hi) {
  lo = std::max(lo, 0.0);
  if (!(hi > lo)) return 0.0;
  const OscillatoryIntegral k(profile, 1.0 + 1.0 / alpha);
  const double osc = k(u_of(hi, alpha), u_of(lo, alpha)) / alpha;
  return 0.5 * (hi - lo) + 0.5 * (profile.mean() * (hi - lo) + osc);
}

double normalize_periodic(double alpha, const PeriodicProfile& profile) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("periodic density: alpha must be positive");
  using P = PeriodicOscillatoryDensity;
  double hi = 1.0;
  int expansions = 0;
  while (P::raw_mass(alpha, profile, 0.0, hi) < 1.0) {
    hi *= 2.0;
    if (++expansions > 60) throw std::runtime_error("periodic density: no support endpoint below 2^60");
  }
  double lo = hi / 2.0;
  if (expansions == 0) {
    lo = 0.0;
  }
  return bisect_increasing([&](double x) { return P::raw_mass(alpha, profile, 0.0, x) - 1.0; }, lo, hi,
                           1e-15 * hi, 200);
}

PeriodicOscillatoryDensity PeriodicOscillatoryDensity::make(double alpha, PeriodicProfile profile) {
  PeriodicOscillatoryDensity d;
  d.alpha_ = alpha;
  d.a_ = normalize_periodic(alpha, profile);
  d.profile_ = std::move(profile);

  // CDF table for bracketing quantiles: log-spaced near 0, uniform further out.
  std::vector<double> xs = log_space(1e-12 * d.a_, d.a_, 2048);
  for (double x : lin_space(0.0, d.a_, 2049)) {
    if (x > 0.0) xs.push_back(x);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  xs.back() = d.a_;
  d.table_x_ = xs;
  d.table_cdf_.resize(xs.size());
  double acc = raw_mass(alpha, d.profile_, 0.0, xs[0]);
  d.table_cdf_[0] = acc;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    acc += raw_mass(alpha, d.profile_, xs[i - 1], xs[i]);
    d.table_cdf_[i] = acc;
  }
  d.table_cdf_.back() = 1.0;
  return d;
}

double PeriodicOscillatoryDensity::pdf(double x) const {
  if (x < 0.0 || x > a_) return 0.0;
  if (x == 0.0) return 0.5 * (1.0 + profile_.mean());
  return 0.5 * (1.0 + profile_(std::pow(x, -alpha_)));
}

double PeriodicOscillatoryDensity::mass(double lo, double hi) const {
  lo = std::max(lo, 0.0);
  hi = std::min(hi, a_);
  if (!(hi > lo)) return 0.0;
  if (lo == 0.0 && hi == a_) return 1.0;
  return raw_mass(alpha_, profile_, lo, hi);
}

double PeriodicOscillatoryDensity::quantile(double u) const {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return a_;
  const auto it = std::lower_bound(table_cdf_.begin(), table_cdf_.end(), u);
  const std::size_t i = static_cast<std::size_t>(std::distance(table_cdf_.begin(), it));
  const double node = i == 0 ? 0.0 : table_x_[i - 1];
  const double base = i == 0 ? 0.0 : table_cdf_[i - 1];
  double lo = node, hi = table_x_[std::min(i, table_x_.size() - 1)];
  // Safeguarded Newton on base + mass(node, x) = u.
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double g = base + raw_mass(alpha_, profile_, node, x) - u;
    if (g == 0.0) return x;
    if (g > 0.0) hi = x; else lo = x;
    const double f = pdf(x);
    double next = f > 0.0 ? x - g / f : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * x || hi - lo <= 1e-15 * hi) return next;
    x = next;
  }
  return x;
}

double PeriodicOscillatoryDensity::max_pdf(double lo, double hi) const {
  lo = std::max(lo, 0.0);
  hi = std::min(hi, a_);
  if (hi < lo) return 0.0;
  if (lo == 0.0) return 0.5 * (1.0 + profile_.max());
  const double u1 = std::pow(hi, -alpha_), u2 = std::pow(lo, -alpha_);
  const double period = profile_.period();
  if (u2 - u1 >= period) return 0.5 * (1.0 + profile_.max());
  double best = std::max(profile_(u1), profile_(u2));
  if (profile_.is_sine()) {
    const double k = std::ceil((u1 - 0.5 * kPi) / period);
    if (0.5 * kPi + k * period <= u2) best = 1.0;
  } else {
    const double ks = profile_.knot_spacing();
    for (double k = std::ceil(u1 / ks); k * ks <= u2; k += 1.0) best = std::max(best, profile_(k * ks));
  }
  return 0.5 * (1.0 + best);
}

double PeriodicOscillatoryDensity::first_moment() const {
  const OscillatoryIntegral k(profile_, 1.0 + 2.0 / alpha_);
  const double osc = k(std::pow(a_, -alpha_), std::numeric_limits<double>::infinity()) / alpha_;
  return 0.25 * a_ * a_ + 0.5 * (0.5 * profile_.mean() * a_ * a_ + osc);
}

}  // namespace stefan
