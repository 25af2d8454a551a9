#include "stefan/densities.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "stefan/geometric_bands.hpp"
#include "stefan/rng.hpp"

namespace stefan {

// Ratio

std::string Ratio::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

namespace {

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
  }
  return v;
}

Ratio reduced(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  return g > 1 ? Ratio{num / g, den / g} : Ratio{num, den};
}

}  // namespace

Ratio Ratio::parse(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) throw std::invalid_argument("empty rational literal");
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    return reduced(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
  }
  if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    const auto frac = text.substr(dot + 1);
    if (frac.size() > 15) throw std::invalid_argument("too many decimals: '" + std::string(text) + "'");
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    std::string digits(text.substr(0, dot));
    digits += frac;
    return reduced(parse_int(digits), den);
  }
  return {parse_int(text), 1};
}

// PiecewiseGeometricDensity

PiecewiseGeometricDensity PiecewiseGeometricDensity::make(const ExactParams& exact) {
  auto d = make(exact.alpha1.value(), exact.alpha2.value(), exact.p.value(), exact.q.value());
  d.exact_ = exact;
  return d;
}

PiecewiseGeometricDensity PiecewiseGeometricDensity::make(double alpha1, double alpha2, double p,
                                                          double q) {
  if (!(alpha1 > 0.0 && alpha1 < 1.0)) throw std::invalid_argument("alpha1 must lie in (0,1)");
  if (!(alpha2 > 1.0 && std::isfinite(alpha2))) throw std::invalid_argument("alpha2 must exceed 1");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0,1)");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("q must lie in (0,1)");

  PiecewiseGeometricDensity d;
  d.alpha1_ = alpha1;
  d.alpha2_ = alpha2;
  d.p_ = p;
  d.q_ = q;
  const GeometricBands<double> bands{alpha1, alpha2, p, q, 1.0};
  d.beta1_ = bands.beta1();
  d.beta2_ = bands.beta2();
  d.admissible_ = bands.admissible();
  d.a1_ = 1.0 / d.beta1_;

  // Descending endpoints a_1 > a_2 > ... down to the first odd endpoint
  // below 1e-60 a_1. The core beneath carries the sliver level beta1, which
  // reproduces the telescoped mass beta1 * a_{2N+1} exactly. 1e-14 was too
  // shallow: band scans at n = 30 reach 4^-30 a_1.
  const double cutoff = 1e-60 * d.a1_;
  std::vector<double> desc{d.a1_};
  std::size_t n = 1;
  for (;; ++n) {
    const double even = d.endpoint(2 * n);
    const double odd = d.endpoint(2 * n + 1);
    desc.push_back(even);
    desc.push_back(odd);
    if (odd < cutoff) break;
  }
  d.bands_ = n;

  d.nodes_.assign(desc.rbegin(), desc.rend());
  d.nodes_.insert(d.nodes_.begin(), 0.0);
  d.levels_.resize(d.nodes_.size() - 1);
  d.cdf_nodes_.resize(d.nodes_.size());
  d.levels_[0] = d.beta1_;
  d.cdf_nodes_[0] = 0.0;
  // nodes_[1] is the innermost odd endpoint; parity alternates upward.
  for (std::size_t i = 1; i < d.nodes_.size(); ++i) {
    const bool odd = (i % 2) == 1;
    d.cdf_nodes_[i] = (odd ? d.beta1_ : d.beta2_) * d.nodes_[i];
    if (i < d.levels_.size()) d.levels_[i] = odd ? alpha2 : alpha1;
  }
  d.cdf_nodes_.back() = 1.0;
  return d;
}

double PiecewiseGeometricDensity::endpoint(std::size_t k) const {
  if (k == 0) throw std::invalid_argument("band endpoints are indexed from 1");
  const std::size_t n = (k + 1) / 2;
  double x = a1_ * std::pow(r(), static_cast<double>(n - 1));
  if (k % 2 == 0) x *= p_;
  return x;
}

std::size_t PiecewiseGeometricDensity::segment_of(double x) const {
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  return static_cast<std::size_t>(std::distance(nodes_.begin(), it)) - 1;
}

double PiecewiseGeometricDensity::pdf(double x) const {
  if (x < 0.0 || x >= a1_) return 0.0;
  return levels_[segment_of(x)];
}

double PiecewiseGeometricDensity::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= a1_) return 1.0;
  const std::size_t i = segment_of(x);
  return std::min(cdf_nodes_[i] + levels_[i] * (x - nodes_[i]), cdf_nodes_[i + 1]);
}

double PiecewiseGeometricDensity::quantile(double u) const {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return a1_;
  const auto it = std::upper_bound(cdf_nodes_.begin(), cdf_nodes_.end(), u);
  const std::size_t i = static_cast<std::size_t>(std::distance(cdf_nodes_.begin(), it)) - 1;
  if (cdf_nodes_[i] == u) return nodes_[i];
  const double x = nodes_[i] + (u - cdf_nodes_[i]) / levels_[i];
  return std::clamp(x, nodes_[i], nodes_[i + 1]);
}

double PiecewiseGeometricDensity::max_pdf(double lo, double hi) const {
  double best = 0.0;
  lo = std::max(lo, 0.0);
  if (hi < lo) return 0.0;
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (nodes_[i] <= hi && nodes_[i + 1] > lo) best = std::max(best, levels_[i]);
  }
  return best;
}

double PiecewiseGeometricDensity::first_moment() const {
  double m = 0.0;
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    m += levels_[i] * 0.5 * (nodes_[i + 1] * nodes_[i + 1] - nodes_[i] * nodes_[i]);
  }
  return m;
}

// TabulatedDensity

TabulatedDensity TabulatedDensity::unnormalized(std::vector<double> x, std::vector<double> f) {
  if (x.size() != f.size()) throw std::invalid_argument("tabulated density: x and f differ in length");
  if (x.size() < 2) throw std::invalid_argument("tabulated density: need at least two nodes");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(f[i])) {
      throw std::invalid_argument("tabulated density: non-finite entry at row " + std::to_string(i));
    }
    if (f[i] < 0.0) throw std::invalid_argument("tabulated density: negative value at row " + std::to_string(i));
    if (i > 0 && !(x[i] > x[i - 1])) {
      throw std::invalid_argument("tabulated density: abscissae not strictly increasing at row " +
                                  std::to_string(i));
    }
  }
  if (x.front() < 0.0) throw std::invalid_argument("tabulated density: support must lie in [0, inf)");
  TabulatedDensity d;
  d.cdf_.resize(x.size());
  d.cdf_[0] = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    d.cdf_[i] = d.cdf_[i - 1] + 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
  }
  d.x_ = std::move(x);
  d.f_ = std::move(f);
  d.input_mass_ = d.cdf_.back();
  return d;
}

void TabulatedDensity::scale(double factor) {
  for (auto& v : f_) v *= factor;
  for (auto& v : cdf_) v *= factor;
}

TabulatedDensity TabulatedDensity::make(std::vector<double> x, std::vector<double> f) {
  auto d = unnormalized(std::move(x), std::move(f));
  if (!(d.input_mass_ > 0.0)) throw std::invalid_argument("tabulated density: zero total mass");
  d.scale(1.0 / d.input_mass_);
  d.cdf_.back() = 1.0;
  return d;
}

double TabulatedDensity::pdf(double x) const {
  if (x < x_.front() || x > x_.back()) return 0.0;
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  if (it == x_.end()) return f_.back();
  const std::size_t i = static_cast<std::size_t>(std::distance(x_.begin(), it)) - 1;
  const double t = (x - x_[i]) / (x_[i + 1] - x_[i]);
  return f_[i] + t * (f_[i + 1] - f_[i]);
}

double TabulatedDensity::cdf(double x) const {
  if (x <= x_.front()) return 0.0;
  if (x >= x_.back()) return cdf_.back();
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const std::size_t i = static_cast<std::size_t>(std::distance(x_.begin(), it)) - 1;
  const double d = x - x_[i];
  const double fx = f_[i] + d / (x_[i + 1] - x_[i]) * (f_[i + 1] - f_[i]);
  return std::clamp(cdf_[i] + 0.5 * d * (f_[i] + fx), cdf_[i], cdf_[i + 1]);
}

double TabulatedDensity::quantile(double u) const {
  if (u <= 0.0) return x_.front();
  u = std::min(u, cdf_.back());
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  const std::size_t k = static_cast<std::size_t>(std::distance(cdf_.begin(), it));
  if (k == 0) return x_.front();
  const std::size_t i = k - 1;
  const double h = x_[i + 1] - x_[i];
  const double slope = (f_[i + 1] - f_[i]) / h;
  const double delta = u - cdf_[i];
  // Root of f_i d + slope d^2 / 2 = delta in the cancellation-free form.
  const double disc = std::sqrt(std::max(0.0, f_[i] * f_[i] + 2.0 * slope * delta));
  const double denom = f_[i] + disc;
  const double d = denom > 0.0 ? 2.0 * delta / denom : 0.0;
  return x_[i] + std::clamp(d, 0.0, h);
}

double TabulatedDensity::max_pdf(double lo, double hi) const {
  if (hi < lo) return 0.0;
  double best = 0.0;
  if (lo < x_.front() || hi > x_.back()) best = 0.0;
  const double a = std::max(lo, x_.front());
  const double b = std::min(hi, x_.back());
  if (a > b) return best;
  best = std::max({best, pdf(a), pdf(b)});
  const auto first = std::upper_bound(x_.begin(), x_.end(), a);
  for (auto it = first; it != x_.end() && *it <= b; ++it) {
    best = std::max(best, f_[static_cast<std::size_t>(std::distance(x_.begin(), it))]);
  }
  return best;
}

double TabulatedDensity::first_moment() const {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
    const double a = x_[i], b = x_[i + 1];
    m += (b - a) / 6.0 * (a * (2.0 * f_[i] + f_[i + 1]) + b * (f_[i] + 2.0 * f_[i + 1]));
  }
  return m;
}

TabulatedDensity uniform_density(double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("uniform density: need lo < hi");
  const double level = 1.0 / (hi - lo);
  return TabulatedDensity::make({lo, hi}, {level, level});
}

// GaussianPathDensity

double GaussianPathDensity::envelope(double x, double hurst, double beta_lil) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return std::numeric_limits<double>::infinity();
  const double iterated = std::abs(std::log(std::abs(std::log(x))));
  return beta_lil * std::sqrt(std::pow(x, 2.0 * hurst) * iterated);
}

GaussianPathDensity GaussianPathDensity::build(double hurst, double beta_lil,
                                               std::size_t grid_size, std::uint64_t seed) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw std::invalid_argument("hurst must lie in (0,1)");
  if (grid_size < 2) throw std::invalid_argument("grid_size must be at least 2");
  const std::size_t n = grid_size - 1;  // nodes excluding x = 0
  std::vector<double> grid(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) grid[i] = static_cast<double>(i) / static_cast<double>(n);
  grid.back() = 1.0;

  Eigen::MatrixXd cov(n, n);
  const double two_h = 2.0 * hurst;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double x = grid[i + 1], y = grid[j + 1];
      const double c = 0.5 * (std::pow(x, two_h) + std::pow(y, two_h) - std::pow(std::abs(x - y), two_h));
      cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
      cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = c;
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("fBm covariance factorization failed (grid spacing " +
                             std::to_string(1.0 / static_cast<double>(n)) + ", hurst " +
                             std::to_string(hurst) + ")");
  }
  const CounterRng rng(seed);
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    z(static_cast<Eigen::Index>(i)) = rng.normal(StreamPurpose::gaussian_density, i, 0);
  }
  const Eigen::VectorXd s = llt.matrixL() * z;
  std::vector<double> path(grid_size, 0.0);
  for (std::size_t i = 0; i < n; ++i) path[i + 1] = s(static_cast<Eigen::Index>(i));
  return from_path(std::move(grid), std::move(path), hurst, beta_lil, seed);
}

GaussianPathDensity GaussianPathDensity::from_path(std::vector<double> grid, std::vector<double> path,
                                                   double hurst, double beta_lil, std::uint64_t seed) {
  if (grid.size() != path.size() || grid.size() < 2) {
    throw std::invalid_argument("gaussian path: grid and path must have equal length >= 2");
  }
  if (grid.front() != 0.0 || grid.back() != 1.0) {
    throw std::invalid_argument("gaussian path: grid must start at 0 and end at 1");
  }
  if (!(beta_lil > 0.0)) throw std::invalid_argument("gaussian path: beta_lil must be positive");
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double raw = 1.0 + path[i] - envelope(grid[i], hurst, beta_lil);
    values[i] = std::min(1.0, std::max(0.0, raw));
  }
  GaussianPathDensity d;
  d.core_ = TabulatedDensity::unnormalized(std::move(grid), std::move(values));
  d.path_ = std::move(path);
  d.hurst_ = hurst;
  d.beta_lil_ = beta_lil;
  d.seed_ = seed;
  const double core_mass = d.core_.input_mass();
  if (core_mass < 1.0) {
    d.tail_mass_ = 1.0 - core_mass;
  } else {
    d.core_.scale(1.0 / core_mass);
    d.tail_mass_ = 0.0;
    d.rescaled_ = true;
  }
  return d;
}

double GaussianPathDensity::pdf(double x) const {
  if (x < 0.0) return 0.0;
  if (x <= 1.0) return core_.pdf(x);
  return tail_mass_ * std::exp(-(x - 1.0));
}

double GaussianPathDensity::cdf(double x) const {
  if (x <= 1.0) return core_.cdf(x);
  return core_.cdf(1.0) + tail_mass_ * -std::expm1(-(x - 1.0));
}

double GaussianPathDensity::quantile(double u) const {
  const double core_total = core_.cdf(1.0);
  if (u <= core_total || tail_mass_ <= 0.0) return core_.quantile(u);
  if (u >= 1.0) return std::numeric_limits<double>::infinity();
  return 1.0 - std::log1p(-(u - core_total) / tail_mass_);
}

double GaussianPathDensity::max_pdf(double lo, double hi) const {
  double best = 0.0;
  if (lo <= 1.0) best = core_.max_pdf(lo, std::min(hi, 1.0));
  if (hi > 1.0) best = std::max(best, tail_mass_ * std::exp(-(std::max(lo, 1.0) - 1.0)));
  return best;
}

double GaussianPathDensity::first_moment() const { return core_.first_moment() + 2.0 * tail_mass_; }

GaussianPathDensity build_gaussian_path(double hurst, double beta_lil, std::size_t grid_size,
                                        std::uint64_t seed) {
  return GaussianPathDensity::build(hurst, beta_lil, grid_size, seed);
}

PiecewiseGeometricDensity make_piecewise(double alpha1, double alpha2, double p, double q) {
  return PiecewiseGeometricDensity::make(alpha1, alpha2, p, q);
}

// Variant dispatch

std::string_view family_name(const Density& d) {
  struct Visitor {
    std::string_view operator()(const PiecewiseGeometricDensity&) const { return "piecewise"; }
    std::string_view operator()(const PeriodicOscillatoryDensity&) const { return "periodic"; }
    std::string_view operator()(const GaussianPathDensity&) const { return "gaussian_path"; }
    std::string_view operator()(const TabulatedDensity&) const { return "tabulated"; }
  };
  return std::visit(Visitor{}, d);
}

double pdf(const Density& d, double x) {
  return std::visit([x](const auto& f) { return f.pdf(x); }, d);
}

double cdf(const Density& d, double x) {
  return std::visit([x](const auto& f) { return f.cdf(x); }, d);
}

double mass(const Density& d, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  return std::visit([lo, hi](const auto& f) { return f.mass(lo, hi); }, d);
}

double sample(const Density& d, double u) {
  return std::visit([u](const auto& f) { return f.quantile(u); }, d);
}

double max_pdf(const Density& d, double lo, double hi) {
  return std::visit([lo, hi](const auto& f) { return f.max_pdf(lo, hi); }, d);
}

double first_moment(const Density& d) {
  return std::visit([](const auto& f) { return f.first_moment(); }, d);
}

double support_end(const Density& d) {
  return std::visit([](const auto& f) { return f.support_end(); }, d);
}

}  // namespace stefan
