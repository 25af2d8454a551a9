#include <cmath>
#include <limits>

#include "doctest.h"
#include "oracles.hpp"
#include "stefan/bounds.hpp"
#include "stefan/exact.hpp"

using namespace stefan;

namespace {

const PiecewiseGeometricDensity& pw() {
  static const auto d = make_piecewise(0.5, 1.05, 0.5, 0.5);
  return d;
}

exact::Params params(const char* a2) {
  return {Ratio::parse("1/2"), Ratio::parse(a2), Ratio::parse("1/2"), Ratio::parse("1/2")};
}

FrontierPath zero_frontier(std::size_t steps, double T, std::size_t n) {
  FrontierPath f;
  for (std::size_t k = 0; k <= steps; ++k) {
    f.t.push_back(T * static_cast<double>(k) / static_cast<double>(steps));
    f.lambda.push_back(0.0);
    f.alive_fraction.push_back(1.0);
  }
  f.sample_size = n;
  return f;
}

}  // namespace

TEST_CASE("slope bound L") {
  const auto s = compute_L(pw());
  CHECK(s.rho == 0.75);
  CHECK(s.L == doctest::Approx(0.94).epsilon(1e-13));
  CHECK(s.below_one);

  const auto e = exact::constants(params("21/20"));
  CHECK(e.L == "47/50");
  CHECK(e.threshold == "5/11");
  CHECK(e.L_below_one);
  CHECK(exact::quotient_at_rho_a3(params("21/20")) == "47/50");
  CHECK(exact::slope_sequence_nondecreasing(params("21/20"), 10));

  // alpha2 = 9/8: L = (9/16 + 1/16)/(5/8) = 1, not below one
  const auto nine = make_piecewise(0.5, 1.125, 0.5, 0.5);
  const oracle::Frac al1(1, 2), al2(9, 8), q(1, 2), rho(3, 4), one(1);
  const oracle::Frac L = ((one - q) * al2 + q * (one - rho) * al1) / (one - q * rho);
  CHECK(L == one);
  CHECK(compute_L(nine).L == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_FALSE(compute_L(nine).below_one);
  CHECK(exact::constants(params("9/8")).L == "1");
  CHECK_FALSE(exact::constants(params("9/8")).L_below_one);
  const oracle::Frac L21 = ((one - q) * oracle::Frac(21, 20) + q * (one - rho) * al1) / (one - q * rho);
  CHECK(L21 == oracle::Frac(47, 50));
}

TEST_CASE("brute-force difference quotient stays below L") {
  const double L = compute_L(pw()).L;
  const double s = bruteforce_sup_ratio(pw(), 400, 400);
  CHECK(s <= L + 1e-9);
  CHECK(s >= L - 0.01);
  CHECK(in_good_set(pw(), pw().endpoint(4) * 1.01));
  CHECK_FALSE(in_good_set(pw(), 0.8 * pw().endpoint(3)));
  CHECK(in_good_set(pw(), 0.5 * (pw().endpoint(1) + pw().endpoint(2))));
}

TEST_CASE("square-root constants") {
  const double r = oracle::kMeanAbsNormal;
  const auto c = compute_sqrt_constants(pw(), 0.0);
  CHECK(c.c1 == doctest::Approx(41.0 / 60.0 * r).epsilon(1e-13));
  CHECK(c.c1 == doctest::Approx(0.54522).epsilon(1e-4));
  CHECK(c.c2 == doctest::Approx(1.05 * r / (1.0 - 13.0 / 15.0)).epsilon(1e-13));
  CHECK(c.c2 == doctest::Approx(6.2834).epsilon(1e-4));
  CHECK(c.c3 == doctest::Approx(1.05 * r).epsilon(1e-13));
  CHECK(compute_sqrt_constants(pw(), 0.5).c3 == doctest::Approx(2.1 * r).epsilon(1e-13));
  CHECK_THROWS_AS(compute_sqrt_constants(pw(), 1.0), std::domain_error);
  CHECK_THROWS_AS(compute_sqrt_constants(make_piecewise(0.5, 1.5, 0.5, 0.5), 0.0), std::domain_error);
}

TEST_CASE("envelope margins catch a frontier that is too low") {
  const auto z = zero_frontier(100, 0.01, 10'000);
  EnvelopeConstants c;
  c.c1 = 0.5;
  c.c2 = 6.0;
  c.c3 = 1.0;
  const auto m = verify_frontier_envelopes(z, c);
  CHECK(m.lower.evaluated);
  CHECK_FALSE(m.lower.pass);
  CHECK(m.lower.value < 0);
  CHECK(m.upper.pass);
  CHECK(m.holder.pass);
  CHECK_FALSE(m.chi_bar.evaluated);

  auto big = z;
  for (std::size_t k = 1; k < big.lambda.size(); ++k) big.lambda[k] = 1.0;
  const auto u = verify_frontier_envelopes(big, c);
  CHECK_FALSE(u.upper.pass);
  CHECK_FALSE(u.holder.pass);
}

TEST_CASE("running-max probabilities") {
  const auto z = zero_frontier(400, 0.04, 200'000);
  // degenerate window
  const auto rows = estimate_window_bound(z, 1.0, {{400, 0.7, 0.7}, {400, 1.0, std::numeric_limits<double>::infinity()}},
                                     200'000, 3);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].rhs == 0.0);
  CHECK(rows[0].lhs <= 3 * rows[0].lhs_se + 1e-12);
  // sup of -B over [0, t] beyond sqrt t: P(|N| >= 1)
  CHECK(rows[1].prob_abs_normal == doctest::Approx(oracle::kProbAbsNormalGe1).epsilon(1e-12));
  CHECK(std::abs(rows[1].lhs - oracle::kProbAbsNormalGe1) < 3 * rows[1].lhs_se + 1e-3);

  // U with zero drift is |N|
  const auto u = sample_U(0.0, 100'000, 11);
  CHECK(std::is_sorted(u.begin(), u.end()));
  CHECK(u.front() >= 0.0);
  const double se = std::sqrt(oracle::variance(u) / 1e5);
  CHECK(std::abs(oracle::mean(u) - oracle::kMeanAbsNormal) < 3 * se + 2e-3);
  const auto u3 = sample_U(1.0, 20'000, 11);
  for (std::size_t i = 0; i < u3.size(); i += 97) CHECK(u3[i] >= u[i * 5] - 10.0);  // crude sanity
  CHECK(oracle::mean(u3) > oracle::mean(u));
}

TEST_CASE("delta0 for the uniform density") {
  // F(x) = x/2 on [0,2]: every difference quotient is at most 1/2
  const auto z = zero_frontier(100, 0.01, 50'000);
  const auto r = estimate_delta0(z, uniform_density(0.0, 2.0), log_time_indices(100, 5), {0.01, 0.1, 0.5}, 50'000, 4);
  CHECK(r.delta0_hat <= 0.5 + 3 * r.se + 1e-12);
  CHECK(r.delta0_hat >= 0.45);
  CHECK(r.ratio.size() == r.t_grid.size() * r.h_grid.size());
}

TEST_CASE("log time indices") {
  const auto v = log_time_indices(500, 10);
  REQUIRE_FALSE(v.empty());
  CHECK(v.front() >= 1);
  CHECK(v.back() == 500);
  CHECK(std::is_sorted(v.begin(), v.end()));
  CHECK(std::adjacent_find(v.begin(), v.end()) == v.end());
}

TEST_CASE("beta slope of a linear cdf") {
  // F(x) = x/2 on [0,2] and Lambda = 0: with Z ~ N(0, t),
  // E[F(Z + x) - F(Z)] / x = (1/2x) int_0^x Phi(u / sqrt t) du  (Z > 2 - x is negligible)
  const auto z = zero_frontier(100, 0.01, 20'000);
  const std::vector<double> xs{0.01, 0.1};
  const auto b = estimate_beta_slope(z, uniform_density(0.0, 2.0), {50, 100}, xs, 20'000, 6);
  auto exact = [](double t, double x) {
    const double s = std::sqrt(t);
    return 0.5 / x * oracle::riemann([&](double u) { return 0.5 * std::erfc(-u / (s * std::sqrt(2.0))); }, 0.0, x, 20'000);
  };
  double best = 0;
  for (double t : {0.005, 0.01}) {
    for (double x : xs) best = std::max(best, exact(t, x));
  }
  CHECK(std::abs(b.value - exact(b.t, b.x)) < 3 * b.se + 1e-9);
  CHECK(std::abs(b.value - best) < 3 * b.se + 1e-9);
  CHECK(b.value < 0.5);
}
