// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "ggrpo/quantiles.hpp"
#include "oracle.hpp"

using ggrpo::SortedSample;

namespace {

double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

TEST_CASE("normal_cdf: pinned values") {
  CHECK(ggrpo::normal_cdf(0.0) == 0.5);
  CHECK(ggrpo::normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-6));
  CHECK(ggrpo::normal_cdf(-1.959964) == doctest::Approx(0.025).epsilon(1e-6));
  CHECK_THROWS_AS(ggrpo::normal_cdf(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(ggrpo::normal_cdf(INFINITY), std::domain_error);
}

TEST_CASE("normal_cdf: absolute error vs bisection oracle below 1e-12") {
  std::mt19937_64 rng(42);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = -8.0 + 16.0 * uniform01(rng);
    const double got = ggrpo::normal_cdf(x);
    const double want = double(oracle::normal_cdf_ld((long double)x));
    worst = std::max(worst, std::fabs(got - want));
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("erf: absolute error below 1e-14 across the series/fraction split") {
  std::mt19937_64 rng(43);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double x = -6.0 + 12.0 * uniform01(rng);
    worst = std::max(worst, std::fabs(ggrpo::erf(x) - double(oracle::erf_ld(x))));
  }
  // probe the branch boundary explicitly
  for (double x : {2.999999, 3.0, 3.000001, -3.0}) {
    worst = std::max(worst, std::fabs(ggrpo::erf(x) - double(oracle::erf_ld(x))));
  }
  CHECK(worst <= 1e-14);
  CHECK(ggrpo::erf(0.0) == 0.0);
  CHECK(ggrpo::erfc(0.0) == 1.0);
}

TEST_CASE("normal_quantile: pinned values and domain errors") {
  CHECK(ggrpo::normal_quantile(0.5) == 0.0);
  CHECK(ggrpo::normal_quantile(0.875) == doctest::Approx(1.150349).epsilon(1e-5));
  CHECK(ggrpo::normal_quantile(0.125) == doctest::Approx(-1.150349).epsilon(1e-5));
  // frozen from the bisection oracle
  CHECK(ggrpo::normal_quantile(0.875) ==
        doctest::Approx(1.1503493803760081783).epsilon(1e-12));
  CHECK_THROWS_AS(ggrpo::normal_quantile(0.0), std::domain_error);
  CHECK_THROWS_AS(ggrpo::normal_quantile(1.0), std::domain_error);
  CHECK_THROWS_AS(ggrpo::normal_quantile(-0.25), std::domain_error);
  CHECK_THROWS_AS(ggrpo::normal_quantile(std::nan("")), std::domain_error);
}

TEST_CASE("normal_quantile: round trip within 1e-10") {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double p = 1e-6 + (1.0 - 2e-6) * uniform01(rng);
    const double x = ggrpo::normal_quantile(p);
    worst = std::max(worst, std::fabs(ggrpo::normal_cdf(x) - p));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("normal_quantile: antisymmetry") {
  // dyadic probabilities make 1-p exact, isolating the function's own symmetry
  for (int kk = 1; kk < 4096; ++kk) {
    const double p = double(kk) / 4096.0;
    const double a = ggrpo::normal_quantile(p);
    const double b = ggrpo::normal_quantile(1.0 - p);
    if (kk == 2048) {
      CHECK(std::fabs(a) <= 1e-15);
    } else {
      CHECK(std::fabs(a + b) <= 1e-12 * std::fabs(a));
    }
  }
  // random probabilities away from the extreme tails
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const double p = 1e-4 + (1.0 - 2e-4) * uniform01(rng);
    const double a = ggrpo::normal_quantile(p);
    const double b = ggrpo::normal_quantile(1.0 - p);
    CHECK(std::fabs(a + b) <= 1e-12 * std::max(std::fabs(a), 1.0));
  }
}

TEST_CASE("normal_quantile: strictly increasing") {
  std::mt19937_64 rng(13);
  std::vector<double> ps;
  for (int i = 0; i < 500; ++i) ps.push_back(1e-8 + (1.0 - 2e-8) * uniform01(rng));
  std::sort(ps.begin(), ps.end());
  for (std::size_t i = 1; i < ps.size(); ++i) {
    if (ps[i] == ps[i - 1]) continue;
    CHECK(ggrpo::normal_quantile(ps[i - 1]) < ggrpo::normal_quantile(ps[i]));
  }
}

TEST_CASE("standard_normal_quantiles: mirrored grid, zero total") {
  for (std::size_t n : {std::size_t(2), std::size_t(5), std::size_t(8), std::size_t(33)}) {
    std::vector<double> q(n);
    ggrpo::standard_normal_quantiles(q);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(q[i] == -q[n - 1 - i]);  // bitwise mirror
      CHECK(std::fabs(q[i] - oracle::quantile_grid(n)[i]) <= 1e-12);
    }
    if (n % 2 == 1) CHECK(q[n / 2] == 0.0);
  }
}

TEST_CASE("SortedSample: construction guards") {
  CHECK_THROWS_AS(SortedSample::from_unsorted({}), std::domain_error);
  CHECK_THROWS_AS(SortedSample::from_unsorted({1.0, std::nan("")}), std::domain_error);
  CHECK_THROWS_AS(SortedSample::from_unsorted({1.0, INFINITY}), std::domain_error);
  CHECK_THROWS_AS(SortedSample::from_sorted({2.0, 1.0}), std::domain_error);
  const auto s = SortedSample::from_unsorted({3.0, 1.0, 2.0});
  CHECK(s.values()[0] == 1.0);
  CHECK(s.values()[2] == 3.0);
}

TEST_CASE("empirical_cdf: mid-rank convention") {
  const auto a = SortedSample::from_unsorted({1, 2, 3, 4});
  CHECK(ggrpo::empirical_cdf(a, 3.0) == doctest::Approx(0.625));
  const auto b = SortedSample::from_unsorted({5});
  CHECK(ggrpo::empirical_cdf(b, 5.0) == doctest::Approx(0.5));
  // tied pair: mean of ranks 1,2 -> (1.5 - 0.5)/4
  const auto c = SortedSample::from_unsorted({0, 0, 1, 1});
  CHECK(ggrpo::empirical_cdf(c, 0.0) == doctest::Approx(0.25));
  CHECK(ggrpo::empirical_cdf(c, 1.0) == doctest::Approx(0.75));
  // off-sample probes
  CHECK(ggrpo::empirical_cdf(c, -10.0) == 0.0);
  CHECK(ggrpo::empirical_cdf(c, 10.0) == 1.0);
  CHECK(ggrpo::empirical_cdf(c, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("wasserstein2_to_normal: exact target quantiles give zero") {
  for (std::size_t n : {std::size_t(4), std::size_t(17), std::size_t(64)}) {
    std::vector<double> q(n);
    ggrpo::standard_normal_quantiles(q);
    const auto s = SortedSample::from_sorted(q);
    CHECK(ggrpo::wasserstein2_to_normal(s) <= 1e-10);
  }
}

TEST_CASE("wasserstein2_to_normal: all-zero sample, value from the oracle") {
  const auto s = SortedSample::from_unsorted({0.0, 0.0, 0.0, 0.0});
  const double got = ggrpo::wasserstein2_to_normal(s);
  // rms of the N=4 oracle quantiles: 0.84404820395493038
  CHECK(got == doctest::Approx(0.84404820395493038).epsilon(1e-9));
  double rms = 0.0;
  for (double q : oracle::quantile_grid(4)) rms += q * q;
  CHECK(got == doctest::Approx(std::sqrt(rms / 4.0)).epsilon(1e-12));
}

TEST_CASE("wasserstein2_to_normal: non-negative under shifts") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(16);
    for (double& x : v) x = -2.0 + 4.0 * uniform01(rng);
    const double shift = -5.0 + 10.0 * uniform01(rng);
    for (double& x : v) x += shift;
    CHECK(ggrpo::wasserstein2_to_normal(SortedSample::from_unsorted(v)) >= 0.0);
  }
}

TEST_CASE("wasserstein2_to_normal: shrinks with sample size for normal draws") {
  // inverse-CDF sampling keeps the draw path deterministic
  auto mean_w2 = [](std::size_t n, std::uint64_t seed0) {
    double total = 0.0;
    constexpr int kSeeds = 20;
    for (int s = 0; s < kSeeds; ++s) {
      std::mt19937_64 rng(seed0 + std::uint64_t(s));
      std::vector<double> draws(n);
      for (double& d : draws) {
        double u = uniform01(rng);
        while (u <= 0.0) u = uniform01(rng);
        d = ggrpo::normal_quantile(u);
      }
      total += ggrpo::wasserstein2_to_normal(SortedSample::from_unsorted(draws));
    }
    return total / kSeeds;
  };
  CHECK(mean_w2(64, 100) > mean_w2(1024, 100));
}
