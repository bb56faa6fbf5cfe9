// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "ggrpo/advantage.hpp"
#include "oracle.hpp"

using namespace ggrpo;

namespace {

double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

RolloutGroup make_group(std::vector<double> rewards, std::string task = "t") {
  RolloutGroup g;
  g.task_id = std::move(task);
  g.query_id = "q";
  g.rewards = std::move(rewards);
  g.response_lengths.assign(g.rewards.size(), 1);
  return g;
}

std::vector<double> random_rewards(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> r(n);
  for (double& x : r) x = uniform01(rng);
  return r;
}

}  // namespace

TEST_CASE("grpo_advantage: worked examples") {
  const auto a = grpo_advantage(make_group({1, 0, 1, 0}), 1e-6);
  CHECK(a.values[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(a.values[1] == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(a.values[2] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(a.values[3] == doctest::Approx(-1.0).epsilon(1e-4));

  const auto b = grpo_advantage(make_group({0.3, 0.3, 0.3, 0.3, 0.3}), 1e-6);
  for (double v : b.values) CHECK(std::fabs(v) <= 1e-9);

  // unbounded outlier under linear scaling: mu=25, sigma=25*sqrt(3)
  const auto c = grpo_advantage(make_group({0, 0, 0, 100}), 1e-6);
  CHECK(c.values[0] == doctest::Approx(-0.57735).epsilon(1e-3));
  CHECK(c.values[3] == doctest::Approx(1.73205).epsilon(1e-3));

  double total = 0.0;
  for (double v : c.values) total += v;
  CHECK(std::fabs(total) <= 1e-10 * 4);
}

TEST_CASE("dr_grpo_advantage: centering only") {
  const auto a = dr_grpo_advantage(make_group({1, 0}));
  CHECK(a.values[0] == 0.5);
  CHECK(a.values[1] == -0.5);
  const auto b = dr_grpo_advantage(make_group({0, 0, 0, 100}));
  CHECK(b.values[0] == -25.0);
  CHECK(b.values[3] == 75.0);
  const auto c = dr_grpo_advantage(make_group({7.25, 7.25}));
  CHECK(c.values[0] == 0.0);
  CHECK(c.values[1] == 0.0);
}

TEST_CASE("ema_grpo_advantage: decay, bootstrap, and task guard") {
  // decay step forced by the recurrence
  {
    EmaState state{"t", 1.0, 0.9, true};
    auto [adv, next] = ema_grpo_advantage(make_group({1, 0}), state, 1e-6);
    CHECK(next.sigma == doctest::Approx(0.95).epsilon(1e-12));
  }
  // bootstrap: first observation sets sigma directly
  {
    EmaState state{"t", 0.0, 0.9, false};
    auto [adv, next] = ema_grpo_advantage(make_group({1, 0}), state, 1e-6);
    CHECK(next.sigma == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(next.initialized);
  }
  // hand evaluation with epsilon = 0
  {
    EmaState state{"t", 0.5, 0.5, true};
    auto [adv, next] = ema_grpo_advantage(make_group({1, 0}), state, 0.0);
    CHECK(next.sigma == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(adv.values[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(adv.values[1] == doctest::Approx(-1.0).epsilon(1e-12));
  }
  EmaState wrong{"other", 0.5, 0.9, true};
  CHECK_THROWS_AS(ema_grpo_advantage(make_group({1, 0}), wrong, 1e-6),
                  std::invalid_argument);
}

TEST_CASE("g_grpo_advantage: worked examples against the oracle") {
  const auto& grid4 = oracle::quantile_grid(4);

  const auto a = g_grpo_advantage(std::vector<double>{10, 20, 30, 40});
  for (int i = 0; i < 4; ++i)
    CHECK(a[std::size_t(i)] == doctest::Approx(grid4[std::size_t(i)]).epsilon(1e-3));
  CHECK(a[0] == doctest::Approx(-1.1503).epsilon(1e-3));
  CHECK(a[1] == doctest::Approx(-0.3186).epsilon(1e-3));

  // tie-averaging: the two lower / two upper quantiles collapse pairwise
  const auto b = g_grpo_advantage(std::vector<double>{0, 0, 1, 1});
  const double lower = 0.5 * (grid4[0] + grid4[1]);
  CHECK(b[0] == doctest::Approx(lower).epsilon(1e-9));
  CHECK(b[1] == b[0]);
  CHECK(b[2] == -b[0]);  // exact by the mirrored construction
  CHECK(b[3] == b[2]);
  CHECK(b[0] == doctest::Approx(-0.7345).epsilon(1e-3));

  // the outlier is capped at the top quantile no matter its magnitude
  const auto c = g_grpo_advantage(std::vector<double>{0, 0, 0, 1e9});
  const double low3 = (grid4[0] + grid4[1] + grid4[2]) / 3.0;
  CHECK(c[0] == doctest::Approx(low3).epsilon(1e-9));
  CHECK(c[0] == doctest::Approx(-0.3834).epsilon(1e-3));
  CHECK(c[3] == doctest::Approx(grid4[3]).epsilon(1e-9));
  CHECK(c[3] == doctest::Approx(1.1503).epsilon(1e-3));
}

TEST_CASE("g_grpo_advantage: guards") {
  CHECK_THROWS_AS(g_grpo_advantage(std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(g_grpo_advantage(std::vector<double>{1.0, std::nan("")}),
                  std::domain_error);
}

TEST_CASE("g_grpo_advantage: quantile exactness for distinct rewards") {
  std::mt19937_64 rng(2024);
  for (std::size_t n : {std::size_t(2), std::size_t(3), std::size_t(17), std::size_t(64)}) {
    auto rewards = random_rewards(rng, n);
    auto adv = g_grpo_advantage(rewards);
    std::sort(adv.begin(), adv.end());
    const auto& grid = oracle::quantile_grid(n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::fabs(adv[i] - grid[i]) <= 1e-9);
  }
}

TEST_CASE("g_grpo_advantage: zero-sum under arbitrary tie patterns") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + std::size_t(rng() % 40);
    std::vector<double> rewards(n);
    for (double& r : rewards) r = double(rng() % 5);  // heavy ties
    const auto adv = g_grpo_advantage(rewards);
    double total = 0.0;
    for (double a : adv) total += a;
    CHECK(std::fabs(total) <= 1e-10 * double(n));
  }
}

TEST_CASE("g_grpo_advantage: balanced binary rewards are exactly antisymmetric") {
  std::mt19937_64 rng(32);
  for (std::size_t k : {std::size_t(1), std::size_t(2), std::size_t(5), std::size_t(16)}) {
    std::vector<double> rewards(2 * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) rewards[i] = 1.0;
    std::shuffle(rewards.begin(), rewards.end(), rng);
    const auto adv = g_grpo_advantage(rewards);
    double pos = 0.0, neg = 0.0;
    for (std::size_t i = 0; i < rewards.size(); ++i)
      (rewards[i] == 1.0 ? pos : neg) = adv[i];
    CHECK(pos == -neg);  // bitwise
  }
  // full tie collapses to exactly zero
  const auto z = g_grpo_advantage(std::vector<double>{5, 5});
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);
}

TEST_CASE("g_grpo_advantage: invariance under strictly increasing maps") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + std::size_t(rng() % 30);
    const auto rewards = random_rewards(rng, n);
    const auto base = g_grpo_advantage(rewards);
    std::vector<double> mapped(n);
    for (std::size_t i = 0; i < n; ++i) mapped[i] = std::exp(3.0 * rewards[i]) - 2.0;
    const auto transformed = g_grpo_advantage(mapped);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::fabs(base[i] - transformed[i]) <= 1e-12);
  }
}

TEST_CASE("g_grpo_advantage: rank monotonicity and tie equality") {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + std::size_t(rng() % 20);
    std::vector<double> rewards(n);
    for (double& r : rewards) r = double(rng() % 7) * 0.5;
    const auto adv = g_grpo_advantage(rewards);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (rewards[i] < rewards[j]) CHECK(adv[i] < adv[j]);
        if (rewards[i] == rewards[j]) CHECK(adv[i] == adv[j]);
      }
  }
}

TEST_CASE("g_grpo_advantage: outlier cap") {
  std::mt19937_64 rng(35);
  const std::size_t n = 32;
  auto rewards = random_rewards(rng, n);
  const auto base = g_grpo_advantage(rewards);
  auto spiked = rewards;
  auto it = std::max_element(spiked.begin(), spiked.end());
  *it = 1e12;
  const auto capped = g_grpo_advantage(spiked);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(base[i] - capped[i]) <= 1e-12);
  const double top = *std::max_element(capped.begin(), capped.end());
  CHECK(top == doctest::Approx(oracle::quantile_grid(n).back()).epsilon(1e-9));
}

TEST_CASE("g_grpo_advantage: asymptotic unit variance, ties strictly below") {
  std::mt19937_64 rng(36);
  const std::size_t n = 1024;
  const auto rewards = random_rewards(rng, n);
  const auto adv = g_grpo_advantage(rewards);
  double mean_sq = 0.0;
  for (double a : adv) mean_sq += a * a;
  mean_sq /= double(n);
  CHECK(std::fabs(mean_sq - 1.0) <= 0.02);

  std::vector<double> coarse(n);
  for (std::size_t i = 0; i < n; ++i) coarse[i] = std::floor(rewards[i] * 10.0);
  const auto tied = g_grpo_advantage(coarse);
  double tied_sq = 0.0;
  for (double a : tied) tied_sq += a * a;
  tied_sq /= double(n);
  CHECK(tied_sq < mean_sq);
}

TEST_CASE("advantage_batch: dispatch and pooling") {
  std::map<std::string, EmaState> ema;

  // single group grpo == direct call
  const auto groups1 = std::vector<RolloutGroup>{make_group({1, 0, 2, 5})};
  const auto direct = grpo_advantage(groups1[0], 1e-6);
  const auto batched = advantage_batch(groups1, {Estimator::Grpo, true, 1e-6});
  CHECK(batched.size() == 1);
  for (std::size_t i = 0; i < 4; ++i) CHECK(batched[0].values[i] == direct.values[i]);

  // two same-task groups pool into one ranking of N=4
  const auto groups2 =
      std::vector<RolloutGroup>{make_group({0, 1}, "a"), make_group({2, 3}, "a")};
  const auto pooled = advantage_batch(groups2, {Estimator::GGrpo, true, 1e-6});
  const auto& grid4 = oracle::quantile_grid(4);
  CHECK(pooled[0].values[0] == doctest::Approx(grid4[0]).epsilon(1e-3));
  CHECK(pooled[0].values[1] == doctest::Approx(grid4[1]).epsilon(1e-3));
  CHECK(pooled[1].values[0] == doctest::Approx(grid4[2]).epsilon(1e-3));
  CHECK(pooled[1].values[1] == doctest::Approx(grid4[3]).epsilon(1e-3));

  // different tasks are normalized independently; labels swap -> outputs swap
  const auto groups3 =
      std::vector<RolloutGroup>{make_group({0, 1}, "a"), make_group({2, 3}, "b")};
  const auto separate = advantage_batch(groups3, {Estimator::GGrpo, true, 1e-6});
  const auto groups4 =
      std::vector<RolloutGroup>{make_group({0, 1}, "b"), make_group({2, 3}, "a")};
  const auto swapped = advantage_batch(groups4, {Estimator::GGrpo, true, 1e-6});
  for (std::size_t g = 0; g < 2; ++g)
    for (std::size_t i = 0; i < 2; ++i)
      CHECK(separate[g].values[i] == swapped[g].values[i]);
  const auto& grid2 = oracle::quantile_grid(2);
  CHECK(separate[0].values[0] == doctest::Approx(grid2[0]).epsilon(1e-9));
  CHECK(separate[1].values[1] == doctest::Approx(grid2[1]).epsilon(1e-9));

  // per-group (pooling off) matches g_grpo_advantage on each group alone
  const auto unpooled = advantage_batch(groups2, {Estimator::GGrpo, false, 1e-6});
  const auto lone = g_grpo_advantage(groups2[0].rewards);
  CHECK(unpooled[0].values[0] == lone[0]);

  // emagrpo needs states
  CHECK_THROWS_AS(advantage_batch(groups2, {Estimator::EmaGrpo, true, 1e-6}),
                  std::invalid_argument);
  const auto ema_out = advantage_batch(groups2, {Estimator::EmaGrpo, true, 1e-6}, &ema);
  CHECK(ema.at("a").initialized);

  CHECK_THROWS_AS(advantage_batch({}, {Estimator::Grpo, true, 1e-6}),
                  std::invalid_argument);
}
