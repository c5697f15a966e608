#include <doctest.h>

#include <random>

#include "support/oracles.hpp"
#include "ubmbandit/reward.hpp"
#include "ubmbandit/rng.hpp"

using namespace ubmbandit;

TEST_CASE("set reward is any-click") {
  CHECK(set_reward(std::vector<int>{0, 0, 0}) == 0);
  CHECK(set_reward(std::vector<int>{0, 1, 0}) == 1);
  CHECK(set_reward(std::vector<int>{1, 1, 1}) == 1);
  CHECK(set_reward(std::vector<int>{}) == 0);
}

TEST_CASE("expected set reward examples") {
  const std::vector<double> zeros{0.0, 0.0, 0.0};
  CHECK(expected_set_reward(zeros, PositionWeights::geometric(3, 0.5)) == 0.0);
  CHECK(expected_set_reward(std::vector<double>{0.5}, PositionWeights::from_rows({{0.5}})) == doctest::Approx(0.25));
  const auto w = PositionWeights::from_rows({{0.8}, {0.6, 1.0}});
  CHECK(expected_set_reward(std::vector<double>{0.5, 0.4}, w) == doctest::Approx(0.544).epsilon(1e-14));
  CHECK_THROWS_AS(expected_set_reward(std::vector<double>{1.5}, PositionWeights::from_rows({{0.9}})),
                  std::invalid_argument);
  CHECK_THROWS_AS(expected_set_reward(std::vector<double>{0.1, 0.1}, PositionWeights::from_rows({{0.9}})),
                  std::invalid_argument);
}

TEST_CASE("expected set reward equals the UBM any-click probability") {
  // Until the first click the examination is w(k,0), so any-click under UBM
  // has the same probability as the closed form.
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + trial % 5;
    const auto rows = oracle::random_monotone_weights(k, gen);
    std::vector<double> gammas(static_cast<std::size_t>(k));
    for (auto& g : gammas) g = u(gen);
    const auto w = PositionWeights::from_rows(rows);
    CHECK(expected_set_reward(gammas, w) == doctest::Approx(oracle::ubm_prob_any_click(gammas, rows)).epsilon(1e-12));
  }
}

TEST_CASE("expected set reward agrees with Monte Carlo first-click sessions") {
  const std::vector<double> gammas{0.3, 0.5, 0.2, 0.6};
  const auto w = PositionWeights::from_rows({{0.9}, {0.7, 0.95}, {0.5, 0.6, 0.9}, {0.3, 0.4, 0.5, 0.8}});
  const double expected = expected_set_reward(gammas, w);
  CounterRng rng(123);
  const int n = 200000;
  int hits = 0;
  for (int s = 0; s < n; ++s) {
    for (std::size_t k = 0; k < gammas.size(); ++k) {
      if (rng.bernoulli(w.at(static_cast<int>(k) + 1, 0) * gammas[k])) {
        ++hits;
        break;
      }
    }
  }
  const double mean = static_cast<double>(hits) / n;
  const double se = std::sqrt(expected * (1.0 - expected) / n);
  CHECK(std::abs(mean - expected) < 3.0 * se);
}

TEST_CASE("greedy by attractiveness maximizes expected set reward") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int k = 1 + trial % 3;
    const int m = k + static_cast<int>(gen() % static_cast<std::uint64_t>(7 - k));
    const auto rows = oracle::random_monotone_weights(k, gen);
    const auto w = PositionWeights::from_rows(rows);
    std::vector<double> gammas(static_cast<std::size_t>(m));
    for (auto& g : gammas) g = u(gen);
    auto sorted = gammas;
    std::sort(sorted.rbegin(), sorted.rend());
    sorted.resize(static_cast<std::size_t>(k));
    const double greedy = expected_set_reward(sorted, w);
    oracle::for_each_ordered_subset(m, k, [&](const std::vector<int>& pick) {
      std::vector<double> g;
      for (int i : pick) g.push_back(gammas[static_cast<std::size_t>(i)]);
      REQUIRE(greedy >= oracle::product_set_reward(g, rows) - 1e-15);
    });
  }
}
