#include <doctest.h>

#include <random>

#include "support/oracles.hpp"
#include "ubmbandit/click_models.hpp"
#include "ubmbandit/rng.hpp"

using namespace ubmbandit;

namespace {

// Marginal click rates per position from n simulated sessions.
std::vector<double> empirical_marginals(ClickModel model, const std::vector<double>& gammas,
                                        const PositionWeights& w, const std::vector<double>& sat, int n,
                                        std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> rate(gammas.size(), 0.0);
  for (int s = 0; s < n; ++s) {
    const auto c = simulate_session(model, gammas, w, rng, sat);
    for (std::size_t k = 0; k < c.size(); ++k) rate[k] += c[k];
  }
  for (auto& r : rate) r /= n;
  return rate;
}

void check_within_3se(const std::vector<double>& empirical, const std::vector<double>& exact, int n) {
  for (std::size_t k = 0; k < exact.size(); ++k) {
    const double se = std::sqrt(std::max(exact[k] * (1.0 - exact[k]), 1e-12) / n);
    INFO("position " << k + 1 << " empirical " << empirical[k] << " exact " << exact[k]);
    CHECK(std::abs(empirical[k] - exact[k]) < 3.0 * se + 1e-12);
  }
}

}  // namespace

TEST_CASE("click probability is w times gamma") {
  const auto w = PositionWeights::from_rows({{0.55}, {0.0, 1.0}});
  CHECK(ubm_click_prob(0.3, 2, 1, w) == doctest::Approx(0.3));
  CHECK(ubm_click_prob(0.77, 2, 0, w) == 0.0);
  CHECK(ubm_click_prob(1.0, 1, 0, w) == doctest::Approx(0.55));
  CHECK_THROWS_AS(ubm_click_prob(0.5, 2, 2, w), std::invalid_argument);
  CHECK_THROWS_AS(ubm_click_prob(0.5, 3, 0, w), std::invalid_argument);
  CHECK_THROWS_AS(ubm_click_prob(1.5, 1, 0, w), std::invalid_argument);
}

TEST_CASE("model tags parse and unknown tags are rejected") {
  CHECK(parse_click_model("ubm") == ClickModel::kUbm);
  CHECK(parse_click_model("PBM") == ClickModel::kPbm);
  CHECK(parse_click_model("cascade") == ClickModel::kCascade);
  CHECK(parse_click_model("cm") == ClickModel::kCascade);
  CHECK(parse_click_model("dcm") == ClickModel::kDcm);
  CHECK_THROWS_AS(parse_click_model("sdbn"), std::invalid_argument);
}

TEST_CASE("degenerate attractiveness") {
  const auto w = PositionWeights::geometric(4, 0.8);
  const std::vector<double> zeros(4, 0.0);
  const std::vector<double> sat(4, 0.5);
  for (auto m : {ClickModel::kUbm, ClickModel::kPbm, ClickModel::kCascade, ClickModel::kDcm}) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) CHECK(simulate_session(m, zeros, w, seed, sat) == ClickVector(4, 0));
  }
  const std::vector<double> first_sure{1.0, 0.9, 0.9, 0.9};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CHECK(simulate_session(ClickModel::kCascade, first_sure, w, seed) == ClickVector{1, 0, 0, 0});
  }
}

TEST_CASE("simulation is a pure function of the seed") {
  const auto w = PositionWeights::geometric(5, 0.7);
  const std::vector<double> g{0.4, 0.3, 0.6, 0.2, 0.5};
  const std::vector<double> sat(5, 0.4);
  for (auto m : {ClickModel::kUbm, ClickModel::kPbm, ClickModel::kCascade, ClickModel::kDcm}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      CHECK(simulate_session(m, g, w, seed, sat) == simulate_session(m, g, w, seed, sat));
    }
  }
}

TEST_CASE("UBM second-position click rate matches total probability") {
  // P(c2) = 0.5 * 0.5 * 0.8 + 0.5 * 0.5 * 0.2 = 0.25
  const auto w = PositionWeights::from_rows({{1.0}, {0.2, 0.8}});
  const std::vector<double> g{0.5, 0.5};
  const int n = 1'000'000;
  const auto rate = empirical_marginals(ClickModel::kUbm, g, w, {}, n, 77);
  const double se = std::sqrt(0.25 * 0.75 / n);
  CHECK(std::abs(rate[1] - 0.25) < 3.0 * se);
}

TEST_CASE("every model matches its analytic marginals") {
  const std::vector<double> g{0.45, 0.3, 0.6, 0.25, 0.5};
  std::mt19937_64 gen(4);
  const auto rows = oracle::random_monotone_weights(5, gen);
  const auto w = PositionWeights::from_rows(rows);
  const std::vector<double> sat{0.7, 0.5, 0.3, 0.6, 0.4};
  const int n = 200000;

  // UBM by enumeration of click vectors.
  std::vector<double> ubm(5, 0.0);
  for (const auto& o : oracle::ubm_outcomes(g, rows)) {
    for (std::size_t k = 0; k < 5; ++k) ubm[k] += o.prob * o.clicks[k];
  }
  check_within_3se(empirical_marginals(ClickModel::kUbm, g, w, {}, n, 1), ubm, n);

  std::vector<double> pbm(5);
  for (std::size_t k = 0; k < 5; ++k) pbm[k] = rows[k][0] * g[k];
  check_within_3se(empirical_marginals(ClickModel::kPbm, g, w, {}, n, 2), pbm, n);

  std::vector<double> cm(5);
  double reach = 1.0;
  for (std::size_t k = 0; k < 5; ++k) {
    cm[k] = reach * g[k];
    reach *= 1.0 - g[k];
  }
  check_within_3se(empirical_marginals(ClickModel::kCascade, g, w, {}, n, 3), cm, n);

  std::vector<double> dcm(5);
  reach = 1.0;
  for (std::size_t k = 0; k < 5; ++k) {
    dcm[k] = reach * g[k];
    reach *= 1.0 - g[k] * sat[k];
  }
  check_within_3se(empirical_marginals(ClickModel::kDcm, g, w, sat, n, 4), dcm, n);
}

TEST_CASE("DCM satisfaction estimates last-click frequency") {
  const std::vector<double> g{0.5, 0.5, 0.5};
  const std::vector<double> sat{0.8, 0.3, 0.5};
  const auto w = PositionWeights::geometric(3, 1.0);
  CounterRng rng(10);
  std::vector<SessionRecord> log;
  for (int s = 0; s < 100000; ++s) {
    log.push_back({"u", {1, 2, 3}, {}, simulate_session(ClickModel::kDcm, g, w, rng, sat)});
  }
  const auto fitted = fit_dcm_satisfaction(log, 3);
  // At the last position every click is the last click.
  CHECK(fitted[2] == doctest::Approx(1.0));
  // P(no later click | click at k) = sat_k + (1 - sat_k) * prod_{j>k} (1 - gamma_j).
  CHECK(fitted[1] == doctest::Approx(0.3 + 0.7 * 0.5).epsilon(0.01));
  CHECK(fitted[0] == doctest::Approx(0.8 + 0.2 * 0.25).epsilon(0.01));

  std::vector<SessionRecord> no_clicks{{"u", {1, 2}, {}, {0, 0}}};
  CHECK(fit_dcm_satisfaction(no_clicks, 2) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("session validation") {
  CHECK_THROWS_AS(validate_session({"u", {1, 2}, {}, {0}}), std::invalid_argument);
  CHECK_THROWS_AS(validate_session({"u", {1, 1}, {}, {0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(validate_session({"u", {1, 2}, {}, {0, 2}}), std::invalid_argument);
  CHECK_NOTHROW(validate_session({"u", {1, 2}, {}, {0, 1}}));
}
