#include <doctest.h>

#include <random>

#include "support/oracles.hpp"
#include "ubmbandit/ridge.hpp"

using namespace ubmbandit;

namespace {

Context vec(std::initializer_list<double> v) {
  Context x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x(i++) = e;
  return x;
}

}  // namespace

TEST_CASE("initial state is lambda identity") {
  RidgeState s(2, 1.0);
  CHECK(s.a().isApprox(Eigen::MatrixXd::Identity(2, 2)));
  CHECK(s.b().isZero());
  CHECK(s.theta().isZero());

  RidgeState t(1, 2.0);
  CHECK(t.a_inv()(0, 0) == 0.5);

  RidgeState u(3, 1.06);
  CHECK(u.a().isApprox(1.06 * Eigen::MatrixXd::Identity(3, 3)));

  CHECK_THROWS_AS(RidgeState(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(RidgeState(2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(RidgeState(2, -1.0), std::invalid_argument);
}

TEST_CASE("weighted batch update matches the worked example") {
  RidgeState s(2, 1.0);
  const std::vector<RidgeSample> batch{{0.5, vec({1, 0}), 1.0}, {1.0, vec({0, 1}), 0.0}};
  s.update(batch);
  CHECK(s.a()(0, 0) == doctest::Approx(1.25));
  CHECK(s.a()(1, 1) == doctest::Approx(2.0));
  CHECK(s.b()(0) == doctest::Approx(0.5));
  CHECK(s.theta()(0) == doctest::Approx(0.4));
  CHECK(s.theta()(1) == doctest::Approx(0.0));

  const auto expected = oracle::ridge_theta(2, 1.0, {{0.5, vec({1, 0}), 1.0}, {1.0, vec({0, 1}), 0.0}});
  CHECK((s.theta() - expected).norm() < 1e-12);
}

TEST_CASE("empty update leaves the state unchanged") {
  RidgeState s(3, 1.0);
  s.update(RidgeSample{1.0, vec({0.1, 0.2, 0.3}), 1.0});
  const auto before_a = s.a();
  const auto before_theta = s.theta();
  s.update(std::span<const RidgeSample>{});
  CHECK(s.a() == before_a);
  CHECK(s.theta() == before_theta);
}

TEST_CASE("batch and one-by-one updates agree, unit weights equal plain LinUCB") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<RidgeSample> samples;
  for (int i = 0; i < 40; ++i) {
    Context x(4);
    for (int j = 0; j < 4; ++j) x(j) = n(gen);
    samples.push_back({1.0, normalize_context(x), static_cast<double>(i % 3 == 0)});
  }
  RidgeState batch(4, 1.0);
  RidgeState single(4, 1.0);
  batch.update(samples);
  for (const auto& s : samples) single.update(s);
  CHECK((batch.theta() - single.theta()).norm() < 1e-12);

  // Unweighted LinUCB: A = I + sum x x^T, b = sum r x.
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(4);
  for (const auto& s : samples) {
    a += s.x * s.x.transpose();
    b += s.reward * s.x;
  }
  CHECK((batch.a() - a).norm() < 1e-12);
  CHECK((batch.theta() - a.ldlt().solve(b)).norm() < 1e-10);
}

TEST_CASE("incremental state keeps its invariants across refactorizations") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int d = 6;
  const double lambda = 1.5;
  RidgeState s(d, lambda);
  std::vector<oracle::Sample> all;
  for (int i = 0; i < 2500; ++i) {
    Context x(d);
    for (int j = 0; j < d; ++j) x(j) = n(gen);
    x = normalize_context(x);
    const double w = u(gen);
    const double r = u(gen) < 0.3 ? 1.0 : 0.0;
    s.update(RidgeSample{w, x, r});
    all.push_back({w, x, r});
  }
  CHECK(s.update_count() == 2500);
  const Eigen::MatrixXd prod = s.a() * s.a_inv();
  CHECK((prod - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((s.theta() - s.a_inv() * s.b()).cwiseAbs().maxCoeff() < 1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.a());
  CHECK(es.eigenvalues().minCoeff() >= lambda - 1e-10);
  const auto expected = oracle::ridge_theta(d, lambda, all);
  CHECK((s.theta() - expected).norm() <= 1e-9 * expected.norm());
}

TEST_CASE("dimension mismatches are rejected before any mutation") {
  RidgeState s(2, 1.0);
  const std::vector<RidgeSample> batch{{1.0, vec({1, 0}), 1.0}, {1.0, vec({1, 0, 0}), 1.0}};
  CHECK_THROWS_AS(s.update(batch), std::invalid_argument);
  CHECK(s.update_count() == 0);
  CHECK(s.b().isZero());
  CHECK_THROWS_AS(s.ucb_index(vec({1, 0, 0}), 1.0), std::invalid_argument);
}

TEST_CASE("ucb index arithmetic") {
  RidgeState s(1, 1.0);
  CHECK(s.ucb_index(vec({1.0}), 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(s.ucb_index(vec({1.0}), -0.1), std::invalid_argument);

  // theta=(1,2), A=diag(4,1), alpha=2, x=(1,1)/sqrt2.
  Eigen::MatrixXd a = Eigen::Vector2d(4, 1).asDiagonal();
  Eigen::MatrixXd a_inv = Eigen::Vector2d(0.25, 1).asDiagonal();
  const Eigen::Vector2d theta(1, 2);
  const auto r = RidgeState::restore(1.0, a, a_inv, a * theta, theta, 0);
  const Context x = vec({1, 1}) / std::sqrt(2.0);
  CHECK(r.variance(x) == doctest::Approx(0.625));
  CHECK(r.ucb_index(x, 2.0) == doctest::Approx(3.0 / std::sqrt(2.0) + 2.0 * std::sqrt(0.625)).epsilon(1e-12));
  CHECK(r.ucb_index(x, 2.0) == doctest::Approx(3.702459).epsilon(1e-6));
  // Degree-one homogeneity in x.
  CHECK(r.ucb_index(3.5 * x, 2.0) == doctest::Approx(3.5 * r.ucb_index(x, 2.0)).epsilon(1e-13));
}

TEST_CASE("ranking by the index is invariant to a common positive weight") {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n(0.0, 1.0);
  RidgeState s(3, 1.0);
  for (int i = 0; i < 30; ++i) {
    Context x(3);
    for (int j = 0; j < 3; ++j) x(j) = n(gen);
    s.update(RidgeSample{0.7, normalize_context(x), static_cast<double>(i % 2)});
  }
  std::vector<Context> arms;
  for (int i = 0; i < 12; ++i) {
    Context x(3);
    for (int j = 0; j < 3; ++j) x(j) = n(gen);
    arms.push_back(normalize_context(x));
  }
  auto order_for = [&](double w) {
    std::vector<int> idx(arms.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int i, int j) {
      return w * s.ucb_index(arms[static_cast<std::size_t>(i)], 1.3) > w * s.ucb_index(arms[static_cast<std::size_t>(j)], 1.3);
    });
    return idx;
  };
  CHECK(order_for(1.0) == order_for(0.37));
  CHECK(order_for(1.0) == order_for(0.02));
}

TEST_CASE("alpha schedule and regret bound") {
  AlphaParams p{2, 1.0, 2.0, 1.0, 2, 1};
  CHECK(alpha_schedule(p, 1) == doctest::Approx(2.896517).epsilon(1e-6));
  const double by_hand = std::sqrt(2.0 * std::log(1.5) + 2.0 * std::log(2.0)) + std::sqrt(2.0);
  CHECK(alpha_schedule(p, 1) == doctest::Approx(by_hand).epsilon(1e-14));
  CHECK_THROWS_AS(alpha_schedule(p, 0), std::invalid_argument);

  double prev = 0.0;
  for (std::uint64_t t = 1; t <= 1'000'000; ++t) {
    const double a = alpha_schedule(p, t);
    REQUIRE(a >= prev);
    prev = a;
  }

  const auto q = make_alpha_params(5, 3.0, 3);
  CHECK(q.lambda == 3.0);
  CHECK(q.beta == 5.0);
  // With beta = d the additive term is sqrt(lambda d).
  const double t1 = alpha_schedule(q, 10);
  const double head = std::sqrt(5.0 * std::log(1.0 + 3.0 * 10.0 / 15.0) + 2.0 * std::log(30.0));
  CHECK(t1 - head == doctest::Approx(std::sqrt(15.0)));
  CHECK(make_alpha_params(4, 0.5, 2).lambda == 1.0);

  const double bound = regret_bound(q, 1000, true);
  const double expected = 2.0 * alpha_schedule(q, 1000) *
                          std::sqrt(2.0 * 1000 * 3 * 5 * std::log(1.0 + 3.0 * 1000 / (3.0 * 5))) + 1.0;
  CHECK(bound == doctest::Approx(expected).epsilon(1e-13));
  CHECK(regret_bound(q, 1000, false) == doctest::Approx(expected - 1.0).epsilon(1e-13));

  AlphaParams bad = q;
  bad.lambda = 0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = q;
  bad.beta = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
