#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>

#include "support/oracles.hpp"
#include "ubmbandit/click_models.hpp"
#include "ubmbandit/policy.hpp"
#include "ubmbandit/rng.hpp"

using namespace ubmbandit;

namespace {

CandidateSet random_candidates(int m, int d, std::uint64_t seed) {
  CounterRng rng(seed);
  CandidateSet c;
  for (int i = 0; i < m; ++i) {
    Context x(d);
    for (int j = 0; j < d; ++j) x(j) = rng.normal();
    c.push_back({100 + i, normalize_context(x)});
  }
  return c;
}

PolicyConfig config_for(int d, int k) {
  PolicyConfig c;
  c.dim = d;
  c.list_length = k;
  c.weights = PositionWeights::from_rows({{0.9}, {0.6, 0.95}, {0.4, 0.7, 0.9}, {0.3, 0.5, 0.6, 0.85}});
  c.satisfaction = {0.6, 0.5, 0.4, 0.3};
  return c;
}

SelectionResult fixed_selection(const CandidateSet& c, std::size_t k) {
  SelectionResult s;
  for (std::size_t i = 0; i < k; ++i) {
    s.arms.push_back(c[i].id);
    s.contexts.push_back(c[i].x);
    s.scores.push_back(0.0);
  }
  return s;
}

std::vector<double> weights_of(const std::vector<RidgeSample>& samples) {
  std::vector<double> w;
  for (const auto& s : samples) w.push_back(s.weight);
  return w;
}

}  // namespace

TEST_CASE("last click positions") {
  CHECK(last_click_positions(std::vector<int>{0, 0, 0, 0}) == std::vector<int>{0, 0, 0, 0});
  CHECK(last_click_positions(std::vector<int>{1, 0, 0, 0}) == std::vector<int>{0, 1, 1, 1});
  CHECK(last_click_positions(std::vector<int>{0, 1, 0, 1}) == std::vector<int>{0, 0, 2, 2});
  CHECK(last_click_positions(std::vector<int>{1, 1, 1}) == std::vector<int>{0, 1, 2});
}

TEST_CASE("context normalization only shrinks") {
  Context big(2);
  big << 3.0, 4.0;
  CHECK(normalize_context(big).norm() == doctest::Approx(1.0));
  Context small(2);
  small << 0.3, 0.4;
  CHECK(normalize_context(small) == small);
}

TEST_CASE("rank_top_k orders by score with id tie-break") {
  const auto c = random_candidates(4, 2, 1);
  const std::vector<double> scores{0.9, 0.3, 0.7, 0.1};
  const auto sel = rank_top_k(c, scores, 2);
  CHECK(sel.arms == std::vector<ArmId>{100, 102});
  CHECK(sel.scores == std::vector<double>{0.9, 0.7});
  const std::vector<double> ties{0.5, 0.5, 0.5, 0.5};
  CHECK(rank_top_k(c, ties, 4).arms == std::vector<ArmId>{100, 101, 102, 103});
  CHECK_THROWS_AS(rank_top_k(c, scores, 5), std::invalid_argument);
}

TEST_CASE("fixed-score selection picks the argsort order") {
  const auto c = random_candidates(4, 2, 1);
  FixedScorePolicy p({{100, 0.9}, {101, 0.3}, {102, 0.7}, {103, 0.1}});
  const auto sel = p.select(c, 2);
  CHECK(sel.arms == std::vector<ArmId>{100, 102});
}

TEST_CASE("fresh policies rank by exploration alone with id tie-break") {
  CandidateSet c;
  for (int i = 0; i < 4; ++i) {
    Context x = Context::Zero(4);
    x(i) = 1.0;
    c.push_back({static_cast<ArmId>(10 - i), x});
  }
  auto cfg = config_for(4, 3);
  cfg.fixed_alpha = 1.0;
  for (auto kind : {PolicyKind::kUbmLinUcb, PolicyKind::kC2Ucb, PolicyKind::kCmLinUcb, PolicyKind::kDcmLinUcb}) {
    auto p = make_policy(kind, cfg);
    const auto sel = p->select(c, 3);
    CHECK(sel.arms == std::vector<ArmId>{7, 8, 9});
    CHECK(std::adjacent_find(sel.scores.begin(), sel.scores.end(), std::not_equal_to<>()) == sel.scores.end());
    // K = m returns everything.
    CHECK(p->select(c, 4).size() == 4);
    CHECK_THROWS_AS(p->select(c, 5), std::invalid_argument);
  }
}

TEST_CASE("scores are non-increasing and arms distinct") {
  const auto c = random_candidates(12, 5, 3);
  auto cfg = config_for(5, 4);
  for (auto kind : {PolicyKind::kUbmLinUcb, PolicyKind::kC2Ucb, PolicyKind::kCmLinUcb, PolicyKind::kDcmLinUcb,
                    PolicyKind::kPbmUcb}) {
    auto p = make_policy(kind, cfg);
    CounterRng rng(4);
    for (int t = 0; t < 30; ++t) {
      const auto sel = p->select(c, 4);
      CHECK(std::is_sorted(sel.scores.rbegin(), sel.scores.rend()));
      auto ids = sel.arms;
      std::sort(ids.begin(), ids.end());
      CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
      ClickVector clicks(4);
      for (auto& v : clicks) v = rng.bernoulli(0.3);
      p->feedback(sel, clicks);
      CHECK(p->round() == static_cast<std::uint64_t>(t + 1));
    }
  }
}

TEST_CASE("feedback rejects misaligned clicks without advancing") {
  const auto c = random_candidates(5, 3, 2);
  auto p = make_policy(PolicyKind::kUbmLinUcb, config_for(3, 3));
  const auto sel = p->select(c, 3);
  CHECK_THROWS_AS(p->feedback(sel, std::vector<int>{1, 0}), std::invalid_argument);
  CHECK(p->round() == 0);
}

TEST_CASE("sample weights per policy") {
  const auto c = random_candidates(4, 3, 9);
  const auto sel3 = fixed_selection(c, 3);
  const auto cfg = config_for(3, 3);
  const auto& w = cfg.weights;

  UbmLinUcbPolicy ubm(cfg);
  CHECK(weights_of(ubm.samples(sel3, std::vector<int>{1, 0, 0})) ==
        std::vector<double>{w.at(1, 0), w.at(2, 1), w.at(3, 1)});
  CHECK(weights_of(ubm.samples(sel3, std::vector<int>{0, 1, 0})) ==
        std::vector<double>{w.at(1, 0), w.at(2, 0), w.at(3, 2)});

  C2UcbPolicy c2(cfg);
  CHECK(weights_of(c2.samples(sel3, std::vector<int>{0, 1, 0})) == std::vector<double>{1.0, 1.0, 1.0});

  CmLinUcbPolicy cm(cfg);
  const auto cm_samples = cm.samples(sel3, std::vector<int>{0, 1, 0});
  REQUIRE(cm_samples.size() == 2);
  CHECK(cm_samples[1].reward == 1.0);
  CHECK(cm.samples(sel3, std::vector<int>{0, 0, 0}).size() == 3);
  CHECK(cm.samples(sel3, std::vector<int>{1, 1, 0}).size() == 1);

  DcmLinUcbPolicy dcm(cfg);
  // Up to the last click; after the click at 1 browsing continues with 1 - sat_1.
  CHECK(weights_of(dcm.samples(sel3, std::vector<int>{1, 1, 0})) == std::vector<double>{1.0, 1.0 - 0.6});
  CHECK(weights_of(dcm.samples(sel3, std::vector<int>{1, 0, 1})) == std::vector<double>{1.0, 0.4, 0.4});
  CHECK(dcm.samples(sel3, std::vector<int>{0, 0, 0}).size() == 3);
}

TEST_CASE("C2UCB state equals an unweighted LinUCB batch update") {
  const auto c = random_candidates(6, 3, 5);
  auto cfg = config_for(3, 3);
  C2UcbPolicy p(cfg);
  RidgeState reference(3, p.alpha_params().lambda);
  CounterRng rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto sel = p.select(c, 3);
    ClickVector clicks{static_cast<int>(rng.bernoulli(0.4)), static_cast<int>(rng.bernoulli(0.4)),
                       static_cast<int>(rng.bernoulli(0.4))};
    p.feedback(sel, clicks);
    std::vector<RidgeSample> batch;
    for (std::size_t i = 0; i < 3; ++i) batch.push_back({1.0, sel.contexts[i], static_cast<double>(clicks[i])});
    reference.update(batch);
  }
  CHECK(p.ridge().theta() == reference.theta());
  CHECK(p.ridge().a() == reference.a());
}

TEST_CASE("UBM-LinUCB uses lambda = phi' over its list and the scheduled alpha") {
  auto cfg = config_for(3, 2);
  UbmLinUcbPolicy p(cfg);
  const double phi = 0.9 * 0.9 + 0.95 * 0.95;
  CHECK(p.alpha_params().phi_prime == doctest::Approx(phi));
  CHECK(p.alpha_params().lambda == doctest::Approx(std::max(1.0, phi)));
  CHECK(p.alpha() == doctest::Approx(alpha_schedule(p.alpha_params(), 1)));
  C2UcbPolicy c(cfg);
  CHECK(c.alpha_params().phi_prime == 2.0);
  CHECK(c.alpha_params().lambda == 2.0);
}

TEST_CASE("PBM-UCB index and weighted exposure") {
  auto cfg = config_for(2, 2);
  PbmUcbPolicy p(cfg);
  const auto c = random_candidates(3, 2, 1);
  CHECK(std::isinf(p.index(100)));
  SelectionResult sel = fixed_selection(c, 2);
  p.feedback(sel, std::vector<int>{1, 0});
  // After one round: exposure(100) = w(1,0), clicks 1; t for the next round is 2.
  const double e = 0.9;
  CHECK(p.index(100) == doctest::Approx(1.0 / e + std::sqrt(1.5 * std::log(2.0) / e)));
  CHECK(p.index(101) == doctest::Approx(0.0 + std::sqrt(1.5 * std::log(2.0) / 0.6)));
  // Unexposed arms go first.
  CHECK(p.select(c, 1).arms == std::vector<ArmId>{102});
}

TEST_CASE("permuting candidates leaves the selection unchanged") {
  auto c = random_candidates(10, 4, 6);
  for (auto kind : {PolicyKind::kUbmLinUcb, PolicyKind::kC2Ucb, PolicyKind::kPbmUcb}) {
    auto p = make_policy(kind, config_for(4, 4));
    CounterRng rng(1);
    for (int t = 0; t < 15; ++t) {
      const auto sel = p->select(c, 4);
      ClickVector clicks(4);
      for (auto& v : clicks) v = rng.bernoulli(0.35);
      p->feedback(sel, clicks);
    }
    auto shuffled = c;
    std::mt19937_64 gen(3);
    for (int i = 0; i < 5; ++i) {
      std::shuffle(shuffled.begin(), shuffled.end(), gen);
      CHECK(p->select(shuffled, 4).arms == p->select(c, 4).arms);
    }
  }
}

TEST_CASE("identical feedback streams give bit-identical states") {
  const auto c = random_candidates(8, 5, 2);
  auto a = make_policy(PolicyKind::kUbmLinUcb, config_for(5, 4));
  auto b = make_policy(PolicyKind::kUbmLinUcb, config_for(5, 4));
  CounterRng rng(12);
  for (int t = 0; t < 300; ++t) {
    const auto sel = a->select(c, 4);
    ClickVector clicks(4);
    for (auto& v : clicks) v = rng.bernoulli(0.3);
    a->feedback(sel, clicks);
    b->feedback(sel, clicks);
  }
  const auto& ta = static_cast<const LinearUcbPolicy&>(*a).ridge().theta();
  const auto& tb = static_cast<const LinearUcbPolicy&>(*b).ridge().theta();
  CHECK(std::memcmp(ta.data(), tb.data(), sizeof(double) * static_cast<std::size_t>(ta.size())) == 0);
}

TEST_CASE("policy construction validates its inputs") {
  auto cfg = config_for(3, 5);
  CHECK_THROWS_AS(make_policy(PolicyKind::kUbmLinUcb, cfg), std::invalid_argument);  // weights cover K=4
  cfg = config_for(3, 4);
  cfg.satisfaction = {0.5};
  CHECK_THROWS_AS(make_policy(PolicyKind::kDcmLinUcb, cfg), std::invalid_argument);
  CHECK(parse_policy_kind("ubm-linucb") == PolicyKind::kUbmLinUcb);
  CHECK(to_string(PolicyKind::kC2Ucb) == "c2ucb");
  CHECK_THROWS_AS(parse_policy_kind("thompson"), std::invalid_argument);
}
