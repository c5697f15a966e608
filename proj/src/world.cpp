#include "ubmbandit/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "ubmbandit/click_models.hpp"

namespace ubmbandit {

GroundTruthWorld::GroundTruthWorld(Eigen::VectorXd theta, std::vector<Context> contexts,
                                   PositionWeights weights, std::uint64_t seed)
    : theta_(std::move(theta)),
      contexts_(std::move(contexts)),
      weights_(std::move(weights)),
      seed_(seed) {
  if (contexts_.empty()) throw std::invalid_argument("world: empty arm pool");
  gammas_.reserve(contexts_.size());
  for (std::size_t a = 0; a < contexts_.size(); ++a) {
    const auto& x = contexts_[a];
    if (x.size() != theta_.size()) throw std::invalid_argument("world: context dimension mismatch");
    if (x.norm() > 1.0 + 1e-12) throw std::invalid_argument("world: context norm exceeds 1");
    const double g = theta_.dot(x);
    if (g < -1e-12 || g > 1.0 + 1e-12) {
      throw std::invalid_argument("world: attractiveness of arm " + std::to_string(a) +
                                  " outside [0,1]");
    }
    gammas_.push_back(std::clamp(g, 0.0, 1.0));
    candidates_.push_back(Candidate{static_cast<ArmId>(a), x});
  }
  by_gamma_.resize(contexts_.size());
  std::iota(by_gamma_.begin(), by_gamma_.end(), ArmId{0});
  std::stable_sort(by_gamma_.begin(), by_gamma_.end(), [&](ArmId a, ArmId b) {
    return gammas_[static_cast<std::size_t>(a)] > gammas_[static_cast<std::size_t>(b)];
  });
}

std::vector<ArmId> GroundTruthWorld::optimal(int list_length) const {
  if (list_length > arm_count()) throw std::invalid_argument("world: K exceeds m");
  return {by_gamma_.begin(), by_gamma_.begin() + list_length};
}

double GroundTruthWorld::regret(std::span<const ArmId> selected) const {
  double r = 0.0;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const int k = static_cast<int>(i) + 1;
    r += weights_.at(k, 0) * (gammas_[static_cast<std::size_t>(by_gamma_[i])] - gamma(selected[i]));
  }
  return r;
}

nlohmann::json GroundTruthWorld::to_json() const {
  std::vector<std::vector<double>> xs;
  for (const auto& x : contexts_) xs.emplace_back(x.data(), x.data() + x.size());
  return {{"seed", seed_},
          {"theta", std::vector<double>(theta_.data(), theta_.data() + theta_.size())},
          {"contexts", xs},
          {"weights", weights_.to_json()}};
}

GroundTruthWorld GroundTruthWorld::from_json(const nlohmann::json& j) {
  const auto theta = j.at("theta").get<std::vector<double>>();
  std::vector<Context> contexts;
  for (const auto& row : j.at("contexts").get<std::vector<std::vector<double>>>()) {
    contexts.push_back(Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(row.size())));
  }
  return GroundTruthWorld(Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size())),
                          std::move(contexts), PositionWeights::from_json(j.at("weights")),
                          j.at("seed").get<std::uint64_t>());
}

GroundTruthWorld make_world(const WorldSpec& spec, const PositionWeights& weights,
                            std::uint64_t seed) {
  if (spec.dim < 2) throw std::invalid_argument("make_world: dimension must be >= 2");
  if (spec.arms < 1) throw std::invalid_argument("make_world: need at least one arm");
  if (!(0.0 <= spec.gamma_min && spec.gamma_min <= spec.gamma_max && spec.gamma_max <= 1.0)) {
    throw std::invalid_argument("make_world: need 0 <= gamma_min <= gamma_max <= 1");
  }
  const double beta = spec.beta > 0.0 ? spec.beta : static_cast<double>(spec.dim);
  const double radius = 0.9 * std::sqrt(beta);
  if (spec.gamma_max > radius) {
    throw std::invalid_argument("make_world: gamma_max unreachable with ||x|| <= 1 and ||theta*||^2 <= beta");
  }

  CounterRng rng(seed);
  Eigen::VectorXd dir(spec.dim);
  for (auto& v : dir) v = rng.normal();
  dir.normalize();
  const Eigen::VectorXd theta = radius * dir;

  std::vector<Eigen::VectorXd> raw(static_cast<std::size_t>(spec.arms), Eigen::VectorXd(spec.dim));
  std::vector<double> along(raw.size());
  for (std::size_t a = 0; a < raw.size(); ++a) {
    for (auto& v : raw[a]) v = rng.normal();
    along[a] = dir.dot(raw[a]);
  }
  const auto [lo, hi] = std::minmax_element(along.begin(), along.end());
  const double span = *hi - *lo;

  std::vector<Context> contexts;
  contexts.reserve(raw.size());
  for (std::size_t a = 0; a < raw.size(); ++a) {
    const double unit = span > 0.0 ? (along[a] - *lo) / span : 0.5;
    const double g = spec.gamma_min + unit * (spec.gamma_max - spec.gamma_min);
    const double parallel = g / radius;
    Eigen::VectorXd orth = raw[a] - along[a] * dir;
    const double room = std::sqrt(std::max(0.0, 1.0 - parallel * parallel));
    const double orth_norm = orth.norm();
    if (orth_norm > 0.0) orth *= room * (0.5 + 0.45 * rng.uniform()) / orth_norm;
    contexts.push_back(parallel * dir + orth);
  }
  return GroundTruthWorld(theta, std::move(contexts), weights, seed);
}

void save_world(const std::filesystem::path& path, const GroundTruthWorld& world) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << world.to_json().dump(2) << '\n';
}

GroundTruthWorld load_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return GroundTruthWorld::from_json(nlohmann::json::parse(in));
}

RoundOutcome run_round(const GroundTruthWorld& world, Policy& policy, int list_length,
                       CounterRng& rng) {
  RoundOutcome out;
  out.selection = policy.select(world.candidates(), static_cast<std::size_t>(list_length));
  std::vector<double> gammas;
  gammas.reserve(out.selection.size());
  for (ArmId a : out.selection.arms) gammas.push_back(world.gamma(a));
  out.clicks = simulate_session(ClickModel::kUbm, gammas, world.weights(), rng);
  out.regret = world.regret(out.selection.arms);
  policy.feedback(out.selection, out.clicks);
  return out;
}

}  // namespace ubmbandit

namespace ubmbandit {

GeneratedLog generate_session_log(const LogSpec& spec, const PositionWeights& weights, std::uint64_t seed) {
  if (spec.users < 1 || spec.items < 1 || spec.rank < 1 || spec.list_length < 1) {
    throw std::invalid_argument("generate_session_log: sizes must be positive");
  }
  if (spec.candidates < spec.list_length || spec.candidates > spec.items) {
    throw std::invalid_argument("generate_session_log: need list_length <= candidates <= items");
  }
  if (spec.list_length > weights.list_length()) {
    throw std::invalid_argument("generate_session_log: weight table shorter than list_length");
  }
  if (!(0.0 <= spec.gamma_min && spec.gamma_min <= spec.gamma_max && spec.gamma_max <= 1.0)) {
    throw std::invalid_argument("generate_session_log: need 0 <= gamma_min <= gamma_max <= 1");
  }
  CounterRng rng(seed);
  Eigen::MatrixXd u(spec.users, spec.rank);
  for (int i = 0; i < spec.users; ++i) {
    double total = 0.0;
    for (int r = 0; r < spec.rank; ++r) {
      u(i, r) = -std::log(1.0 - rng.uniform());  // exponential draws normalize to a Dirichlet(1)
      total += u(i, r);
    }
    u.row(i) /= total;
  }
  Eigen::MatrixXd v(spec.items, spec.rank);
  for (int j = 0; j < spec.items; ++j)
    for (int r = 0; r < spec.rank; ++r) v(j, r) = rng.uniform();

  GeneratedLog out;
  out.gamma = (spec.gamma_min + (spec.gamma_max - spec.gamma_min) * (u * v.transpose()).array()).matrix();

  std::vector<std::vector<ArmId>> pools(static_cast<std::size_t>(spec.users));
  std::vector<ArmId> all(static_cast<std::size_t>(spec.items));
  for (int j = 0; j < spec.items; ++j) all[static_cast<std::size_t>(j)] = j;
  for (auto& pool : pools) {
    for (int i = 0; i < spec.candidates; ++i) {
      const auto j = static_cast<std::size_t>(i) + rng.uniform_index(all.size() - static_cast<std::size_t>(i));
      std::swap(all[static_cast<std::size_t>(i)], all[j]);
    }
    pool.assign(all.begin(), all.begin() + spec.candidates);
    std::sort(pool.begin(), pool.end());
  }

  out.sessions.reserve(static_cast<std::size_t>(spec.sessions));
  for (std::uint64_t s = 0; s < spec.sessions; ++s) {
    const auto user = static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(spec.users)));
    auto pool = pools[user];
    for (int i = 0; i < spec.list_length; ++i) {
      const auto j = static_cast<std::size_t>(i) + rng.uniform_index(pool.size() - static_cast<std::size_t>(i));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    SessionRecord rec;
    rec.user = "u" + std::to_string(user);
    rec.displayed.assign(pool.begin(), pool.begin() + spec.list_length);
    std::vector<double> gammas;
    for (ArmId a : rec.displayed) gammas.push_back(out.gamma(static_cast<Eigen::Index>(user), a));
    rec.clicks = simulate_session(ClickModel::kUbm, gammas, weights, rng);
    out.sessions.push_back(std::move(rec));
  }
  return out;
}

}  // namespace ubmbandit
