#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "ubmbandit/click_models.hpp"
#include "ubmbandit/policy.hpp"
#include "ubmbandit/position_weights.hpp"
#include "ubmbandit/rng.hpp"
#include "ubmbandit/types.hpp"

namespace ubmbandit {

struct WorldSpec {
  int dim = 5;
  int arms = 20;
  double beta = 0.0;  // 0 means d
  double gamma_min = 0.05;
  double gamma_max = 0.95;
};

// Linear ground truth gamma(a) = theta*^T x_a over a fixed arm pool.
// Arm ids are 0..m-1; every round offers the whole pool.
class GroundTruthWorld {
 public:
  GroundTruthWorld(Eigen::VectorXd theta, std::vector<Context> contexts, PositionWeights weights,
                   std::uint64_t seed);

  const Eigen::VectorXd& theta() const { return theta_; }
  const std::vector<Context>& contexts() const { return contexts_; }
  const std::vector<double>& gammas() const { return gammas_; }
  const PositionWeights& weights() const { return weights_; }
  std::uint64_t seed() const { return seed_; }
  int dim() const { return static_cast<int>(theta_.size()); }
  int arm_count() const { return static_cast<int>(contexts_.size()); }

  const CandidateSet& candidates() const { return candidates_; }
  double gamma(ArmId arm) const { return gammas_.at(static_cast<std::size_t>(arm)); }

  // The top-K arms by gamma in descending order (ties by id).
  std::vector<ArmId> optimal(int list_length) const;

  // sum_k w(k,0) (gamma(a*_k) - gamma(a_k))
  double regret(std::span<const ArmId> selected) const;

  nlohmann::json to_json() const;
  static GroundTruthWorld from_json(const nlohmann::json& j);

 private:
  Eigen::VectorXd theta_;
  std::vector<Context> contexts_;
  std::vector<double> gammas_;
  PositionWeights weights_;
  std::uint64_t seed_;
  CandidateSet candidates_;
  std::vector<ArmId> by_gamma_;
};

// theta* uniform on the sphere of radius 0.9 sqrt(beta); each arm's
// component along theta* is set so gammas span [gamma_min, gamma_max]
// affinely in the raw draw, and the orthogonal remainder keeps ||x|| <= 1.
GroundTruthWorld make_world(const WorldSpec& spec, const PositionWeights& weights,
                            std::uint64_t seed);

void save_world(const std::filesystem::path& path, const GroundTruthWorld& world);
GroundTruthWorld load_world(const std::filesystem::path& path);

struct RoundOutcome {
  SelectionResult selection;
  ClickVector clicks;
  double regret = 0.0;
};

// One interaction: select, draw UBM clicks from the true weights, feed the
// clicks back to the policy, and report the instantaneous regret surrogate.
RoundOutcome run_round(const GroundTruthWorld& world, Policy& policy, int list_length,
                       CounterRng& rng);

// Multi-user logged traffic for offline pipelines: each user has a fixed
// candidate set of `candidates` items drawn from `items`, the logging policy
// shows a uniformly random ordering of `list_length` of them, and clicks
// follow UBM with gamma(i,j) = gamma_min + (gamma_max - gamma_min) u_i^T v_j,
// where u_i lies on the probability simplex and v_j in [0,1]^rank.
struct LogSpec {
  int users = 50;
  int items = 40;
  int candidates = 8;
  int list_length = 5;
  int rank = 3;
  std::uint64_t sessions = 20000;
  double gamma_min = 0.05;
  double gamma_max = 0.6;
};

struct GeneratedLog {
  std::vector<SessionRecord> sessions;
  Eigen::MatrixXd gamma;  // users x items; user i is "u<i>", item j has id j
};

GeneratedLog generate_session_log(const LogSpec& spec, const PositionWeights& weights, std::uint64_t seed);

}  // namespace ubmbandit
