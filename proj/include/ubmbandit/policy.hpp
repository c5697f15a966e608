#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ubmbandit/position_weights.hpp"
#include "ubmbandit/ridge.hpp"
#include "ubmbandit/types.hpp"

namespace ubmbandit {

enum class PolicyKind { kUbmLinUcb, kC2Ucb, kCmLinUcb, kDcmLinUcb, kPbmUcb, kFixedScore };

// Tags: "ubm-linucb", "c2ucb", "cm-linucb", "dcm-linucb", "pbm-ucb", "fixed".
PolicyKind parse_policy_kind(std::string_view tag);
std::string_view to_string(PolicyKind kind);

// k'(k) = position of the last click strictly above k, 0 if none.
std::vector<int> last_click_positions(std::span<const int> clicks);

struct PolicyConfig {
  int dim = 1;
  int list_length = 1;
  PositionWeights weights;            // read by UBM-LinUCB and PBM-UCB
  std::vector<double> satisfaction;   // read by DCM-LinUCB
  double beta = 0.0;                  // bound on ||theta*||^2; 0 means d
  std::optional<double> fixed_alpha;  // replaces the alpha schedule when set
  std::map<ArmId, double> fixed_scores;  // FixedScore policy only
};

// Serializable policy state. Contextual policies fill the ridge fields,
// PBM-UCB stores {exposure, clicks} per arm, the fixed policy its scores.
struct PolicySnapshot {
  static constexpr std::uint32_t kVersion = 1;

  PolicyKind kind = PolicyKind::kUbmLinUcb;
  std::uint64_t round = 0;
  PolicyConfig config;
  AlphaParams alpha;
  double lambda = 1.0;
  Eigen::MatrixXd a;
  Eigen::MatrixXd a_inv;
  Eigen::VectorXd b;
  Eigen::VectorXd theta;
  std::uint64_t update_count = 0;
  std::map<ArmId, std::array<double, 2>> arm_stats;
};

bool identical(const PolicySnapshot& x, const PolicySnapshot& y);

nlohmann::json snapshot_to_json(const PolicySnapshot& snapshot);
PolicySnapshot snapshot_from_json(const nlohmann::json& j);
// Little-endian binary blob: "UBMPOLSN", version, then the fields in order.
void write_snapshot(std::ostream& out, const PolicySnapshot& snapshot);
PolicySnapshot read_snapshot(std::istream& in);

// Select/feedback lifecycle shared by every strategy. Only feedback() mutates
// state, and it advances the round counter by exactly one.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual PolicyKind kind() const = 0;

  // Ranks the top `k` candidates for round t = round() + 1.
  virtual SelectionResult select(const CandidateSet& candidates, std::size_t k) const = 0;

  void feedback(const SelectionResult& selection, std::span<const int> clicks);

  std::uint64_t round() const { return round_; }

  virtual PolicySnapshot snapshot() const = 0;

 protected:
  virtual void learn(const SelectionResult& selection, std::span<const int> clicks) = 0;

  std::uint64_t round_ = 0;
};

// LinUCB-style policies over a shared ridge model. Subclasses decide which
// positions become regression samples and with what weight.
class LinearUcbPolicy : public Policy {
 public:
  LinearUcbPolicy(PolicyKind kind, const PolicyConfig& config, double phi_prime);

  PolicyKind kind() const override { return kind_; }
  SelectionResult select(const CandidateSet& candidates, std::size_t k) const override;
  PolicySnapshot snapshot() const override;

  double alpha() const;
  const RidgeState& ridge() const { return ridge_; }
  const AlphaParams& alpha_params() const { return alpha_; }
  const PolicyConfig& config() const { return config_; }

  void restore(const PolicySnapshot& snapshot);

  virtual std::vector<RidgeSample> samples(const SelectionResult& selection,
                                           std::span<const int> clicks) const = 0;

 protected:
  void learn(const SelectionResult& selection, std::span<const int> clicks) override;

  PolicyKind kind_;
  PolicyConfig config_;
  AlphaParams alpha_;
  RidgeState ridge_;
};

// Every position, weighted by w(k, k'(k)).
class UbmLinUcbPolicy final : public LinearUcbPolicy {
 public:
  explicit UbmLinUcbPolicy(const PolicyConfig& config);
  std::vector<RidgeSample> samples(const SelectionResult& selection,
                                   std::span<const int> clicks) const override;
};

// Every position, weight 1.
class C2UcbPolicy final : public LinearUcbPolicy {
 public:
  explicit C2UcbPolicy(const PolicyConfig& config);
  std::vector<RidgeSample> samples(const SelectionResult& selection,
                                   std::span<const int> clicks) const override;
};

// Positions up to and including the first click (all when nothing was clicked).
class CmLinUcbPolicy final : public LinearUcbPolicy {
 public:
  explicit CmLinUcbPolicy(const PolicyConfig& config);
  std::vector<RidgeSample> samples(const SelectionResult& selection,
                                   std::span<const int> clicks) const override;
};

// Positions up to and including the last click (all when nothing was clicked),
// each weighted by the DCM probability of still browsing at k:
//   prod_{j<k, clicked} (1 - sat_j).
// The weighting is a modelling choice for this baseline, not a derived update.
class DcmLinUcbPolicy final : public LinearUcbPolicy {
 public:
  explicit DcmLinUcbPolicy(const PolicyConfig& config);
  std::vector<RidgeSample> samples(const SelectionResult& selection,
                                   std::span<const int> clicks) const override;
};

// Context-free position-based UCB: mu_a + sqrt(1.5 ln t / N_a) where N_a is
// the w(k,0)-weighted exposure of arm a. Unexposed arms rank first.
class PbmUcbPolicy final : public Policy {
 public:
  explicit PbmUcbPolicy(const PolicyConfig& config);

  PolicyKind kind() const override { return PolicyKind::kPbmUcb; }
  SelectionResult select(const CandidateSet& candidates, std::size_t k) const override;
  PolicySnapshot snapshot() const override;
  void restore(const PolicySnapshot& snapshot);

  double index(ArmId arm) const;

 protected:
  void learn(const SelectionResult& selection, std::span<const int> clicks) override;

 private:
  PolicyConfig config_;
  std::map<ArmId, std::array<double, 2>> stats_;  // {exposure, clicks}
};

// Non-learning ranking by a fixed score table (unknown arms score 0).
// Used as the target policy for offline evaluation.
class FixedScorePolicy final : public Policy {
 public:
  explicit FixedScorePolicy(std::map<ArmId, double> scores, std::uint64_t round = 0);

  PolicyKind kind() const override { return PolicyKind::kFixedScore; }
  SelectionResult select(const CandidateSet& candidates, std::size_t k) const override;
  PolicySnapshot snapshot() const override;

 protected:
  void learn(const SelectionResult&, std::span<const int>) override {}

 private:
  std::map<ArmId, double> scores_;
};

std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicyConfig& config);
std::unique_ptr<Policy> restore_policy(const PolicySnapshot& snapshot);

}  // namespace ubmbandit
