#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ubmbandit/click_models.hpp"
#include "ubmbandit/policy.hpp"
#include "ubmbandit/position_weights.hpp"
#include "ubmbandit/rng.hpp"

namespace ubmbandit {

// Raised when an importance ratio would divide by zero.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class GroupBy {
  kCandidates,         // key = sorted set of logged arm ids
  kUserAndCandidates,  // key = user token + sorted arm ids
};

// Logged records sharing one candidate set X.
struct ReplayGroup {
  std::string key;
  std::vector<ArmId> candidates;  // sorted ascending
  std::vector<Context> contexts;  // aligned with candidates, empty if unknown
  std::vector<SessionRecord> records;

  CandidateSet candidate_set() const;
};

class ReplayDataset {
 public:
  static ReplayDataset build(std::span<const SessionRecord> records,
                             GroupBy group_by = GroupBy::kCandidates);

  const std::vector<ReplayGroup>& groups() const { return groups_; }
  const ReplayGroup& group(std::size_t i) const { return groups_.at(i); }
  std::size_t size() const { return groups_.size(); }
  int max_list_length() const { return max_list_length_; }

  void set_contexts(std::size_t group, std::vector<Context> contexts);

 private:
  std::vector<ReplayGroup> groups_;
  int max_list_length_ = 0;
};

// Empirical logging propensities pi(a, k, k' | X): the fraction of a group's
// records showing arm a at position k with realized last click k'. Slot
// order matches PositionWeights::tilde().
class PropensityTable {
 public:
  // Zero vector for arms the group never showed.
  const std::vector<double>& slots(std::size_t group, ArmId arm) const;
  // <W~, pi(a,.,.|X)>
  double examination(std::size_t group, ArmId arm) const;

 private:
  friend PropensityTable build_propensities(const ReplayDataset&, const PositionWeights&);

  std::vector<std::map<ArmId, std::vector<double>>> table_;
  std::vector<std::map<ArmId, double>> examination_;
  std::vector<double> zeros_;
};

PropensityTable build_propensities(const ReplayDataset& dataset, const PositionWeights& weights);

// UBM-IPS reward of arm a placed by a deterministic target policy at slot
// (k, k') of group X:
//   (1/|D_X|) sum_{records with a} click(a) * w(k,k') / <W~, pi(a,.,.|X)>.
// Can exceed one. Throws EvaluationError when the denominator is zero.
double simulate_item_reward(ArmId arm, int k, int k_prime, const ReplayDataset& dataset,
                            std::size_t group, const PositionWeights& weights,
                            const PropensityTable& propensities);

// 1 when r >= 1, otherwise a Bernoulli(r) draw. Throws on r < 0.
int sample_last_click(double reward, CounterRng& rng);

struct CtrMetrics {
  double ctr_sum = 0.0;  // mean clicks per round
  double ctr_set = 0.0;  // fraction of rounds with at least one click
};

CtrMetrics compute_ctr(std::span<const ClickVector> rounds);

struct ReplayRound {
  std::uint64_t round = 0;
  std::string group_key;
  std::vector<ArmId> selected;
  std::vector<int> k_prime;
  std::vector<double> rewards;
  int set_reward = 0;
  double cum_ctr_sum = 0.0;
  double cum_ctr_set = 0.0;
};

struct ReplayResult {
  double ctr_sum = 0.0;
  double ctr_set = 0.0;
  std::uint64_t rounds = 0;   // evaluated rounds
  std::uint64_t skipped = 0;  // rounds dropped on a propensity miss
  std::vector<ReplayRound> trace;
};

struct ReplayOptions {
  std::uint64_t rounds = 1000;
  std::uint64_t seed = 0;
  bool keep_trace = true;
  // Called after each evaluated round with (round, cum_ctr_sum, cum_ctr_set).
  std::function<void(std::uint64_t, double, double)> on_round;
};

// Sequential UBM-IPS replay: each round draws a group uniformly with
// replacement, lets the policy rank K of its candidates, walks positions
// top-down estimating each item's reward at slot (k, k') and sampling a
// binary click to propagate k'. CTR_sum averages the real-valued rewards;
// CTR_set and the policy's feedback use the sampled clicks.
ReplayResult replay_evaluate(Policy& policy, const ReplayDataset& dataset,
                             const PositionWeights& weights, int list_length,
                             const ReplayOptions& options);

// CSV columns: round,group_key,selected_ids,kprime_vector,item_rewards,F,
// cum_ctr_sum,cum_ctr_set. List cells are ';'-separated.
void write_trace_csv(std::ostream& out, const ReplayResult& result);

}  // namespace ubmbandit
