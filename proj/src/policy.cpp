#include "ubmbandit/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ubmbandit {

PolicyKind parse_policy_kind(std::string_view tag) {
  if (tag == "ubm-linucb") return PolicyKind::kUbmLinUcb;
  if (tag == "c2ucb") return PolicyKind::kC2Ucb;
  if (tag == "cm-linucb") return PolicyKind::kCmLinUcb;
  if (tag == "dcm-linucb") return PolicyKind::kDcmLinUcb;
  if (tag == "pbm-ucb") return PolicyKind::kPbmUcb;
  if (tag == "fixed") return PolicyKind::kFixedScore;
  throw std::invalid_argument("unknown algorithm '" + std::string(tag) + "'");
}

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kUbmLinUcb: return "ubm-linucb";
    case PolicyKind::kC2Ucb: return "c2ucb";
    case PolicyKind::kCmLinUcb: return "cm-linucb";
    case PolicyKind::kDcmLinUcb: return "dcm-linucb";
    case PolicyKind::kPbmUcb: return "pbm-ucb";
    case PolicyKind::kFixedScore: return "fixed";
  }
  throw std::invalid_argument("unknown policy kind");
}

std::vector<int> last_click_positions(std::span<const int> clicks) {
  std::vector<int> out(clicks.size(), 0);
  int last = 0;
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    out[i] = last;
    if (clicks[i]) last = static_cast<int>(i) + 1;
  }
  return out;
}

void Policy::feedback(const SelectionResult& selection, std::span<const int> clicks) {
  if (clicks.size() != selection.arms.size()) {
    throw std::invalid_argument("feedback: " + std::to_string(clicks.size()) + " clicks for " +
                                std::to_string(selection.arms.size()) + " selected arms");
  }
  learn(selection, clicks);
  ++round_;
}

// --- LinearUcbPolicy ---------------------------------------------------------

LinearUcbPolicy::LinearUcbPolicy(PolicyKind kind, const PolicyConfig& config, double phi_prime)
    : kind_(kind),
      config_(config),
      alpha_(make_alpha_params(config.dim, phi_prime, config.list_length, 1, config.beta)),
      ridge_(config.dim, alpha_.lambda) {
  if (config.list_length < 1) throw std::invalid_argument("policy: K must be >= 1");
}

double LinearUcbPolicy::alpha() const {
  if (config_.fixed_alpha) return *config_.fixed_alpha;
  return alpha_schedule(alpha_, round_ + 1);
}

SelectionResult LinearUcbPolicy::select(const CandidateSet& candidates, std::size_t k) const {
  if (k > candidates.size()) {
    throw std::invalid_argument("select: K=" + std::to_string(k) + " exceeds m=" +
                                std::to_string(candidates.size()));
  }
  const double a = alpha();
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    scores[i] = ridge_.ucb_index(candidates[i].x, a);
  }
  return rank_top_k(candidates, scores, k);
}

void LinearUcbPolicy::learn(const SelectionResult& selection, std::span<const int> clicks) {
  const auto batch = samples(selection, clicks);
  ridge_.update(batch);
}

PolicySnapshot LinearUcbPolicy::snapshot() const {
  PolicySnapshot s;
  s.kind = kind_;
  s.round = round_;
  s.config = config_;
  s.alpha = alpha_;
  s.lambda = ridge_.lambda();
  s.a = ridge_.a();
  s.a_inv = ridge_.a_inv();
  s.b = ridge_.b();
  s.theta = ridge_.theta();
  s.update_count = ridge_.update_count();
  return s;
}

void LinearUcbPolicy::restore(const PolicySnapshot& s) {
  if (s.kind != kind_) throw std::invalid_argument("restore: snapshot kind mismatch");
  round_ = s.round;
  config_ = s.config;
  alpha_ = s.alpha;
  ridge_ = RidgeState::restore(s.lambda, s.a, s.a_inv, s.b, s.theta, s.update_count);
}

namespace {

double phi_prime_prefix(const PositionWeights& w, int list_length) {
  if (w.list_length() < list_length) {
    throw std::invalid_argument("policy: weight table covers " + std::to_string(w.list_length()) +
                                " positions, K=" + std::to_string(list_length));
  }
  double sum = 0.0;
  for (int k = 1; k <= list_length; ++k) sum += w.at(k, k - 1) * w.at(k, k - 1);
  return sum;
}

RidgeSample sample_at(const SelectionResult& s, std::span<const int> clicks, std::size_t i,
                      double weight) {
  return RidgeSample{weight, s.contexts.at(i), static_cast<double>(clicks[i])};
}

}  // namespace

UbmLinUcbPolicy::UbmLinUcbPolicy(const PolicyConfig& config)
    : LinearUcbPolicy(PolicyKind::kUbmLinUcb, config,
                      phi_prime_prefix(config.weights, config.list_length)) {}

std::vector<RidgeSample> UbmLinUcbPolicy::samples(const SelectionResult& selection,
                                                  std::span<const int> clicks) const {
  const auto kp = last_click_positions(clicks);
  std::vector<RidgeSample> out;
  out.reserve(clicks.size());
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    const double w = config_.weights.at(static_cast<int>(i) + 1, kp[i]);
    out.push_back(sample_at(selection, clicks, i, w));
  }
  return out;
}

C2UcbPolicy::C2UcbPolicy(const PolicyConfig& config)
    : LinearUcbPolicy(PolicyKind::kC2Ucb, config, config.list_length) {}

std::vector<RidgeSample> C2UcbPolicy::samples(const SelectionResult& selection,
                                              std::span<const int> clicks) const {
  std::vector<RidgeSample> out;
  out.reserve(clicks.size());
  for (std::size_t i = 0; i < clicks.size(); ++i) out.push_back(sample_at(selection, clicks, i, 1.0));
  return out;
}

CmLinUcbPolicy::CmLinUcbPolicy(const PolicyConfig& config)
    : LinearUcbPolicy(PolicyKind::kCmLinUcb, config, config.list_length) {}

std::vector<RidgeSample> CmLinUcbPolicy::samples(const SelectionResult& selection,
                                                 std::span<const int> clicks) const {
  std::vector<RidgeSample> out;
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    out.push_back(sample_at(selection, clicks, i, 1.0));
    if (clicks[i]) break;
  }
  return out;
}

DcmLinUcbPolicy::DcmLinUcbPolicy(const PolicyConfig& config)
    : LinearUcbPolicy(PolicyKind::kDcmLinUcb, config, config.list_length) {
  if (static_cast<int>(config.satisfaction.size()) < config.list_length) {
    throw std::invalid_argument("dcm-linucb: needs a satisfaction value per position");
  }
}

std::vector<RidgeSample> DcmLinUcbPolicy::samples(const SelectionResult& selection,
                                                  std::span<const int> clicks) const {
  std::size_t end = clicks.size();
  for (std::size_t i = clicks.size(); i-- > 0;) {
    if (clicks[i]) {
      end = i + 1;
      break;
    }
  }
  std::vector<RidgeSample> out;
  double continuing = 1.0;
  for (std::size_t i = 0; i < end; ++i) {
    out.push_back(sample_at(selection, clicks, i, continuing));
    if (clicks[i]) continuing *= 1.0 - config_.satisfaction[i];
  }
  return out;
}

// --- PbmUcbPolicy ------------------------------------------------------------

PbmUcbPolicy::PbmUcbPolicy(const PolicyConfig& config) : config_(config) {
  if (config.weights.list_length() < config.list_length) {
    throw std::invalid_argument("pbm-ucb: weight table shorter than K");
  }
}

double PbmUcbPolicy::index(ArmId arm) const {
  const auto it = stats_.find(arm);
  if (it == stats_.end() || it->second[0] <= 0.0) return std::numeric_limits<double>::infinity();
  const double exposure = it->second[0];
  const double t = static_cast<double>(round_ + 1);
  return it->second[1] / exposure + std::sqrt(1.5 * std::log(t) / exposure);
}

SelectionResult PbmUcbPolicy::select(const CandidateSet& candidates, std::size_t k) const {
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) scores[i] = index(candidates[i].id);
  return rank_top_k(candidates, scores, k);
}

void PbmUcbPolicy::learn(const SelectionResult& selection, std::span<const int> clicks) {
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    auto& st = stats_[selection.arms[i]];
    st[0] += config_.weights.at(static_cast<int>(i) + 1, 0);
    st[1] += clicks[i];
  }
}

PolicySnapshot PbmUcbPolicy::snapshot() const {
  PolicySnapshot s;
  s.kind = PolicyKind::kPbmUcb;
  s.round = round_;
  s.config = config_;
  s.arm_stats = stats_;
  return s;
}

void PbmUcbPolicy::restore(const PolicySnapshot& s) {
  round_ = s.round;
  config_ = s.config;
  stats_ = s.arm_stats;
}

// --- FixedScorePolicy --------------------------------------------------------

FixedScorePolicy::FixedScorePolicy(std::map<ArmId, double> scores, std::uint64_t round)
    : scores_(std::move(scores)) {
  round_ = round;
}

SelectionResult FixedScorePolicy::select(const CandidateSet& candidates, std::size_t k) const {
  std::vector<double> scores(candidates.size(), 0.0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto it = scores_.find(candidates[i].id);
    if (it != scores_.end()) scores[i] = it->second;
  }
  return rank_top_k(candidates, scores, k);
}

PolicySnapshot FixedScorePolicy::snapshot() const {
  PolicySnapshot s;
  s.kind = PolicyKind::kFixedScore;
  s.round = round_;
  s.config.fixed_scores = scores_;
  return s;
}

// --- factory -----------------------------------------------------------------

std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicyConfig& config) {
  switch (kind) {
    case PolicyKind::kUbmLinUcb: return std::make_unique<UbmLinUcbPolicy>(config);
    case PolicyKind::kC2Ucb: return std::make_unique<C2UcbPolicy>(config);
    case PolicyKind::kCmLinUcb: return std::make_unique<CmLinUcbPolicy>(config);
    case PolicyKind::kDcmLinUcb: return std::make_unique<DcmLinUcbPolicy>(config);
    case PolicyKind::kPbmUcb: return std::make_unique<PbmUcbPolicy>(config);
    case PolicyKind::kFixedScore: return std::make_unique<FixedScorePolicy>(config.fixed_scores);
  }
  throw std::invalid_argument("make_policy: unknown kind");
}

std::unique_ptr<Policy> restore_policy(const PolicySnapshot& snapshot) {
  auto policy = make_policy(snapshot.kind, snapshot.config);
  if (auto* lin = dynamic_cast<LinearUcbPolicy*>(policy.get())) {
    lin->restore(snapshot);
  } else if (auto* pbm = dynamic_cast<PbmUcbPolicy*>(policy.get())) {
    pbm->restore(snapshot);
  } else {
    return std::make_unique<FixedScorePolicy>(snapshot.config.fixed_scores, snapshot.round);
  }
  return policy;
}

}  // namespace ubmbandit
