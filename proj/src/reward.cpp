#include "ubmbandit/reward.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ubmbandit {

Context normalize_context(Context x) {
  const double norm = x.norm();
  if (norm > 1.0) x /= norm;
  return x;
}

SelectionResult rank_top_k(const CandidateSet& candidates, std::span<const double> scores,
                           std::size_t k) {
  if (scores.size() != candidates.size()) {
    throw std::invalid_argument("rank_top_k: score count does not match candidate count");
  }
  if (k > candidates.size()) {
    throw std::invalid_argument("rank_top_k: K=" + std::to_string(k) + " exceeds m=" +
                                std::to_string(candidates.size()));
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return candidates[a].id < candidates[b].id;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    better);
  SelectionResult out;
  out.arms.reserve(k);
  out.scores.reserve(k);
  out.contexts.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& c = candidates[order[i]];
    out.arms.push_back(c.id);
    out.scores.push_back(scores[order[i]]);
    out.contexts.push_back(c.x);
  }
  return out;
}

int set_reward(std::span<const int> clicks) {
  return std::any_of(clicks.begin(), clicks.end(), [](int c) { return c != 0; }) ? 1 : 0;
}

double expected_set_reward(std::span<const double> attractiveness, const PositionWeights& weights) {
  if (static_cast<int>(attractiveness.size()) > weights.list_length()) {
    throw std::invalid_argument("expected_set_reward: more items than weighted positions");
  }
  double no_click = 1.0;
  for (std::size_t i = 0; i < attractiveness.size(); ++i) {
    const int k = static_cast<int>(i) + 1;
    const double p = attractiveness[i] * weights.at(k, 0);
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("expected_set_reward: gamma*w at position " + std::to_string(k) +
                                  " outside [0,1]");
    }
    no_click *= 1.0 - p;
  }
  return 1.0 - no_click;
}

}  // namespace ubmbandit
