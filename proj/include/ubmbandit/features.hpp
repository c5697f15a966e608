#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ubmbandit/click_models.hpp"
#include "ubmbandit/position_weights.hpp"
#include "ubmbandit/svd.hpp"

namespace ubmbandit {

// User x item attractiveness estimated from a session log, debiased by the
// examination weights of the slots where each item was shown.
struct AttractivenessMatrix {
  Eigen::MatrixXd values;          // users x items, clamped to [0,1]
  std::vector<std::string> users;  // row labels, sorted
  std::vector<ArmId> items;        // column labels, sorted
  std::size_t clamped = 0;         // entries that exceeded 1 before clamping

  std::size_t user_index(const std::string& user) const;
  std::size_t item_index(ArmId item) const;
};

// M(i,j) = (1/|D_i|) sum_{records of i showing j} click_j / <W~, pi(j,.,.|i)>,
// which reduces to clicks_ij / sum of w(k,k') over the slots j occupied.
// Pairs that never co-occur are 0.
AttractivenessMatrix build_attractiveness_matrix(std::span<const SessionRecord> sessions,
                                                 const PositionWeights& weights);

// [U(i), V(j)] scaled down to unit norm when longer.
Context make_context(std::size_t user, std::size_t item, const FeatureFactorization& fact);

}  // namespace ubmbandit
