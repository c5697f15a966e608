#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ubmbandit {

using ArmId = std::int64_t;

// Feature vector of one arm. Ingestion scales it to Euclidean norm <= 1.
using Context = Eigen::VectorXd;

// Binary click indicators aligned with displayed positions (position 1 first).
using ClickVector = std::vector<int>;

// Divides by the norm when it exceeds one; shorter vectors are left alone.
Context normalize_context(Context x);

struct Candidate {
  ArmId id = 0;
  Context x;
};

// The m arms offered in one round.
using CandidateSet = std::vector<Candidate>;

// Ordered recommendation: arms[0] is shown at position 1.
struct SelectionResult {
  std::vector<ArmId> arms;
  std::vector<double> scores;
  std::vector<Context> contexts;

  std::size_t size() const { return arms.size(); }
};

// Picks the `k` highest scores, ordered descending with ties broken by
// ascending arm id. Throws std::invalid_argument when k exceeds the pool.
SelectionResult rank_top_k(const CandidateSet& candidates, std::span<const double> scores,
                           std::size_t k);

}  // namespace ubmbandit
