#pragma once

#include <span>

#include "ubmbandit/position_weights.hpp"
#include "ubmbandit/types.hpp"

namespace ubmbandit {

// Set-level reward F(S): 1 iff at least one displayed item was clicked.
int set_reward(std::span<const int> clicks);

// Probability that a list with the given per-position attractiveness gets at
// least one click when examination ignores earlier clicks (w_{k,0}):
//   1 - prod_k (1 - gamma_k * w_{k,0}).
double expected_set_reward(std::span<const double> attractiveness, const PositionWeights& weights);

}  // namespace ubmbandit
