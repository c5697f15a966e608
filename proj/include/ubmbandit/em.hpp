#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "ubmbandit/click_models.hpp"
#include "ubmbandit/position_weights.hpp"

namespace ubmbandit {

struct EmOptions {
  int max_iterations = 200;
  double tolerance = 1e-6;  // stop once the log-likelihood gains less than this
  double initial_weight = 0.5;
  double initial_attractiveness = 0.5;
  double clamp = 1e-6;  // parameters are kept inside [clamp, 1 - clamp]
};

struct EmFit {
  PositionWeights weights;
  std::map<ArmId, double> attractiveness;
  double log_likelihood = 0.0;
  std::vector<double> log_likelihood_trace;  // entry 0 is the initial point
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

// Fits a context-free user browsing model (w per slot, gamma per arm) by
// expectation-maximization over the latent examination/attraction variables.
// Observations are compressed to (arm, slot, click) counts first, so each
// iteration costs O(#distinct (arm, slot) pairs).
//
// Weights and attractiveness are only identified up to a common scale, and
// the fitted table is returned as-is (no projection onto monotone tables;
// violations are reported in `warnings`).
EmFit em_fit_ubm(std::span<const SessionRecord> sessions, int list_length,
                 const EmOptions& options = {});

}  // namespace ubmbandit
