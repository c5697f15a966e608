#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ubmbandit/position_weights.hpp"
#include "ubmbandit/rng.hpp"
#include "ubmbandit/types.hpp"

namespace ubmbandit {

enum class ClickModel { kUbm, kPbm, kCascade, kDcm };

// Accepts "ubm", "pbm", "cm"/"cascade", "dcm" (case-insensitive).
ClickModel parse_click_model(std::string_view tag);
std::string_view to_string(ClickModel model);

// One logged round.
struct SessionRecord {
  std::string user;
  std::vector<ArmId> displayed;
  std::vector<Context> contexts;  // empty when fitting without features
  ClickVector clicks;
};

// Throws std::invalid_argument on repeated arms, length mismatch or non-binary clicks.
void validate_session(const SessionRecord& record);

// w(k,k') * gamma
double ubm_click_prob(double gamma, int k, int k_prime, const PositionWeights& weights);

// Draws one click vector for a displayed list with attractiveness `gammas`.
//   UBM:     click at k with probability w(k, last click above k) * gamma_k
//   PBM:     independent clicks with probability w(k,0) * gamma_k
//   Cascade: examine top-down, click with gamma_k, stop after the first click
//   DCM:     like Cascade, but after a click at k continue with 1 - sat_k
// `satisfaction` is only read for DCM and must then cover every position.
ClickVector simulate_session(ClickModel model, std::span<const double> gammas,
                             const PositionWeights& weights, CounterRng& rng,
                             std::span<const double> satisfaction = {});
ClickVector simulate_session(ClickModel model, std::span<const double> gammas,
                             const PositionWeights& weights, std::uint64_t seed,
                             std::span<const double> satisfaction = {});

// Per-position DCM satisfaction: among clicks at position k, the fraction
// that were the last click of their session. Positions never clicked get 0.5.
std::vector<double> fit_dcm_satisfaction(std::span<const SessionRecord> sessions, int list_length);

}  // namespace ubmbandit
