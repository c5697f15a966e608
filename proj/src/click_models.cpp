#include "ubmbandit/click_models.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <unordered_set>

namespace ubmbandit {

ClickModel parse_click_model(std::string_view tag) {
  std::string lower(tag);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ubm") return ClickModel::kUbm;
  if (lower == "pbm") return ClickModel::kPbm;
  if (lower == "cm" || lower == "cascade") return ClickModel::kCascade;
  if (lower == "dcm") return ClickModel::kDcm;
  throw std::invalid_argument("unknown click model '" + std::string(tag) + "'");
}

std::string_view to_string(ClickModel model) {
  switch (model) {
    case ClickModel::kUbm: return "ubm";
    case ClickModel::kPbm: return "pbm";
    case ClickModel::kCascade: return "cm";
    case ClickModel::kDcm: return "dcm";
  }
  throw std::invalid_argument("unknown click model tag");
}

void validate_session(const SessionRecord& record) {
  if (record.clicks.size() != record.displayed.size()) {
    throw std::invalid_argument("session of user '" + record.user + "': " +
                                std::to_string(record.clicks.size()) + " clicks for " +
                                std::to_string(record.displayed.size()) + " items");
  }
  if (!record.contexts.empty() && record.contexts.size() != record.displayed.size()) {
    throw std::invalid_argument("session of user '" + record.user + "': context count mismatch");
  }
  std::unordered_set<ArmId> seen;
  for (ArmId a : record.displayed) {
    if (!seen.insert(a).second) {
      throw std::invalid_argument("session of user '" + record.user + "': arm " +
                                  std::to_string(a) + " displayed twice");
    }
  }
  for (int c : record.clicks) {
    if (c != 0 && c != 1) {
      throw std::invalid_argument("session of user '" + record.user + "': non-binary click");
    }
  }
}

double ubm_click_prob(double gamma, int k, int k_prime, const PositionWeights& weights) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("ubm_click_prob: gamma outside [0,1]");
  }
  return weights.at(k, k_prime) * gamma;
}

ClickVector simulate_session(ClickModel model, std::span<const double> gammas,
                             const PositionWeights& weights, CounterRng& rng,
                             std::span<const double> satisfaction) {
  const int n = static_cast<int>(gammas.size());
  if (n > weights.list_length()) {
    throw std::invalid_argument("simulate_session: list longer than the weight table");
  }
  if (model == ClickModel::kDcm && static_cast<int>(satisfaction.size()) < n) {
    throw std::invalid_argument("simulate_session: DCM needs a satisfaction value per position");
  }
  ClickVector clicks(static_cast<std::size_t>(n), 0);
  switch (model) {
    case ClickModel::kUbm: {
      int last = 0;
      for (int k = 1; k <= n; ++k) {
        if (rng.bernoulli(weights.at(k, last) * gammas[k - 1])) {
          clicks[k - 1] = 1;
          last = k;
        }
      }
      break;
    }
    case ClickModel::kPbm:
      for (int k = 1; k <= n; ++k) {
        clicks[k - 1] = rng.bernoulli(weights.at(k, 0) * gammas[k - 1]) ? 1 : 0;
      }
      break;
    case ClickModel::kCascade:
      for (int k = 1; k <= n; ++k) {
        if (rng.bernoulli(gammas[k - 1])) {
          clicks[k - 1] = 1;
          break;
        }
      }
      break;
    case ClickModel::kDcm:
      for (int k = 1; k <= n; ++k) {
        if (rng.bernoulli(gammas[k - 1])) {
          clicks[k - 1] = 1;
          if (rng.bernoulli(satisfaction[k - 1])) break;
        }
      }
      break;
  }
  return clicks;
}

ClickVector simulate_session(ClickModel model, std::span<const double> gammas,
                             const PositionWeights& weights, std::uint64_t seed,
                             std::span<const double> satisfaction) {
  CounterRng rng(seed);
  return simulate_session(model, gammas, weights, rng, satisfaction);
}

std::vector<double> fit_dcm_satisfaction(std::span<const SessionRecord> sessions,
                                         int list_length) {
  std::vector<double> clicked(static_cast<std::size_t>(list_length), 0.0);
  std::vector<double> last(static_cast<std::size_t>(list_length), 0.0);
  for (const auto& s : sessions) {
    const int n = std::min<int>(list_length, static_cast<int>(s.clicks.size()));
    int last_click = 0;
    for (int k = 1; k <= n; ++k) {
      if (s.clicks[k - 1]) {
        clicked[k - 1] += 1.0;
        last_click = k;
      }
    }
    if (last_click > 0) last[last_click - 1] += 1.0;
  }
  std::vector<double> sat(static_cast<std::size_t>(list_length), 0.5);
  for (int k = 0; k < list_length; ++k) {
    if (clicked[k] > 0.0) sat[k] = last[k] / clicked[k];
  }
  return sat;
}

}  // namespace ubmbandit
