#include "ubmbandit/em.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace ubmbandit {
namespace {

struct CellCounts {
  std::size_t arm = 0;   // dense arm index
  std::size_t slot = 0;  // PositionWeights slot index
  double clicks = 0.0;
  double skips = 0.0;
};

double log_likelihood(const std::vector<CellCounts>& cells, const std::vector<double>& w,
                      const std::vector<double>& gamma) {
  double ll = 0.0;
  for (const auto& c : cells) {
    const double p = w[c.slot] * gamma[c.arm];
    if (c.clicks > 0.0) ll += c.clicks * std::log(p);
    if (c.skips > 0.0) ll += c.skips * std::log1p(-p);
  }
  return ll;
}

}  // namespace

EmFit em_fit_ubm(std::span<const SessionRecord> sessions, int list_length,
                 const EmOptions& options) {
  if (sessions.empty()) throw std::invalid_argument("em_fit_ubm: no sessions");
  if (list_length < 1) throw std::invalid_argument("em_fit_ubm: K must be >= 1");

  // Compress the log into per-(arm, slot) click/skip counts.
  std::map<ArmId, std::size_t> arm_index;
  for (const auto& s : sessions) {
    validate_session(s);
    if (static_cast<int>(s.displayed.size()) > list_length) {
      throw std::invalid_argument("em_fit_ubm: session longer than K=" +
                                  std::to_string(list_length));
    }
    for (ArmId a : s.displayed) arm_index.emplace(a, 0);
  }
  std::vector<ArmId> arms;
  for (auto& [id, idx] : arm_index) {
    idx = arms.size();
    arms.push_back(id);
  }

  const std::size_t slots = static_cast<std::size_t>(list_length) * (list_length + 1) / 2;
  std::unordered_map<std::size_t, CellCounts> cell_map;
  for (const auto& s : sessions) {
    int last = 0;
    for (std::size_t i = 0; i < s.displayed.size(); ++i) {
      const int k = static_cast<int>(i) + 1;
      const std::size_t arm = arm_index.at(s.displayed[i]);
      const std::size_t slot = PositionWeights::slot_index(k, last);
      auto& cell = cell_map[arm * slots + slot];
      cell.arm = arm;
      cell.slot = slot;
      if (s.clicks[i]) {
        cell.clicks += 1.0;
        last = k;
      } else {
        cell.skips += 1.0;
      }
    }
  }
  std::vector<CellCounts> cells;
  cells.reserve(cell_map.size());
  for (const auto& [key, c] : cell_map) cells.push_back(c);
  std::sort(cells.begin(), cells.end(), [](const CellCounts& a, const CellCounts& b) {
    return a.arm != b.arm ? a.arm < b.arm : a.slot < b.slot;
  });

  const double lo = options.clamp;
  const double hi = 1.0 - options.clamp;
  auto clamp = [&](double v) { return std::clamp(v, lo, hi); };

  std::vector<double> w(slots, clamp(options.initial_weight));
  std::vector<double> gamma(arms.size(), clamp(options.initial_attractiveness));
  std::vector<double> slot_seen(slots, 0.0);
  for (const auto& c : cells) slot_seen[c.slot] += c.clicks + c.skips;

  EmFit fit;
  double ll = log_likelihood(cells, w, gamma);
  fit.log_likelihood_trace.push_back(ll);

  std::vector<double> w_num(slots), w_den(slots), g_num(arms.size()), g_den(arms.size());
  for (int it = 1; it <= options.max_iterations; ++it) {
    std::fill(w_num.begin(), w_num.end(), 0.0);
    std::fill(w_den.begin(), w_den.end(), 0.0);
    std::fill(g_num.begin(), g_num.end(), 0.0);
    std::fill(g_den.begin(), g_den.end(), 0.0);
    for (const auto& c : cells) {
      const double wv = w[c.slot];
      const double gv = gamma[c.arm];
      const double denom = 1.0 - wv * gv;
      // Posterior of examination / attraction for an unclicked observation.
      const double examined = wv * (1.0 - gv) / denom;
      const double attracted = (1.0 - wv) * gv / denom;
      const double n = c.clicks + c.skips;
      w_num[c.slot] += c.clicks + c.skips * examined;
      w_den[c.slot] += n;
      g_num[c.arm] += c.clicks + c.skips * attracted;
      g_den[c.arm] += n;
    }
    for (std::size_t s = 0; s < slots; ++s) {
      if (w_den[s] > 0.0) w[s] = clamp(w_num[s] / w_den[s]);
    }
    for (std::size_t a = 0; a < arms.size(); ++a) {
      if (g_den[a] > 0.0) gamma[a] = clamp(g_num[a] / g_den[a]);
    }
    const double next = log_likelihood(cells, w, gamma);
    fit.log_likelihood_trace.push_back(next);
    fit.iterations = it;
    const double gain = next - ll;
    ll = next;
    if (gain < options.tolerance) {
      fit.converged = true;
      break;
    }
  }

  fit.log_likelihood = ll;
  fit.weights = PositionWeights(list_length);
  for (std::size_t s = 0; s < slots; ++s) {
    const auto [k, kp] = PositionWeights::slot_position(s);
    fit.weights.set(k, kp, w[s]);
    if (slot_seen[s] == 0.0) {
      fit.warnings.push_back("slot (" + std::to_string(k) + "," + std::to_string(kp) +
                             ") never observed; left at its initial value");
    }
  }
  for (std::size_t a = 0; a < arms.size(); ++a) fit.attractiveness[arms[a]] = gamma[a];
  for (auto& v : fit.weights.violations()) fit.warnings.push_back("monotonicity: " + v);
  return fit;
}

}  // namespace ubmbandit
