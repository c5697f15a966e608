#include "ubmbandit/features.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "ubmbandit/policy.hpp"

namespace ubmbandit {

std::size_t AttractivenessMatrix::user_index(const std::string& user) const {
  const auto it = std::lower_bound(users.begin(), users.end(), user);
  if (it == users.end() || *it != user) throw std::out_of_range("unknown user '" + user + "'");
  return static_cast<std::size_t>(it - users.begin());
}

std::size_t AttractivenessMatrix::item_index(ArmId item) const {
  const auto it = std::lower_bound(items.begin(), items.end(), item);
  if (it == items.end() || *it != item) throw std::out_of_range("unknown item " + std::to_string(item));
  return static_cast<std::size_t>(it - items.begin());
}

AttractivenessMatrix build_attractiveness_matrix(std::span<const SessionRecord> sessions,
                                                 const PositionWeights& weights) {
  AttractivenessMatrix out;
  for (const auto& s : sessions) {
    validate_session(s);
    if (static_cast<int>(s.displayed.size()) > weights.list_length()) {
      throw std::invalid_argument("build_attractiveness_matrix: record longer than weight table");
    }
    out.users.push_back(s.user);
    out.items.insert(out.items.end(), s.displayed.begin(), s.displayed.end());
  }
  std::sort(out.users.begin(), out.users.end());
  out.users.erase(std::unique(out.users.begin(), out.users.end()), out.users.end());
  std::sort(out.items.begin(), out.items.end());
  out.items.erase(std::unique(out.items.begin(), out.items.end()), out.items.end());

  // Per (user, item): clicks and summed examination weight of the slots used.
  // Dividing the two equals the 1/|D_i| and pi normalizations combined.
  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, double>> acc;
  for (const auto& s : sessions) {
    const auto i = out.user_index(s.user);
    const auto kp = last_click_positions(s.clicks);
    for (std::size_t p = 0; p < s.displayed.size(); ++p) {
      auto& cell = acc[{i, out.item_index(s.displayed[p])}];
      cell.first += s.clicks[p];
      cell.second += weights.at(static_cast<int>(p) + 1, kp[p]);
    }
  }
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.users.size()),
                                     static_cast<Eigen::Index>(out.items.size()));
  for (const auto& [ij, cell] : acc) {
    if (cell.second <= 0.0) continue;
    double v = cell.first / cell.second;
    if (v > 1.0) {
      ++out.clamped;
      v = 1.0;
    }
    out.values(static_cast<Eigen::Index>(ij.first), static_cast<Eigen::Index>(ij.second)) = v;
  }
  return out;
}

Context make_context(std::size_t user, std::size_t item, const FeatureFactorization& fact) {
  if (user >= static_cast<std::size_t>(fact.u.rows()) || item >= static_cast<std::size_t>(fact.v.rows())) {
    throw std::out_of_range("make_context: index out of range");
  }
  const auto r = fact.rank();
  Context x(2 * r);
  x.head(r) = fact.u.row(static_cast<Eigen::Index>(user)).transpose();
  x.tail(r) = fact.v.row(static_cast<Eigen::Index>(item)).transpose();
  return normalize_context(std::move(x));
}

}  // namespace ubmbandit
