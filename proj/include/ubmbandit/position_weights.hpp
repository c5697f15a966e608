#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace ubmbandit {

// Examination probabilities w[k][k'] of the user browsing model: the chance a
// user looks at position k (1-based) given that the last click above it was
// at position k' (0 when nothing above was clicked).
//
// Entries are stored flat in the same order as the slot vector used by the
// replay estimator: [w(1,0), w(2,0), w(2,1), w(3,0), ..., w(K,K-1)].
class PositionWeights {
 public:
  PositionWeights() = default;
  explicit PositionWeights(int list_length, double fill = 1.0);

  // rows[k-1] holds w(k,0..k-1).
  static PositionWeights from_rows(const std::vector<std::vector<double>>& rows);

  // w(k,k') = decay^(k-k'-1). Satisfies both monotonicity conditions and has
  // w(k,k-1) = 1, hence phi' = K.
  static PositionWeights geometric(int list_length, double decay);

  int list_length() const { return list_length_; }
  std::size_t slot_count() const { return tilde_.size(); }

  double at(int k, int k_prime) const;
  void set(int k, int k_prime, double value);

  static std::size_t slot_index(int k, int k_prime);
  // Inverse of slot_index: returns {k, k'}.
  static std::pair<int, int> slot_position(std::size_t index);

  const std::vector<double>& tilde() const { return tilde_; }
  std::vector<std::vector<double>> rows() const;

  // phi' = sum_k w(k,k-1)^2.
  double phi_prime() const;

  // Human-readable description of every violated ordering, empty when the
  // table is monotone in both k and k'. Entries outside [0,1] are reported too.
  std::vector<std::string> violations(double tolerance = 0.0) const;
  bool is_monotone(double tolerance = 0.0) const { return violations(tolerance).empty(); }

  nlohmann::json to_json() const;
  static PositionWeights from_json(const nlohmann::json& j);

  bool operator==(const PositionWeights&) const = default;

 private:
  void check_position(int k, int k_prime) const;

  int list_length_ = 0;
  std::vector<double> tilde_;
};

void save_weights(const std::filesystem::path& path, const PositionWeights& weights);
PositionWeights load_weights(const std::filesystem::path& path);

}  // namespace ubmbandit
