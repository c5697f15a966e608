#include "ubmbandit/position_weights.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ubmbandit {

PositionWeights::PositionWeights(int list_length, double fill) : list_length_(list_length) {
  if (list_length < 1) {
    throw std::invalid_argument("PositionWeights: list length must be >= 1");
  }
  if (!(fill >= 0.0 && fill <= 1.0)) {
    throw std::invalid_argument("PositionWeights: fill value outside [0,1]");
  }
  tilde_.assign(static_cast<std::size_t>(list_length) * (list_length + 1) / 2, fill);
}

PositionWeights PositionWeights::from_rows(const std::vector<std::vector<double>>& rows) {
  PositionWeights w(static_cast<int>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != r + 1) {
      throw std::invalid_argument("PositionWeights: row " + std::to_string(r + 1) + " has " +
                                  std::to_string(rows[r].size()) + " entries, expected " +
                                  std::to_string(r + 1));
    }
    for (std::size_t c = 0; c <= r; ++c) {
      w.set(static_cast<int>(r) + 1, static_cast<int>(c), rows[r][c]);
    }
  }
  return w;
}

PositionWeights PositionWeights::geometric(int list_length, double decay) {
  if (!(decay > 0.0 && decay <= 1.0)) {
    throw std::invalid_argument("PositionWeights::geometric: decay must lie in (0,1]");
  }
  PositionWeights w(list_length);
  for (int k = 1; k <= list_length; ++k) {
    for (int kp = 0; kp < k; ++kp) {
      w.set(k, kp, std::pow(decay, k - kp - 1));
    }
  }
  return w;
}

std::size_t PositionWeights::slot_index(int k, int k_prime) {
  return static_cast<std::size_t>(k) * (k - 1) / 2 + static_cast<std::size_t>(k_prime);
}

std::pair<int, int> PositionWeights::slot_position(std::size_t index) {
  int k = 1;
  while (slot_index(k + 1, 0) <= index) ++k;
  return {k, static_cast<int>(index - slot_index(k, 0))};
}

void PositionWeights::check_position(int k, int k_prime) const {
  if (k < 1 || k > list_length_ || k_prime < 0 || k_prime >= k) {
    throw std::invalid_argument("PositionWeights: invalid slot (k=" + std::to_string(k) +
                                ", k'=" + std::to_string(k_prime) + ") for K=" +
                                std::to_string(list_length_));
  }
}

double PositionWeights::at(int k, int k_prime) const {
  check_position(k, k_prime);
  return tilde_[slot_index(k, k_prime)];
}

void PositionWeights::set(int k, int k_prime, double value) {
  check_position(k, k_prime);
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::invalid_argument("PositionWeights: w(" + std::to_string(k) + "," +
                                std::to_string(k_prime) + ") outside [0,1]");
  }
  tilde_[slot_index(k, k_prime)] = value;
}

std::vector<std::vector<double>> PositionWeights::rows() const {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(list_length_));
  for (int k = 1; k <= list_length_; ++k) {
    for (int kp = 0; kp < k; ++kp) out[k - 1].push_back(at(k, kp));
  }
  return out;
}

double PositionWeights::phi_prime() const {
  double sum = 0.0;
  for (int k = 1; k <= list_length_; ++k) {
    const double w = at(k, k - 1);
    sum += w * w;
  }
  return sum;
}

std::vector<std::string> PositionWeights::violations(double tolerance) const {
  std::vector<std::string> out;
  auto fmt = [](int k, int kp) {
    return "w(" + std::to_string(k) + "," + std::to_string(kp) + ")";
  };
  for (int k = 1; k <= list_length_; ++k) {
    for (int kp = 0; kp < k; ++kp) {
      const double v = at(k, kp);
      if (v < 0.0 || v > 1.0) out.push_back(fmt(k, kp) + " outside [0,1]");
    }
  }
  // Fixed last click j: examination decays with distance below it.
  for (int j = 0; j < list_length_; ++j) {
    for (int k = j + 1; k < list_length_; ++k) {
      if (at(k + 1, j) > at(k, j) + tolerance) {
        out.push_back(fmt(k + 1, j) + " > " + fmt(k, j));
      }
    }
  }
  // Fixed position k: a closer last click means more examination.
  for (int k = 2; k <= list_length_; ++k) {
    for (int kp = 1; kp < k; ++kp) {
      if (at(k, kp - 1) > at(k, kp) + tolerance) {
        out.push_back(fmt(k, kp - 1) + " > " + fmt(k, kp));
      }
    }
  }
  return out;
}

nlohmann::json PositionWeights::to_json() const {
  return nlohmann::json{{"K", list_length_}, {"w", rows()}};
}

PositionWeights PositionWeights::from_json(const nlohmann::json& j) {
  const int k = j.at("K").get<int>();
  auto rows = j.at("w").get<std::vector<std::vector<double>>>();
  if (static_cast<int>(rows.size()) != k) {
    throw std::invalid_argument("weights JSON: K=" + std::to_string(k) + " but " +
                                std::to_string(rows.size()) + " rows");
  }
  return from_rows(rows);
}

void save_weights(const std::filesystem::path& path, const PositionWeights& weights) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << weights.to_json().dump(2) << '\n';
}

PositionWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return PositionWeights::from_json(nlohmann::json::parse(in));
}

}  // namespace ubmbandit
