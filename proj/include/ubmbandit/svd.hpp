#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace ubmbandit {

// M ~= U diag(S) V^T with `rank` columns.
struct FeatureFactorization {
  Eigen::MatrixXd u;  // rows x rank
  Eigen::VectorXd s;  // rank, descending
  Eigen::MatrixXd v;  // cols x rank
  int rank() const { return static_cast<int>(s.size()); }
};

struct SvdOptions {
  int oversampling = 10;
  int power_iterations = 2;
  std::uint64_t seed = 0;
};

// Randomized truncated SVD: Gaussian range finder with re-orthonormalized
// power iterations, then an exact SVD of the small projected matrix.
// Throws std::invalid_argument when rank is outside [1, min(rows, cols)].
FeatureFactorization truncated_svd(const Eigen::MatrixXd& m, int rank, const SvdOptions& options = {});

}  // namespace ubmbandit
