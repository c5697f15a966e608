#include "ubmbandit/svd.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "ubmbandit/rng.hpp"

namespace ubmbandit {
namespace {

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

}  // namespace

FeatureFactorization truncated_svd(const Eigen::MatrixXd& m, int rank, const SvdOptions& options) {
  const auto min_dim = std::min(m.rows(), m.cols());
  if (rank < 1 || rank > min_dim) {
    throw std::invalid_argument("truncated_svd: rank " + std::to_string(rank) +
                                " outside [1, " + std::to_string(min_dim) + "]");
  }
  if (options.oversampling < 0 || options.power_iterations < 0) {
    throw std::invalid_argument("truncated_svd: negative oversampling or power iterations");
  }
  const auto width = std::min<Eigen::Index>(rank + options.oversampling, min_dim);

  CounterRng rng(options.seed);
  Eigen::MatrixXd omega(m.cols(), width);
  for (Eigen::Index c = 0; c < omega.cols(); ++c)
    for (Eigen::Index r = 0; r < omega.rows(); ++r) omega(r, c) = rng.normal();

  Eigen::MatrixXd q = orthonormal_basis(m * omega);
  for (int i = 0; i < options.power_iterations; ++i) {
    const Eigen::MatrixXd z = orthonormal_basis(m.transpose() * q);
    q = orthonormal_basis(m * z);
  }

  const Eigen::MatrixXd b = q.transpose() * m;  // width x cols
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);

  FeatureFactorization f;
  f.u = q * svd.matrixU().leftCols(rank);
  f.s = svd.singularValues().head(rank);
  f.v = svd.matrixV().leftCols(rank);
  return f;
}

}  // namespace ubmbandit
