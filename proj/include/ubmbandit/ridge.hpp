#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "ubmbandit/types.hpp"

namespace ubmbandit {

// One weighted observation: the context enters the design matrix as w*x.
struct RidgeSample {
  double weight = 1.0;
  Context x;
  double reward = 0.0;
};

// Online weighted ridge regression
//   A = lambda*I + sum w^2 x x^T,  b = sum w r x,  theta = A^{-1} b.
//
// A^{-1} is maintained with Sherman-Morrison rank-one updates and rebuilt
// from a Cholesky factorization of A every kRefactorInterval updates.
class RidgeState {
 public:
  static constexpr std::uint64_t kRefactorInterval = 1000;

  RidgeState(int dim, double lambda);

  // Applies all samples, then refreshes theta. Equivalent to applying them one
  // at a time. Samples with zero weight are no-ops.
  void update(std::span<const RidgeSample> samples);
  void update(const RidgeSample& sample) { update(std::span<const RidgeSample>(&sample, 1)); }

  // theta^T x + alpha * sqrt(x^T A^{-1} x)
  double ucb_index(const Context& x, double alpha) const;

  // x^T A^{-1} x
  double variance(const Context& x) const;

  // Rebuilds A^{-1} from A and refreshes theta.
  void refactorize();

  int dim() const { return dim_; }
  double lambda() const { return lambda_; }
  const Eigen::MatrixXd& a() const { return a_; }
  const Eigen::MatrixXd& a_inv() const { return a_inv_; }
  const Eigen::VectorXd& b() const { return b_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  std::uint64_t update_count() const { return update_count_; }

  // Reassembles a state from serialized parts without recomputation, so a
  // restored state is bit-identical to the one that was saved.
  static RidgeState restore(double lambda, Eigen::MatrixXd a, Eigen::MatrixXd a_inv,
                            Eigen::VectorXd b, Eigen::VectorXd theta, std::uint64_t update_count);

 private:
  RidgeState() = default;
  void check_dim(const Context& x, const char* where) const;

  int dim_ = 0;
  double lambda_ = 1.0;
  Eigen::MatrixXd a_;
  Eigen::MatrixXd a_inv_;
  Eigen::VectorXd b_;
  Eigen::VectorXd theta_;
  std::uint64_t update_count_ = 0;
};

// Confidence-width schedule parameters. lambda must dominate both phi' and 1.
struct AlphaParams {
  int dim = 1;
  double lambda = 1.0;
  double beta = 1.0;  // bound on ||theta*||^2
  double phi_prime = 1.0;
  int list_length = 1;
  std::uint64_t horizon = 1;

  // Throws std::invalid_argument when lambda < phi', lambda < 1 or beta <= 0.
  void validate() const;
};

// lambda = max(1, phi'), beta = d unless given.
AlphaParams make_alpha_params(int dim, double phi_prime, int list_length,
                              std::uint64_t horizon = 1, double beta = 0.0);

// sqrt(d ln(1 + phi' t / (d lambda)) + 2 ln(t K)) + sqrt(lambda beta), t >= 1.
double alpha_schedule(const AlphaParams& params, std::uint64_t t);

// Regret bound 2 alpha_T sqrt(2 T K d ln(1 + phi' T / (lambda d))), plus one
// for the failure-probability term when requested.
double regret_bound(const AlphaParams& params, std::uint64_t t, bool with_failure_term = true);

}  // namespace ubmbandit
