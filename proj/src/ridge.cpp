#include "ubmbandit/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ubmbandit {

RidgeState::RidgeState(int dim, double lambda) : dim_(dim), lambda_(lambda) {
  if (dim < 1) throw std::invalid_argument("ridge_init: dimension must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("ridge_init: lambda must be positive");
  a_ = lambda * Eigen::MatrixXd::Identity(dim, dim);
  a_inv_ = (1.0 / lambda) * Eigen::MatrixXd::Identity(dim, dim);
  b_ = Eigen::VectorXd::Zero(dim);
  theta_ = Eigen::VectorXd::Zero(dim);
}

RidgeState RidgeState::restore(double lambda, Eigen::MatrixXd a, Eigen::MatrixXd a_inv,
                               Eigen::VectorXd b, Eigen::VectorXd theta,
                               std::uint64_t update_count) {
  const auto d = a.rows();
  if (d < 1 || a.cols() != d || a_inv.rows() != d || a_inv.cols() != d || b.size() != d ||
      theta.size() != d) {
    throw std::invalid_argument("RidgeState::restore: inconsistent dimensions");
  }
  RidgeState s;
  s.dim_ = static_cast<int>(d);
  s.lambda_ = lambda;
  s.a_ = std::move(a);
  s.a_inv_ = std::move(a_inv);
  s.b_ = std::move(b);
  s.theta_ = std::move(theta);
  s.update_count_ = update_count;
  return s;
}

void RidgeState::check_dim(const Context& x, const char* where) const {
  if (x.size() != dim_) {
    throw std::invalid_argument(std::string(where) + ": context dimension " +
                                std::to_string(x.size()) + " != " + std::to_string(dim_));
  }
}

void RidgeState::update(std::span<const RidgeSample> samples) {
  for (const auto& s : samples) check_dim(s.x, "ridge_update");
  if (samples.empty()) return;

  Eigen::VectorXd u(dim_);
  Eigen::VectorXd au(dim_);
  for (const auto& s : samples) {
    if (s.weight == 0.0) continue;
    u.noalias() = s.weight * s.x;
    a_.noalias() += u * u.transpose();
    b_.noalias() += (s.weight * s.reward) * s.x;
    ++update_count_;
    if (update_count_ % kRefactorInterval == 0) {
      Eigen::LLT<Eigen::MatrixXd> llt(a_);
      a_inv_ = llt.solve(Eigen::MatrixXd::Identity(dim_, dim_));
    } else {
      au.noalias() = a_inv_ * u;
      a_inv_.noalias() -= (au * au.transpose()) / (1.0 + u.dot(au));
    }
  }
  theta_.noalias() = a_inv_ * b_;
}

void RidgeState::refactorize() {
  Eigen::LLT<Eigen::MatrixXd> llt(a_);
  a_inv_ = llt.solve(Eigen::MatrixXd::Identity(dim_, dim_));
  theta_.noalias() = a_inv_ * b_;
}

double RidgeState::variance(const Context& x) const {
  check_dim(x, "ucb_index");
  return std::max(0.0, x.dot(a_inv_ * x));
}

double RidgeState::ucb_index(const Context& x, double alpha) const {
  if (alpha < 0.0) throw std::invalid_argument("ucb_index: alpha must be >= 0");
  return theta_.dot(x) + alpha * std::sqrt(variance(x));
}

void AlphaParams::validate() const {
  if (dim < 1) throw std::invalid_argument("AlphaParams: dimension must be >= 1");
  if (list_length < 1) throw std::invalid_argument("AlphaParams: K must be >= 1");
  if (lambda < phi_prime) throw std::invalid_argument("AlphaParams: lambda < phi'");
  if (lambda < 1.0) throw std::invalid_argument("AlphaParams: lambda < 1");
  if (!(beta > 0.0)) throw std::invalid_argument("AlphaParams: beta must be positive");
}

AlphaParams make_alpha_params(int dim, double phi_prime, int list_length, std::uint64_t horizon,
                              double beta) {
  AlphaParams p;
  p.dim = dim;
  p.phi_prime = phi_prime;
  p.lambda = std::max(1.0, phi_prime);
  p.beta = beta > 0.0 ? beta : static_cast<double>(dim);
  p.list_length = list_length;
  p.horizon = horizon;
  p.validate();
  return p;
}

double alpha_schedule(const AlphaParams& params, std::uint64_t t) {
  if (t == 0) throw std::invalid_argument("alpha_schedule: round index must be >= 1");
  const double d = params.dim;
  const double td = static_cast<double>(t);
  const double inner = d * std::log1p(params.phi_prime * td / (d * params.lambda)) +
                       2.0 * std::log(td * params.list_length);
  return std::sqrt(inner) + std::sqrt(params.lambda * params.beta);
}

double regret_bound(const AlphaParams& params, std::uint64_t t, bool with_failure_term) {
  const double d = params.dim;
  const double td = static_cast<double>(t);
  const double width = std::sqrt(2.0 * td * params.list_length * d *
                                 std::log1p(params.phi_prime * td / (params.lambda * d)));
  return 2.0 * alpha_schedule(params, t) * width + (with_failure_term ? 1.0 : 0.0);
}

}  // namespace ubmbandit
