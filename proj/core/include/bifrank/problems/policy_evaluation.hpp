#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "bifrank/oracles.hpp"

namespace bifrank::problems {

/// Policy evaluation with linear value features:
///
///   min_{||w||_1 <= alpha}  sum_s (phi_s^T w - q_s(w))^2
///   q_s(w) = sum_s' P^pi(s'|s) (r(s, s') + gamma phi_s'^T w)
///
/// written as f(h(w)) with h_s(w) = phi_s^T w - q_s(w) and f(y) = ||y||^2.
struct PolicyEvalProblem {
  int S = 0;
  int A = 0;
  /// P[a](s, s') = P(s' | s, a).
  std::vector<Eigen::MatrixXd> P;
  Eigen::MatrixXd policy;   // S x A
  Eigen::MatrixXd rewards;  // S x S, r(s, s')
  double gamma = 0.9;
  Eigen::MatrixXd Phi;  // S x m
  double alpha = 0.1;
  /// sample_h and vjp_h return exact expectations instead of samples.
  bool deterministic_mode = false;

  /// Throws ConfigError on shape mismatches, rows not summing to 1 within
  /// 1e-12, negative probabilities or gamma outside (0, 1).
  void validate() const;
  [[nodiscard]] Eigen::Index features() const { return Phi.cols(); }
  /// P^pi(s, s') = sum_a pi(a|s) P(s'|s, a).
  [[nodiscard]] Eigen::MatrixXd policy_kernel() const;
};

struct PolicyEvalSetup {
  int S = 100;
  int A = 3;
  Eigen::Index m = 100;
  double favored_prob = 0.9;
  double gamma = 0.9;
  double alpha = 0.1;
};

/// Random MDP: transition rows uniform in [0, 1] then normalized, rewards
/// uniform in [0, 1], one favored action per state drawn uniformly with the
/// remaining mass split evenly, feature rows standard normal scaled to unit norm.
PolicyEvalProblem random_policy_eval(const PolicyEvalSetup& setup, RngStream& rng);

/// One-state self loop with reward r and feature phi.
PolicyEvalProblem single_state_chain(double reward, double gamma, double phi, double alpha);

/// Samples draw one next state per state from P^pi(.|s) by inverse CDF.
/// sample_h and vjp_h with equal stream state see the same next states.
class PolicyEvalOracle final : public CompositionalOracle, private ExactCompositionalModel {
 public:
  explicit PolicyEvalOracle(PolicyEvalProblem problem);

  [[nodiscard]] const PolicyEvalProblem& problem() const { return problem_; }
  [[nodiscard]] const Eigen::MatrixXd& kernel() const { return kernel_; }

  [[nodiscard]] Shape outer_shape() const override { return {problem_.Phi.cols(), 1}; }
  [[nodiscard]] Shape map_shape() const override { return {problem_.S, 1}; }
  /// Bound on E||h(w; xi) - h(w)||^2 over ||w||_1 <= alpha.
  [[nodiscard]] double sigma_h_sq() const override;

  [[nodiscard]] Point sample_h(const Point& x, RngStream& xi) const override;
  [[nodiscard]] Point vjp_h(const Point& x, const Point& u, RngStream& xi) const override;
  [[nodiscard]] Point grad_f(const Point& y, RngStream& theta) const override;

  [[nodiscard]] const ExactCompositionalModel* exact() const override { return this; }
  [[nodiscard]] const ExactCompositionalModel& model() const { return *this; }

  /// Exact Bellman values (I - gamma P^pi)^{-1} P^pi-weighted rewards.
  [[nodiscard]] Eigen::VectorXd bellman_values() const;

 private:
  [[nodiscard]] Point h(const Point& x) const override;
  [[nodiscard]] Point vjp(const Point& x, const Point& u) const override;
  [[nodiscard]] Point grad_f(const Point& y) const override;
  [[nodiscard]] double f(const Point& y) const override;

  [[nodiscard]] std::vector<int> next_states(RngStream& xi) const;

  PolicyEvalProblem problem_;
  Eigen::MatrixXd kernel_;      // P^pi
  Eigen::MatrixXd cdf_;         // row-wise cumulative P^pi
  Eigen::VectorXd mean_reward_;  // sum_s' P^pi(s, s') r(s, s')
};

/// Reference solution: SCFW on the deterministic version of the problem for
/// `budget` iterations, final iterate.
Point reference_w_star(const PolicyEvalProblem& problem, std::uint64_t budget = 100000);

}  // namespace bifrank::problems
