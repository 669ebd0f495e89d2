#include "bifrank/problems/policy_evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include <Eigen/LU>

#include "bifrank/constraint_set.hpp"
#include "bifrank/errors.hpp"
#include "bifrank/solvers.hpp"

namespace bifrank::problems {

namespace {

constexpr double kRowSumTol = 1e-12;

void require_stochastic_rows(const Eigen::MatrixXd& m, const std::string& what) {
  if ((m.array() < 0.0).any()) throw ConfigError(what + " has negative entries");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (std::abs(m.row(i).sum() - 1.0) > kRowSumTol) {
      throw ConfigError(what + " row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

}  // namespace

void PolicyEvalProblem::validate() const {
  if (S < 1 || A < 1) throw ConfigError("policy eval: need at least one state and one action");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("policy eval: gamma must lie in (0, 1)");
  if (!(alpha > 0.0)) throw ConfigError("policy eval: alpha must be positive");
  if (static_cast<int>(P.size()) != A) throw ConfigError("policy eval: need one kernel per action");
  for (int a = 0; a < A; ++a) {
    if (P[a].rows() != S || P[a].cols() != S) throw ConfigError("policy eval: kernel must be S x S");
    require_stochastic_rows(P[a], "policy eval: transition kernel");
  }
  if (policy.rows() != S || policy.cols() != A) throw ConfigError("policy eval: policy must be S x A");
  require_stochastic_rows(policy, "policy eval: policy");
  if (rewards.rows() != S || rewards.cols() != S) throw ConfigError("policy eval: rewards must be S x S");
  if (!rewards.allFinite()) throw ConfigError("policy eval: non-finite rewards");
  if (Phi.rows() != S || Phi.cols() < 1) throw ConfigError("policy eval: features must be S x m");
  if (!Phi.allFinite()) throw ConfigError("policy eval: non-finite features");
}

Eigen::MatrixXd PolicyEvalProblem::policy_kernel() const {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(S, S);
  for (int a = 0; a < A; ++a) k += policy.col(a).asDiagonal() * P[a];
  return k;
}

PolicyEvalProblem random_policy_eval(const PolicyEvalSetup& setup, RngStream& rng) {
  if (setup.S < 1 || setup.A < 1 || setup.m < 1) {
    throw ConfigError("policy eval: S, A and m must be positive");
  }
  if (!(setup.favored_prob > 0.0 && setup.favored_prob <= 1.0)) {
    throw ConfigError("policy eval: favored action probability must lie in (0, 1]");
  }
  PolicyEvalProblem p;
  p.S = setup.S;
  p.A = setup.A;
  p.gamma = setup.gamma;
  p.alpha = setup.alpha;
  p.P.assign(setup.A, Eigen::MatrixXd(setup.S, setup.S));
  for (int a = 0; a < setup.A; ++a) {
    for (int s = 0; s < setup.S; ++s) {
      for (int n = 0; n < setup.S; ++n) p.P[a](s, n) = rng.uniform();
      p.P[a].row(s) /= p.P[a].row(s).sum();
    }
  }
  p.policy.resize(setup.S, setup.A);
  const double rest = setup.A > 1 ? (1.0 - setup.favored_prob) / (setup.A - 1) : 0.0;
  for (int s = 0; s < setup.S; ++s) {
    const auto favored = static_cast<Eigen::Index>(rng.uniform_index(setup.A));
    p.policy.row(s).setConstant(rest);
    p.policy(s, favored) = setup.A > 1 ? setup.favored_prob : 1.0;
  }
  p.rewards.resize(setup.S, setup.S);
  for (int n = 0; n < setup.S; ++n) {
    for (int s = 0; s < setup.S; ++s) p.rewards(s, n) = rng.uniform();
  }
  p.Phi.resize(setup.S, setup.m);
  for (int s = 0; s < setup.S; ++s) {
    for (Eigen::Index j = 0; j < setup.m; ++j) p.Phi(s, j) = rng.normal();
    p.Phi.row(s).normalize();
  }
  p.validate();
  return p;
}

PolicyEvalProblem single_state_chain(double reward, double gamma, double phi, double alpha) {
  PolicyEvalProblem p;
  p.S = 1;
  p.A = 1;
  p.P = {Eigen::MatrixXd::Ones(1, 1)};
  p.policy = Eigen::MatrixXd::Ones(1, 1);
  p.rewards = Eigen::MatrixXd::Constant(1, 1, reward);
  p.gamma = gamma;
  p.Phi = Eigen::MatrixXd::Constant(1, 1, phi);
  p.alpha = alpha;
  p.validate();
  return p;
}

PolicyEvalOracle::PolicyEvalOracle(PolicyEvalProblem problem) : problem_(std::move(problem)) {
  problem_.validate();
  kernel_ = problem_.policy_kernel();
  cdf_ = kernel_;
  for (Eigen::Index s = 0; s < cdf_.rows(); ++s) {
    for (Eigen::Index n = 1; n < cdf_.cols(); ++n) cdf_(s, n) += cdf_(s, n - 1);
  }
  mean_reward_ = kernel_.cwiseProduct(problem_.rewards).rowwise().sum();
}

double PolicyEvalOracle::sigma_h_sq() const {
  if (problem_.deterministic_mode) return 0.0;
  // Each component is a bounded variable with range at most span; its
  // variance is at most span^2 / 4.
  const double r_span = problem_.rewards.maxCoeff() - problem_.rewards.minCoeff();
  const double phi_max = problem_.Phi.cwiseAbs().maxCoeff();
  const double span = r_span + 2.0 * problem_.gamma * problem_.alpha * phi_max;
  return problem_.S * span * span / 4.0;
}

std::vector<int> PolicyEvalOracle::next_states(RngStream& xi) const {
  std::vector<int> out(problem_.S);
  for (int s = 0; s < problem_.S; ++s) {
    const double u = xi.uniform();
    const auto row = cdf_.row(s);
    int n = 0;
    while (n + 1 < problem_.S && row(n) <= u) ++n;
    out[s] = n;
  }
  return out;
}

Point PolicyEvalOracle::sample_h(const Point& x, RngStream& xi) const {
  if (problem_.deterministic_mode) return h(x);
  const auto next = next_states(xi);
  const Eigen::VectorXd v = problem_.Phi * x.flat();
  Point out(map_shape());
  for (int s = 0; s < problem_.S; ++s) {
    out.flat()(s) = v(s) - (problem_.rewards(s, next[s]) + problem_.gamma * v(next[s]));
  }
  return out;
}

Point PolicyEvalOracle::vjp_h(const Point& x, const Point& u, RngStream& xi) const {
  if (problem_.deterministic_mode) return vjp(x, u);
  const auto next = next_states(xi);
  // sum_s u_s (phi_s - gamma phi_{next(s)})
  Eigen::VectorXd weights = u.flat();
  for (int s = 0; s < problem_.S; ++s) weights(next[s]) -= problem_.gamma * u.flat()(s);
  return Point::from_vector(problem_.Phi.transpose() * weights);
}

Point PolicyEvalOracle::grad_f(const Point& y, RngStream&) const { return grad_f(y); }

Point PolicyEvalOracle::h(const Point& x) const {
  const Eigen::VectorXd v = problem_.Phi * x.flat();
  return Point::from_vector(v - mean_reward_ - problem_.gamma * kernel_ * v);
}

Point PolicyEvalOracle::vjp(const Point&, const Point& u) const {
  const Eigen::VectorXd weights = u.flat() - problem_.gamma * kernel_.transpose() * u.flat();
  return Point::from_vector(problem_.Phi.transpose() * weights);
}

Point PolicyEvalOracle::grad_f(const Point& y) const {
  Point g = y;
  g.flat() *= 2.0;
  return g;
}

double PolicyEvalOracle::f(const Point& y) const { return y.flat().squaredNorm(); }

Eigen::VectorXd PolicyEvalOracle::bellman_values() const {
  const Eigen::MatrixXd a =
      Eigen::MatrixXd::Identity(problem_.S, problem_.S) - problem_.gamma * kernel_;
  return a.partialPivLu().solve(mean_reward_);
}

Point reference_w_star(const PolicyEvalProblem& problem, std::uint64_t budget) {
  PolicyEvalProblem exact = problem;
  exact.deterministic_mode = true;
  const PolicyEvalOracle oracle(std::move(exact));
  const ConstraintSet set = ConstraintSet::l1_ball(problem.features(), problem.alpha);
  SolverConfig config;
  config.algorithm = Algorithm::Scfw;
  config.horizon = budget;
  config.cadence = budget;
  config.output = OutputRule::LastIterate;
  const RunResult run = run_scfw(oracle, set, config);
  if (run.aborted) throw NumericError("reference_w_star: " + run.abort_reason);
  return run.last;
}

}  // namespace bifrank::problems
