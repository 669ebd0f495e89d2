#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "bifrank/ingest.hpp"
#include "bifrank/oracles.hpp"

namespace bifrank::problems {

struct ObservedEntry {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double value = 0.0;
};

/// Matrix completion with denoising:
///
///   min_{||X||_* <= alpha}  1/|Omega| sum_Omega (X_ij - Y_ij)^2
///   Y = argmin_V  1/|Omega| sum_Omega (V_ij - M_ij)^2 + lambda1 psi(V) + lambda2 ||X - V||_F^2
///
/// psi is the pseudo-Huber sum sqrt(v^2 + eps^2) - eps over all entries, or
/// the plain l1 norm with a subgradient when smooth_l1 is false. Both levels
/// use the same observed set Omega.
struct MatrixCompletionProblem {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<ObservedEntry> omega;  // unique (row, col) pairs
  double lambda1 = 0.05;
  double lambda2 = 0.05;
  double alpha = 1.0;
  double epsilon_l1 = 1e-3;
  bool smooth_l1 = true;
  std::size_t batch_outer = 50;
  std::size_t batch_inner = 50;
  /// Declared variance bound of the inner gradient sample (enters a0 only).
  double sigma_g_sq = 0.0;

  /// Throws ConfigError on inconsistent fields or out-of-range entries.
  void validate() const;
  /// M on Omega, zero elsewhere.
  [[nodiscard]] Eigen::MatrixXd observed_matrix() const;
};

struct SyntheticMatrixCompletion {
  MatrixCompletionProblem problem;
  Eigen::MatrixXd truth;     // X = W W^T
  Eigen::MatrixXd observed;  // M = X + noise_factor (L + L^T)
};

/// W (n x r) and L (n x n) standard normal; each entry observed with
/// probability observe_prob; alpha = ||W W^T||_*.
SyntheticMatrixCompletion matcomp_synthetic(Eigen::Index n, Eigen::Index r, double noise_factor,
                                            double observe_prob, RngStream& rng);

/// Builds a problem from a ratings dataset: rows are users, columns items.
/// alpha defaults to the nuclear norm of the observed matrix.
MatrixCompletionProblem matcomp_from_ratings(const RatingsDataset& dataset,
                                             std::optional<double> alpha = std::nullopt);

/// sum_Omega (X - R)^2 / sum_Omega R^2 with R = reference. Throws MetricError
/// on an empty set or zero denominator.
double normalized_error(const Eigen::MatrixXd& X, const Eigen::MatrixXd& reference,
                        const std::vector<ObservedEntry>& omega);
/// Same with R taken from the observed values.
double normalized_error(const Eigen::MatrixXd& X, const std::vector<ObservedEntry>& omega);

/// Bilevel oracle. Outer samples draw batch_outer entries with replacement
/// from theta, inner samples draw batch_inner entries from xi:
///
///   grad_x f = 2/|B1| sum_B1 (X - Y)_ij E_ij,  grad_y f = -grad_x f
///   grad_y g = 2/|B2| sum_B2 (Y - M)_ij E_ij + lambda1 psi'(Y) + 2 lambda2 (Y - X)
///   hvp_yy g = 2/|B2| sum_B2 v_ij E_ij + lambda1 psi''(Y) v + 2 lambda2 v
///   cross    = -2 lambda2 v
///
/// mu_g = 2 lambda2 and L_g = 2 + lambda1/eps + 2 lambda2 (lambda1/eps is
/// dropped in subgradient mode). The exact model averages over all of Omega.
class MatrixCompletionOracle final : public BilevelOracle, private ExactBilevelModel {
 public:
  explicit MatrixCompletionOracle(MatrixCompletionProblem problem);

  [[nodiscard]] const MatrixCompletionProblem& problem() const { return problem_; }

  [[nodiscard]] Shape outer_shape() const override { return {problem_.rows, problem_.cols}; }
  [[nodiscard]] Shape inner_shape() const override { return {problem_.rows, problem_.cols}; }
  [[nodiscard]] double mu_g() const override;
  [[nodiscard]] double L_g() const override;
  [[nodiscard]] double sigma_g_sq() const override { return problem_.sigma_g_sq; }

  [[nodiscard]] Point grad_x_f(const Point& x, const Point& y, RngStream& theta) const override;
  [[nodiscard]] Point grad_y_f(const Point& x, const Point& y, RngStream& theta) const override;
  [[nodiscard]] Point grad_y_g(const Point& x, const Point& y, RngStream& xi) const override;
  [[nodiscard]] Point hvp_yy_g(const Point& x, const Point& y, const Point& v,
                               RngStream& xi) const override;
  [[nodiscard]] Point cross_hvp_xy_g(const Point& x, const Point& y, const Point& v,
                                     RngStream& xi) const override;

  [[nodiscard]] const ExactBilevelModel* exact() const override { return this; }
  [[nodiscard]] const ExactBilevelModel& model() const { return *this; }

  /// X_1 = 0 and Y_1 = M on Omega, zero elsewhere.
  [[nodiscard]] Point initial_outer() const;
  [[nodiscard]] Point initial_inner() const;

 private:
  [[nodiscard]] Point grad_x_F(const Point& x, const Point& y) const override;
  [[nodiscard]] Point grad_y_F(const Point& x, const Point& y) const override;
  [[nodiscard]] Eigen::MatrixXd hess_yy_G(const Point& x, const Point& y) const override;
  [[nodiscard]] Eigen::MatrixXd hess_xy_G(const Point& x, const Point& y) const override;
  [[nodiscard]] double outer_value(const Point& x, const Point& y) const override;
  [[nodiscard]] double inner_value(const Point& x, const Point& y) const override;
  [[nodiscard]] Point grad_y_G(const Point& x, const Point& y) const override;
  [[nodiscard]] Point inner_optimum(const Point& x) const override;
  [[nodiscard]] double objective(const Point& x) const override;
  [[nodiscard]] Point surrogate_gradient(const Point& x, const Point& y) const override;

  [[nodiscard]] double psi(double v) const;
  [[nodiscard]] double psi_prime(double v) const;
  [[nodiscard]] double psi_second(double v) const;
  /// 2 lambda2 + lambda1 psi''(y), entrywise.
  [[nodiscard]] const Eigen::MatrixXd& regularizer_curvature(const Point& y) const;
  /// Diagonal of grad^2_yy G at y.
  [[nodiscard]] Eigen::MatrixXd inner_curvature(const Point& y) const;

  MatrixCompletionProblem problem_;
  Eigen::MatrixXd mask_;      // 1 on Omega
  Eigen::MatrixXd observed_;  // M on Omega
  std::uint64_t instance_id_;  // keys the per-thread curvature cache
};

/// Single-level objective 1/|Omega| sum_Omega (X_ij - M_ij)^2 with minibatch
/// gradients 2/|B| sum_B (X - M)_ij E_ij, for the SFW baseline.
class MatrixCompletionSingleLevel final : public StochasticOracle {
 public:
  explicit MatrixCompletionSingleLevel(MatrixCompletionProblem problem);

  [[nodiscard]] Shape shape() const override { return {problem_.rows, problem_.cols}; }
  [[nodiscard]] Point grad(const Point& x, RngStream& theta) const override;
  [[nodiscard]] bool has_exact() const override { return true; }
  [[nodiscard]] double objective(const Point& x) const override;
  [[nodiscard]] Point exact_grad(const Point& x) const override;

 private:
  MatrixCompletionProblem problem_;
};

}  // namespace bifrank::problems
