#pragma once

#include <functional>

#include <Eigen/Core>

#include "bifrank/constraint_set.hpp"
#include "bifrank/oracles.hpp"

namespace bifrank::problems {

/// Bilevel problem with quadratic levels and a closed-form inner solution:
///
///   g(x, y) = 1/2 (y - Cx - c)^T diag(a) (y - Cx - c)        y*(x) = Cx + c
///   f(x, y) = 1/2 ||y - Px - y0||^2 + beta/2 ||x - x0||^2 + q^T x
///
/// Noise: grad_y g gets N(0, inner_noise^2) per coordinate; Hessian samples
/// scale each a_i by (1 + u_i), u_i ~ U[-hessian_noise, hessian_noise];
/// outer gradients get N(0, outer_noise^2) per coordinate, drawn once per
/// theta sample and shared by grad_x f and grad_y f.
struct BilevelQuadraticSpec {
  Eigen::MatrixXd C;   // n x m
  Eigen::VectorXd c;   // n
  Eigen::VectorXd a;   // n, positive
  Eigen::MatrixXd P;   // n x m
  Eigen::VectorXd y0;  // n
  Eigen::VectorXd x0;  // m
  Eigen::VectorXd q;   // m
  double beta = 0.0;
  double inner_noise = 0.0;
  double hessian_noise = 0.0;  // in [0, 1)
  double outer_noise = 0.0;
};

/// Random instance: C, P with N(0, 1/m) entries, c, y0, x0 standard normal,
/// a uniform in [mu, L] with both endpoints attained, q = 0.
BilevelQuadraticSpec random_bilevel_quadratic(Eigen::Index m, Eigen::Index n, double mu, double L,
                                              double beta, RngStream& rng);

class BilevelQuadratic final : public BilevelOracle, private ExactBilevelModel {
 public:
  explicit BilevelQuadratic(BilevelQuadraticSpec spec);

  [[nodiscard]] const BilevelQuadraticSpec& spec() const { return spec_; }

  [[nodiscard]] Shape outer_shape() const override { return {spec_.C.cols(), 1}; }
  [[nodiscard]] Shape inner_shape() const override { return {spec_.C.rows(), 1}; }
  [[nodiscard]] double mu_g() const override { return mu_; }
  [[nodiscard]] double L_g() const override { return L_; }
  [[nodiscard]] double sigma_g_sq() const override;

  [[nodiscard]] Point grad_x_f(const Point& x, const Point& y, RngStream& theta) const override;
  [[nodiscard]] Point grad_y_f(const Point& x, const Point& y, RngStream& theta) const override;
  [[nodiscard]] Point grad_y_g(const Point& x, const Point& y, RngStream& xi) const override;
  [[nodiscard]] Point hvp_yy_g(const Point& x, const Point& y, const Point& v,
                               RngStream& xi) const override;
  [[nodiscard]] Point cross_hvp_xy_g(const Point& x, const Point& y, const Point& v,
                                     RngStream& xi) const override;

  [[nodiscard]] const ExactBilevelModel* exact() const override { return this; }
  [[nodiscard]] const ExactBilevelModel& model() const { return *this; }

  /// Lipschitz constant of grad Q.
  [[nodiscard]] double outer_smoothness() const;

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

  [[nodiscard]] Eigen::VectorXd outer_noise(RngStream& theta) const;

  BilevelQuadraticSpec spec_;
  double mu_ = 0.0;
  double L_ = 0.0;
};

/// Compositional problem with an affine inner map:
///
///   h(x; xi) = (H + map_noise Z) x + b + offset_noise z,   f(y) = 1/2 ||y - y0||^2
///
/// with Z, z standard normal. grad f(y; theta) adds N(0, outer_noise^2) per
/// coordinate.
struct CompositionalQuadraticSpec {
  Eigen::MatrixXd H;   // n x m
  Eigen::VectorXd b;   // n
  Eigen::VectorXd y0;  // n
  double map_noise = 0.0;
  double offset_noise = 0.0;
  double outer_noise = 0.0;
  /// Bound on ||x|| over the feasible set, used for the declared map variance.
  double x_norm_bound = 1.0;
};

class CompositionalQuadratic final : public CompositionalOracle, private ExactCompositionalModel {
 public:
  explicit CompositionalQuadratic(CompositionalQuadraticSpec spec);

  [[nodiscard]] const CompositionalQuadraticSpec& spec() const { return spec_; }

  [[nodiscard]] Shape outer_shape() const override { return {spec_.H.cols(), 1}; }
  [[nodiscard]] Shape map_shape() const override { return {spec_.H.rows(), 1}; }
  [[nodiscard]] double sigma_h_sq() const override;

  [[nodiscard]] Point sample_h(const Point& x, RngStream& xi) const override;
  [[nodiscard]] Point vjp_h(const Point& x, const Point& u, RngStream& xi) const override;
  [[nodiscard]] Point grad_f(const Point& y, RngStream& theta) const override;

  [[nodiscard]] const ExactCompositionalModel* exact() const override { return this; }
  [[nodiscard]] const ExactCompositionalModel& model() const { return *this; }

 private:
  [[nodiscard]] Point h(const Point& x) const override;
  [[nodiscard]] Point vjp(const Point& x, const Point& u) const override;
  [[nodiscard]] Point grad_f(const Point& y) const override;
  [[nodiscard]] double f(const Point& y) const override;

  CompositionalQuadraticSpec spec_;
};

/// Nonconvex compositional toy:
///
///   h(x; xi) = (A + map_noise Z) x,   f(y) = sum_i 1/4 (y_i^2 - 1)^2
///
/// grad f(y; theta) adds N(0, outer_noise^2) per coordinate.
struct NonconvexToySpec {
  Eigen::MatrixXd A;  // n x m
  double map_noise = 0.0;
  double outer_noise = 0.0;
  double x_norm_bound = 1.0;
};

class NonconvexCompositionalToy final : public CompositionalOracle,
                                        private ExactCompositionalModel {
 public:
  explicit NonconvexCompositionalToy(NonconvexToySpec spec);

  [[nodiscard]] Shape outer_shape() const override { return {spec_.A.cols(), 1}; }
  [[nodiscard]] Shape map_shape() const override { return {spec_.A.rows(), 1}; }
  [[nodiscard]] double sigma_h_sq() const override;

  [[nodiscard]] Point sample_h(const Point& x, RngStream& xi) const override;
  [[nodiscard]] Point vjp_h(const Point& x, const Point& u, RngStream& xi) const override;
  [[nodiscard]] Point grad_f(const Point& y, RngStream& theta) const override;

  [[nodiscard]] const ExactCompositionalModel* exact() const override { return this; }
  [[nodiscard]] const ExactCompositionalModel& model() const { return *this; }

 private:
  [[nodiscard]] Point h(const Point& x) const override;
  [[nodiscard]] Point vjp(const Point& x, const Point& u) const override;
  [[nodiscard]] Point grad_f(const Point& y) const override;
  [[nodiscard]] double f(const Point& y) const override;

  NonconvexToySpec spec_;
};

/// Single-level stochastic quadratic f(x) = 1/2 ||Bx - b||^2 + q^T x, with
/// N(0, noise^2) added to every gradient coordinate. B may have zero rows,
/// which gives a linear objective.
class StochasticQuadratic final : public StochasticOracle {
 public:
  StochasticQuadratic(Eigen::MatrixXd B, Eigen::VectorXd b, Eigen::VectorXd q, double noise);

  [[nodiscard]] Shape shape() const override { return {q_.size(), 1}; }
  [[nodiscard]] Point grad(const Point& x, RngStream& theta) const override;
  [[nodiscard]] bool has_exact() const override { return true; }
  [[nodiscard]] double objective(const Point& x) const override;
  [[nodiscard]] Point exact_grad(const Point& x) const override;

 private:
  Eigen::MatrixXd B_;
  Eigen::VectorXd b_;
  Eigen::VectorXd q_;
  double noise_;
};

/// Minimizer of a smooth convex function over `set` by accelerated projected
/// gradient (FISTA with restarts), starting from `x`.
Point projected_gradient_minimize(const std::function<Point(const Point&)>& grad,
                                  const ConstraintSet& set, Point x, double lipschitz,
                                  int iterations);

}  // namespace bifrank::problems
