#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "bifrank/point.hpp"
#include "bifrank/rng.hpp"

namespace bifrank {

/// Stochastic first-order oracle calls, one counter per call kind.
struct OracleCallCounter {
  std::uint64_t outer = 0;    // grad_x f, grad_y f, grad f (compositional and single-level)
  std::uint64_t inner = 0;    // grad_y g, vjp of the inner map
  std::uint64_t hessian = 0;  // Hessian-vector products (yy and xy)
  std::uint64_t map = 0;      // inner-map samples h(x, xi)

  [[nodiscard]] std::uint64_t total() const { return outer + inner + hessian + map; }
  friend bool operator==(const OracleCallCounter&, const OracleCallCounter&) = default;
};

class ExactBilevelModel;
class ExactCompositionalModel;

/// Sampling oracle for min_x F(x, y*(x)) s.t. y*(x) = argmin_y G(x, y), with
/// F = E_theta f(x, y; theta) and G = E_xi g(x, y; xi).
///
/// Every sampling method draws its randomness from the stream it is given and
/// from nowhere else, so the same stream position reproduces the same sample.
/// Implementations are read-only and may be shared between concurrent runs.
class BilevelOracle {
 public:
  virtual ~BilevelOracle() = default;

  [[nodiscard]] virtual Shape outer_shape() const = 0;
  [[nodiscard]] virtual Shape inner_shape() const = 0;
  [[nodiscard]] virtual double mu_g() const = 0;
  [[nodiscard]] virtual double L_g() const = 0;
  /// Variance bound of grad_y g; enters the inner step scale.
  [[nodiscard]] virtual double sigma_g_sq() const { return 0.0; }

  [[nodiscard]] virtual Point grad_x_f(const Point& x, const Point& y, RngStream& theta) const = 0;
  [[nodiscard]] virtual Point grad_y_f(const Point& x, const Point& y, RngStream& theta) const = 0;
  [[nodiscard]] virtual Point grad_y_g(const Point& x, const Point& y, RngStream& xi) const = 0;
  /// Sampled grad^2_yy g(x, y; xi) v. Linear in v for a fixed draw.
  [[nodiscard]] virtual Point hvp_yy_g(const Point& x, const Point& y, const Point& v,
                                       RngStream& xi) const = 0;
  /// Sampled grad^2_xy g(x, y; xi) v, an outer-shaped point.
  [[nodiscard]] virtual Point cross_hvp_xy_g(const Point& x, const Point& y, const Point& v,
                                             RngStream& xi) const = 0;

  /// Population quantities, when the problem has them in closed form.
  [[nodiscard]] virtual const ExactBilevelModel* exact() const { return nullptr; }
};

/// Closed-form population pieces of a bilevel problem.
class ExactBilevelModel {
 public:
  virtual ~ExactBilevelModel() = default;

  [[nodiscard]] virtual Point grad_x_F(const Point& x, const Point& y) const = 0;
  [[nodiscard]] virtual Point grad_y_F(const Point& x, const Point& y) const = 0;
  /// Dense grad^2_yy G on the flattened inner variable (n x n).
  /// The default throws CapabilityError.
  [[nodiscard]] virtual Eigen::MatrixXd hess_yy_G(const Point& x, const Point& y) const;
  /// Dense grad^2_xy G on the flattened variables (m x n).
  /// The default throws CapabilityError.
  [[nodiscard]] virtual Eigen::MatrixXd hess_xy_G(const Point& x, const Point& y) const;
  /// Population values F(x, y), G(x, y) and grad_y G(x, y), used by
  /// finite-difference checks. The defaults throw CapabilityError.
  [[nodiscard]] virtual double outer_value(const Point& x, const Point& y) const;
  [[nodiscard]] virtual double inner_value(const Point& x, const Point& y) const;
  [[nodiscard]] virtual Point grad_y_G(const Point& x, const Point& y) const;
  [[nodiscard]] virtual Point inner_optimum(const Point& x) const = 0;
  /// Q(x) = F(x, y*(x)).
  [[nodiscard]] virtual double objective(const Point& x) const = 0;

  /// grad_x F - grad^2_xy G [grad^2_yy G]^{-1} grad_y F at (x, y), by a dense solve.
  [[nodiscard]] virtual Point surrogate_gradient(const Point& x, const Point& y) const;
  /// grad Q(x), the surrogate gradient at the inner optimum.
  [[nodiscard]] Point hypergradient(const Point& x) const {
    return surrogate_gradient(x, inner_optimum(x));
  }
};

/// Sampling oracle for min_x f(E_xi h(x; xi)) with f = E_theta f(y; theta).
///
/// sample_h and vjp_h must consume identical draws for the same stream
/// position, so replaying the stream pairs a map sample with its Jacobian.
class CompositionalOracle {
 public:
  virtual ~CompositionalOracle() = default;

  [[nodiscard]] virtual Shape outer_shape() const = 0;
  [[nodiscard]] virtual Shape map_shape() const = 0;
  /// Variance bound of sample_h, used when the problem is run as a bilevel one.
  [[nodiscard]] virtual double sigma_h_sq() const { return 0.0; }

  [[nodiscard]] virtual Point sample_h(const Point& x, RngStream& xi) const = 0;
  /// grad h(x; xi)^T u.
  [[nodiscard]] virtual Point vjp_h(const Point& x, const Point& u, RngStream& xi) const = 0;
  [[nodiscard]] virtual Point grad_f(const Point& y, RngStream& theta) const = 0;

  [[nodiscard]] virtual const ExactCompositionalModel* exact() const { return nullptr; }
};

class ExactCompositionalModel {
 public:
  virtual ~ExactCompositionalModel() = default;

  [[nodiscard]] virtual Point h(const Point& x) const = 0;
  /// grad h(x)^T u.
  [[nodiscard]] virtual Point vjp(const Point& x, const Point& u) const = 0;
  [[nodiscard]] virtual Point grad_f(const Point& y) const = 0;
  [[nodiscard]] virtual double f(const Point& y) const = 0;

  [[nodiscard]] double objective(const Point& x) const { return f(h(x)); }
  [[nodiscard]] Point gradient(const Point& x) const { return vjp(x, grad_f(h(x))); }
};

/// Single-level stochastic oracle min_x E_theta f(x; theta), for the SFW baseline.
class StochasticOracle {
 public:
  virtual ~StochasticOracle() = default;

  [[nodiscard]] virtual Shape shape() const = 0;
  [[nodiscard]] virtual Point grad(const Point& x, RngStream& theta) const = 0;

  /// Population objective and gradient; defaults throw CapabilityError.
  [[nodiscard]] virtual bool has_exact() const { return false; }
  [[nodiscard]] virtual double objective(const Point& x) const;
  [[nodiscard]] virtual Point exact_grad(const Point& x) const;
};

/// Runs a compositional problem through the bilevel interface, with
/// g(x, y; xi) = 1/2 ||y - h(x; xi)||^2 and f(x, y; theta) = f(y; theta).
/// Then y*(x) = h(x), mu_g = L_g = 1 and grad^2_xy g v = -grad h^T v.
class CompositionalAsBilevel final : public BilevelOracle, private ExactBilevelModel {
 public:
  explicit CompositionalAsBilevel(const CompositionalOracle& inner) : inner_(inner) {}

  [[nodiscard]] Shape outer_shape() const override { return inner_.outer_shape(); }
  [[nodiscard]] Shape inner_shape() const override { return inner_.map_shape(); }
  [[nodiscard]] double mu_g() const override { return 1.0; }
  [[nodiscard]] double L_g() const override { return 1.0; }
  [[nodiscard]] double sigma_g_sq() const override { return inner_.sigma_h_sq(); }

  [[nodiscard]] Point grad_x_f(const Point& x, const Point& y, RngStream& theta) const override;
  [[nodiscard]] Point grad_y_f(const Point& x, const Point& y, RngStream& theta) const override;
  [[nodiscard]] Point grad_y_g(const Point& x, const Point& y, RngStream& xi) const override;
  [[nodiscard]] Point hvp_yy_g(const Point& x, const Point& y, const Point& v,
                               RngStream& xi) const override;
  [[nodiscard]] Point cross_hvp_xy_g(const Point& x, const Point& y, const Point& v,
                                     RngStream& xi) const override;

  [[nodiscard]] const ExactBilevelModel* exact() const override {
    return inner_.exact() != nullptr ? this : nullptr;
  }

 private:
  [[nodiscard]] Point grad_x_F(const Point& x, const Point& y) const override;
  [[nodiscard]] Point grad_y_F(const Point& x, const Point& y) const override;
  [[nodiscard]] Point inner_optimum(const Point& x) const override;
  [[nodiscard]] double objective(const Point& x) const override;
  [[nodiscard]] Point surrogate_gradient(const Point& x, const Point& y) const override;

  const CompositionalOracle& inner_;
};

/// Surrogate gradient with an exact linear solve in place of the Neumann
/// estimate. Throws CapabilityError when the oracle has no exact model.
[[nodiscard]] Point surrogate_gradient_exact(const BilevelOracle& oracle, const Point& x,
                                             const Point& y);

}  // namespace bifrank
