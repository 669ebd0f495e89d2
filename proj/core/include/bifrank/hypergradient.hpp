#pragma once

#include <cstdint>

#include "bifrank/oracles.hpp"

namespace bifrank {

/// A bilevel oracle paired with the call counter of one run. Every method
/// forwards to the oracle and bumps exactly one counter.
class CountedBilevel {
 public:
  explicit CountedBilevel(const BilevelOracle& oracle) : oracle_(&oracle) {}

  [[nodiscard]] const BilevelOracle& oracle() const { return *oracle_; }
  [[nodiscard]] const OracleCallCounter& counter() const { return counter_; }

  Point grad_x_f(const Point& x, const Point& y, RngStream& theta);
  Point grad_y_f(const Point& x, const Point& y, RngStream& theta);
  Point grad_y_g(const Point& x, const Point& y, RngStream& xi);
  Point hvp_yy_g(const Point& x, const Point& y, const Point& v, RngStream& xi);
  Point cross_hvp_xy_g(const Point& x, const Point& y, const Point& v, RngStream& xi);

 private:
  const BilevelOracle* oracle_;
  OracleCallCounter counter_;
};

/// Compositional counterpart of CountedBilevel.
class CountedCompositional {
 public:
  explicit CountedCompositional(const CompositionalOracle& oracle) : oracle_(&oracle) {}

  [[nodiscard]] const CompositionalOracle& oracle() const { return *oracle_; }
  [[nodiscard]] const OracleCallCounter& counter() const { return counter_; }

  Point sample_h(const Point& x, RngStream& xi);
  Point vjp_h(const Point& x, const Point& u, RngStream& xi);
  Point grad_f(const Point& y, RngStream& theta);

 private:
  const CompositionalOracle* oracle_;
  OracleCallCounter counter_;
};

/// Randomized truncated Neumann series for [grad^2_yy G]^{-1} v:
///
///   (k / L_g) (I - H_l / L_g) ... (I - H_1 / L_g) v,   l ~ Uniform{0, ..., k-1}
///
/// where H_i are independent Hessian samples; the factor with the largest
/// index is applied to v first. l is drawn from `hessian` before the chain,
/// and exactly l Hessian samples are consumed. If `drawn_l` is non-null it
/// receives l.
Point neumann_inverse_apply(CountedBilevel& calls, const Point& x, const Point& y, const Point& v,
                            std::uint64_t k, RngStream& hessian,
                            std::uint64_t* drawn_l = nullptr);

/// Biased hypergradient sample
///
///   grad_x f(x, y; theta) - grad^2_xy g(x, y; xi_0) N(grad_y f(x, y; theta))
///
/// with N the Neumann estimate above. Both outer gradients see the same theta
/// draw. The cross-Hessian sample is drawn after the Neumann chain.
Point hypergradient_sample(CountedBilevel& calls, const Point& x, const Point& y, std::uint64_t k,
                           RngStream& theta, RngStream& hessian,
                           std::uint64_t* drawn_l = nullptr);

}  // namespace bifrank
