#include "bifrank/hypergradient.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "bifrank/errors.hpp"

namespace bifrank {

Point CountedBilevel::grad_x_f(const Point& x, const Point& y, RngStream& theta) {
  ++counter_.outer;
  return oracle_->grad_x_f(x, y, theta);
}

Point CountedBilevel::grad_y_f(const Point& x, const Point& y, RngStream& theta) {
  ++counter_.outer;
  return oracle_->grad_y_f(x, y, theta);
}

Point CountedBilevel::grad_y_g(const Point& x, const Point& y, RngStream& xi) {
  ++counter_.inner;
  return oracle_->grad_y_g(x, y, xi);
}

Point CountedBilevel::hvp_yy_g(const Point& x, const Point& y, const Point& v, RngStream& xi) {
  ++counter_.hessian;
  return oracle_->hvp_yy_g(x, y, v, xi);
}

Point CountedBilevel::cross_hvp_xy_g(const Point& x, const Point& y, const Point& v,
                                     RngStream& xi) {
  ++counter_.hessian;
  return oracle_->cross_hvp_xy_g(x, y, v, xi);
}

Point CountedCompositional::sample_h(const Point& x, RngStream& xi) {
  ++counter_.map;
  return oracle_->sample_h(x, xi);
}

Point CountedCompositional::vjp_h(const Point& x, const Point& u, RngStream& xi) {
  ++counter_.inner;
  return oracle_->vjp_h(x, u, xi);
}

Point CountedCompositional::grad_f(const Point& y, RngStream& theta) {
  ++counter_.outer;
  return oracle_->grad_f(y, theta);
}

Point neumann_inverse_apply(CountedBilevel& calls, const Point& x, const Point& y, const Point& v,
                            std::uint64_t k, RngStream& hessian, std::uint64_t* drawn_l) {
  if (k < 1) throw UsageError("neumann_inverse_apply: k must be >= 1");
  require_finite(v, "neumann_inverse_apply: v");
  const double L = calls.oracle().L_g();
  const std::uint64_t l = hessian.uniform_index(static_cast<std::size_t>(k));
  if (drawn_l != nullptr) *drawn_l = l;
  Point w = v;
  for (std::uint64_t i = l; i >= 1; --i) {
    const Point hw = calls.hvp_yy_g(x, y, w, hessian);
    w.flat() -= hw.flat() / L;
  }
  w.flat() *= static_cast<double>(k) / L;
  return w;
}

Point hypergradient_sample(CountedBilevel& calls, const Point& x, const Point& y, std::uint64_t k,
                           RngStream& theta, RngStream& hessian, std::uint64_t* drawn_l) {
  const RngStream theta_start = theta;
  Point gx = calls.grad_x_f(x, y, theta);
  theta = theta_start;
  const Point gy = calls.grad_y_f(x, y, theta);
  const Point z = neumann_inverse_apply(calls, x, y, gy, k, hessian, drawn_l);
  const Point cross = calls.cross_hvp_xy_g(x, y, z, hessian);
  require_same_shape(gx, cross, "hypergradient_sample");
  gx.flat() -= cross.flat();
  require_finite(gx, "hypergradient_sample");
  return gx;
}

// ---------------------------------------------------------------------------
// Exact models and adapters

Eigen::MatrixXd ExactBilevelModel::hess_yy_G(const Point&, const Point&) const {
  throw CapabilityError("exact model does not expose a dense inner Hessian");
}

Eigen::MatrixXd ExactBilevelModel::hess_xy_G(const Point&, const Point&) const {
  throw CapabilityError("exact model does not expose a dense cross Hessian");
}

double ExactBilevelModel::outer_value(const Point&, const Point&) const {
  throw CapabilityError("exact model does not expose outer values");
}

double ExactBilevelModel::inner_value(const Point&, const Point&) const {
  throw CapabilityError("exact model does not expose inner values");
}

Point ExactBilevelModel::grad_y_G(const Point&, const Point&) const {
  throw CapabilityError("exact model does not expose the inner gradient");
}

Point ExactBilevelModel::surrogate_gradient(const Point& x, const Point& y) const {
  const Eigen::MatrixXd Hyy = hess_yy_G(x, y);
  const Eigen::MatrixXd Hxy = hess_xy_G(x, y);
  const Point gy = grad_y_F(x, y);
  Point out = grad_x_F(x, y);
  const Eigen::VectorXd z = Hyy.ldlt().solve(gy.flat());
  out.flat() -= Hxy * z;
  return out;
}

double StochasticOracle::objective(const Point&) const {
  throw CapabilityError("stochastic oracle has no exact objective");
}

Point StochasticOracle::exact_grad(const Point&) const {
  throw CapabilityError("stochastic oracle has no exact gradient");
}

Point CompositionalAsBilevel::grad_x_f(const Point& x, const Point&, RngStream&) const {
  return Point(x.shape());
}

Point CompositionalAsBilevel::grad_y_f(const Point&, const Point& y, RngStream& theta) const {
  return inner_.grad_f(y, theta);
}

Point CompositionalAsBilevel::grad_y_g(const Point& x, const Point& y, RngStream& xi) const {
  Point out = y;
  out.flat() -= inner_.sample_h(x, xi).flat();
  return out;
}

Point CompositionalAsBilevel::hvp_yy_g(const Point&, const Point&, const Point& v,
                                       RngStream&) const {
  return v;
}

Point CompositionalAsBilevel::cross_hvp_xy_g(const Point& x, const Point&, const Point& v,
                                             RngStream& xi) const {
  Point out = inner_.vjp_h(x, v, xi);
  out.flat() *= -1.0;
  return out;
}

Point CompositionalAsBilevel::grad_x_F(const Point& x, const Point&) const {
  return Point(x.shape());
}

Point CompositionalAsBilevel::grad_y_F(const Point&, const Point& y) const {
  return inner_.exact()->grad_f(y);
}

Point CompositionalAsBilevel::inner_optimum(const Point& x) const { return inner_.exact()->h(x); }

double CompositionalAsBilevel::objective(const Point& x) const {
  return inner_.exact()->objective(x);
}

Point CompositionalAsBilevel::surrogate_gradient(const Point& x, const Point& y) const {
  // grad^2_yy G = I and grad^2_xy G = -grad h^T, so the solve is a vjp.
  const ExactCompositionalModel& m = *inner_.exact();
  return m.vjp(x, m.grad_f(y));
}

Point surrogate_gradient_exact(const BilevelOracle& oracle, const Point& x, const Point& y) {
  const ExactBilevelModel* model = oracle.exact();
  if (model == nullptr) throw CapabilityError("surrogate_gradient_exact: oracle has no exact model");
  return model->surrogate_gradient(x, y);
}

}  // namespace bifrank
