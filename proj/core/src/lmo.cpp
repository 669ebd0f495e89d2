#include "bifrank/lmo.hpp"

#include <cmath>
#include <string>

#include "bifrank/errors.hpp"

namespace bifrank {

namespace {

// One power-iteration pass from the unit vector v. Returns false if d v
// vanished before convergence.
bool power_pass(const Eigen::MatrixXd& d, Eigen::VectorXd v, const PowerIterationOptions& options,
                SingularPair& out) {
  Eigen::VectorXd u(d.rows());
  double sigma_prev = 0.0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    u.noalias() = d * v;
    const double un = u.norm();
    if (un == 0.0) return false;
    u /= un;
    v.noalias() = d.transpose() * u;
    const double sigma = v.norm();
    if (sigma == 0.0) return false;
    v /= sigma;
    out.iterations = it;
    out.sigma = sigma;
    if (std::abs(sigma - sigma_prev) <= options.rel_tol * sigma) break;
    sigma_prev = sigma;
  }
  // Align u with the final v so that u^T d v = ||d v|| >= 0.
  u.noalias() = d * v;
  const double un = u.norm();
  if (un == 0.0) return false;
  out.u = u / un;
  out.v = std::move(v);
  out.sigma = un;
  return true;
}

}  // namespace

SingularPair top_singular_pair(const Eigen::MatrixXd& d, RngStream* rng,
                               const PowerIterationOptions& options) {
  if (d.size() == 0) throw UsageError("top_singular_pair: empty matrix");
  SingularPair out;
  Eigen::VectorXd v(d.cols());
  if (rng != nullptr) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng->normal();
  } else {
    v.setOnes();
  }
  if (v.norm() > 0.0) {
    v.normalize();
    if (power_pass(d, v, options, out)) return out;
  }
  Eigen::Index row = 0;
  const double row_norm = d.rowwise().norm().maxCoeff(&row);
  if (row_norm == 0.0) {
    out.u = Eigen::VectorXd::Unit(d.rows(), 0);
    out.v = Eigen::VectorXd::Unit(d.cols(), 0);
    out.sigma = 0.0;
    return out;
  }
  const int first_pass = out.iterations;
  v = d.row(row).transpose() / row_norm;
  power_pass(d, v, options, out);
  out.iterations += first_pass;
  return out;
}

LmoResult lmo(const ConstraintSet& set, const Point& d, RngStream* rng,
              const PowerIterationOptions& options) {
  if (!(d.shape() == set.shape())) throw UsageError("lmo: direction shape does not match set");
  if (!d.all_finite()) throw NumericError("lmo: non-finite direction");

  LmoResult result;
  const auto g = d.flat();
  const bool zero = (g.array() == 0.0).all();
  if (zero) {
    result.vertex = set.canonical_vertex();
    result.inner_product = 0.0;
    return result;
  }

  result.vertex = Point(set.shape());
  auto s = result.vertex.flat();
  switch (set.kind()) {
    case SetKind::L1Ball: {
      // maxCoeff returns the first maximizer, which gives the lowest-index tie-break.
      Eigen::Index i = 0;
      g.cwiseAbs().maxCoeff(&i);
      s(i) = g(i) > 0.0 ? -set.radius() : set.radius();
      break;
    }
    case SetKind::Simplex: {
      Eigen::Index i = 0;
      g.minCoeff(&i);
      s(i) = 1.0;
      break;
    }
    case SetKind::Box:
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        s(i) = g(i) < 0.0 ? set.upper()(i) : set.lower()(i);
      }
      break;
    case SetKind::NuclearNormBall: {
      const SingularPair top = top_singular_pair(d.mat(), rng, options);
      result.vertex.mat().noalias() = -set.radius() * top.u * top.v.transpose();
      result.iterations_used = top.iterations;
      break;
    }
  }
  result.inner_product = s.dot(g);
  return result;
}

double fw_gap(const ConstraintSet& set, const Point& x, const Point& grad, RngStream* rng) {
  require_same_shape(x, grad, "fw_gap");
  if (!set.contains(x)) throw UsageError("fw_gap: x is not feasible");
  const LmoResult r = lmo(set, grad, rng);
  return x.flat().dot(grad.flat()) - r.inner_product;
}

}  // namespace bifrank
