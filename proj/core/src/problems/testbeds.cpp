#include "bifrank/problems/testbeds.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <utility>

#include "bifrank/errors.hpp"
#include "bifrank/projection.hpp"

namespace bifrank::problems {

namespace {

Eigen::VectorXd normal_vector(Eigen::Index n, RngStream& rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  Eigen::MatrixXd m(rows, cols);
  // Column-major fill so the draw order matches the storage order.
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  }
  return m;
}

double spectral_norm_sq(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  const Eigen::MatrixXd gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

// ---------------------------------------------------------------------------
// BilevelQuadratic

BilevelQuadraticSpec random_bilevel_quadratic(Eigen::Index m, Eigen::Index n, double mu, double L,
                                              double beta, RngStream& rng) {
  if (m < 1 || n < 1) throw ConfigError("bilevel quadratic: dimensions must be positive");
  if (!(mu > 0.0) || !(L >= mu)) throw ConfigError("bilevel quadratic: need 0 < mu <= L");
  BilevelQuadraticSpec s;
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  s.C = normal_matrix(n, m, rng) * scale;
  s.P = normal_matrix(n, m, rng) * scale;
  s.c = normal_vector(n, rng);
  s.y0 = normal_vector(n, rng);
  s.x0 = normal_vector(m, rng);
  s.q = Eigen::VectorXd::Zero(m);
  s.a.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) s.a(i) = mu + (L - mu) * rng.uniform();
  s.a(0) = mu;
  if (n > 1) s.a(n - 1) = L;
  s.beta = beta;
  return s;
}

BilevelQuadratic::BilevelQuadratic(BilevelQuadraticSpec spec) : spec_(std::move(spec)) {
  const auto n = spec_.C.rows();
  const auto m = spec_.C.cols();
  if (n < 1 || m < 1) throw ConfigError("bilevel quadratic: empty C");
  if (spec_.c.size() != n || spec_.a.size() != n || spec_.P.rows() != n || spec_.P.cols() != m ||
      spec_.y0.size() != n || spec_.x0.size() != m || spec_.q.size() != m) {
    throw ConfigError("bilevel quadratic: inconsistent dimensions");
  }
  if (!(spec_.a.minCoeff() > 0.0)) throw ConfigError("bilevel quadratic: a must be positive");
  if (!(spec_.hessian_noise >= 0.0 && spec_.hessian_noise < 1.0)) {
    throw ConfigError("bilevel quadratic: hessian_noise must lie in [0, 1)");
  }
  if (spec_.inner_noise < 0.0 || spec_.outer_noise < 0.0 || spec_.beta < 0.0) {
    throw ConfigError("bilevel quadratic: noise scales and beta must be non-negative");
  }
  mu_ = spec_.a.minCoeff();
  // Hessian samples reach a_i (1 + s); the declared constant covers them.
  L_ = spec_.a.maxCoeff() * (1.0 + spec_.hessian_noise);
}

double BilevelQuadratic::sigma_g_sq() const {
  return static_cast<double>(spec_.C.rows()) * spec_.inner_noise * spec_.inner_noise;
}

Eigen::VectorXd BilevelQuadratic::outer_noise(RngStream& theta) const {
  const Eigen::Index m = spec_.C.cols();
  const Eigen::Index n = spec_.C.rows();
  if (spec_.outer_noise == 0.0) return Eigen::VectorXd::Zero(m + n);
  return spec_.outer_noise * normal_vector(m + n, theta);
}

Point BilevelQuadratic::grad_x_F(const Point& x, const Point& y) const {
  const Eigen::VectorXd r = y.flat() - spec_.P * x.flat() - spec_.y0;
  return Point::from_vector(-spec_.P.transpose() * r + spec_.beta * (x.flat() - spec_.x0) +
                            spec_.q);
}

Point BilevelQuadratic::grad_y_F(const Point& x, const Point& y) const {
  return Point::from_vector(y.flat() - spec_.P * x.flat() - spec_.y0);
}

Point BilevelQuadratic::grad_x_f(const Point& x, const Point& y, RngStream& theta) const {
  Point g = grad_x_F(x, y);
  g.flat() += outer_noise(theta).head(spec_.C.cols());
  return g;
}

Point BilevelQuadratic::grad_y_f(const Point& x, const Point& y, RngStream& theta) const {
  Point g = grad_y_F(x, y);
  g.flat() += outer_noise(theta).tail(spec_.C.rows());
  return g;
}

Point BilevelQuadratic::grad_y_G(const Point& x, const Point& y) const {
  const Eigen::VectorXd r = y.flat() - spec_.C * x.flat() - spec_.c;
  return Point::from_vector(spec_.a.cwiseProduct(r));
}

Point BilevelQuadratic::grad_y_g(const Point& x, const Point& y, RngStream& xi) const {
  Point g = grad_y_G(x, y);
  if (spec_.inner_noise > 0.0) g.flat() += spec_.inner_noise * normal_vector(g.size(), xi);
  return g;
}

Point BilevelQuadratic::hvp_yy_g(const Point&, const Point&, const Point& v, RngStream& xi) const {
  Eigen::VectorXd scale = spec_.a;
  if (spec_.hessian_noise > 0.0) {
    for (Eigen::Index i = 0; i < scale.size(); ++i) {
      scale(i) *= 1.0 + spec_.hessian_noise * (2.0 * xi.uniform() - 1.0);
    }
  }
  return Point::from_vector(scale.cwiseProduct(v.flat()));
}

Point BilevelQuadratic::cross_hvp_xy_g(const Point& x, const Point& y, const Point& v,
                                       RngStream& xi) const {
  // grad_x grad_y g = -C^T diag(a); the sampled version shares the a_i noise model.
  const Point av = hvp_yy_g(x, y, v, xi);
  return Point::from_vector(-spec_.C.transpose() * av.flat());
}

Eigen::MatrixXd BilevelQuadratic::hess_yy_G(const Point&, const Point&) const {
  return spec_.a.asDiagonal();
}

Eigen::MatrixXd BilevelQuadratic::hess_xy_G(const Point&, const Point&) const {
  return -spec_.C.transpose() * spec_.a.asDiagonal();
}

double BilevelQuadratic::outer_value(const Point& x, const Point& y) const {
  const Eigen::VectorXd r = y.flat() - spec_.P * x.flat() - spec_.y0;
  return 0.5 * r.squaredNorm() + 0.5 * spec_.beta * (x.flat() - spec_.x0).squaredNorm() +
         spec_.q.dot(x.flat());
}

double BilevelQuadratic::inner_value(const Point& x, const Point& y) const {
  const Eigen::VectorXd r = y.flat() - spec_.C * x.flat() - spec_.c;
  return 0.5 * r.dot(spec_.a.cwiseProduct(r));
}

Point BilevelQuadratic::inner_optimum(const Point& x) const {
  return Point::from_vector(spec_.C * x.flat() + spec_.c);
}

double BilevelQuadratic::objective(const Point& x) const {
  return outer_value(x, inner_optimum(x));
}

double BilevelQuadratic::outer_smoothness() const {
  return spectral_norm_sq(spec_.C - spec_.P) + spec_.beta;
}

// ---------------------------------------------------------------------------
// CompositionalQuadratic

CompositionalQuadratic::CompositionalQuadratic(CompositionalQuadraticSpec spec)
    : spec_(std::move(spec)) {
  if (spec_.H.size() == 0) throw ConfigError("compositional quadratic: empty H");
  if (spec_.b.size() != spec_.H.rows() || spec_.y0.size() != spec_.H.rows()) {
    throw ConfigError("compositional quadratic: inconsistent dimensions");
  }
  if (spec_.map_noise < 0.0 || spec_.offset_noise < 0.0 || spec_.outer_noise < 0.0) {
    throw ConfigError("compositional quadratic: noise scales must be non-negative");
  }
}

double CompositionalQuadratic::sigma_h_sq() const {
  const double n = static_cast<double>(spec_.H.rows());
  return n * (spec_.map_noise * spec_.map_noise * spec_.x_norm_bound * spec_.x_norm_bound +
              spec_.offset_noise * spec_.offset_noise);
}

// Both map calls draw Z (column-major) and then z, so a replayed stream pairs them.
Point CompositionalQuadratic::sample_h(const Point& x, RngStream& xi) const {
  Eigen::VectorXd out = spec_.H * x.flat() + spec_.b;
  if (spec_.map_noise > 0.0) {
    out += spec_.map_noise * normal_matrix(spec_.H.rows(), spec_.H.cols(), xi) * x.flat();
  }
  if (spec_.offset_noise > 0.0) out += spec_.offset_noise * normal_vector(spec_.H.rows(), xi);
  return Point::from_vector(out);
}

Point CompositionalQuadratic::vjp_h(const Point&, const Point& u, RngStream& xi) const {
  Eigen::VectorXd out = spec_.H.transpose() * u.flat();
  if (spec_.map_noise > 0.0) {
    out += spec_.map_noise * normal_matrix(spec_.H.rows(), spec_.H.cols(), xi).transpose() *
           u.flat();
  }
  if (spec_.offset_noise > 0.0) (void)normal_vector(spec_.H.rows(), xi);
  return Point::from_vector(out);
}

Point CompositionalQuadratic::grad_f(const Point& y, RngStream& theta) const {
  Point g = grad_f(y);
  if (spec_.outer_noise > 0.0) g.flat() += spec_.outer_noise * normal_vector(g.size(), theta);
  return g;
}

Point CompositionalQuadratic::h(const Point& x) const {
  return Point::from_vector(spec_.H * x.flat() + spec_.b);
}

Point CompositionalQuadratic::vjp(const Point&, const Point& u) const {
  return Point::from_vector(spec_.H.transpose() * u.flat());
}

Point CompositionalQuadratic::grad_f(const Point& y) const {
  return Point::from_vector(y.flat() - spec_.y0);
}

double CompositionalQuadratic::f(const Point& y) const {
  return 0.5 * (y.flat() - spec_.y0).squaredNorm();
}

// ---------------------------------------------------------------------------
// NonconvexCompositionalToy

NonconvexCompositionalToy::NonconvexCompositionalToy(NonconvexToySpec spec)
    : spec_(std::move(spec)) {
  if (spec_.A.size() == 0) throw ConfigError("nonconvex toy: empty A");
  if (spec_.map_noise < 0.0 || spec_.outer_noise < 0.0) {
    throw ConfigError("nonconvex toy: noise scales must be non-negative");
  }
}

double NonconvexCompositionalToy::sigma_h_sq() const {
  return static_cast<double>(spec_.A.rows()) * spec_.map_noise * spec_.map_noise *
         spec_.x_norm_bound * spec_.x_norm_bound;
}

Point NonconvexCompositionalToy::sample_h(const Point& x, RngStream& xi) const {
  Eigen::VectorXd out = spec_.A * x.flat();
  if (spec_.map_noise > 0.0) {
    out += spec_.map_noise * normal_matrix(spec_.A.rows(), spec_.A.cols(), xi) * x.flat();
  }
  return Point::from_vector(out);
}

Point NonconvexCompositionalToy::vjp_h(const Point&, const Point& u, RngStream& xi) const {
  Eigen::VectorXd out = spec_.A.transpose() * u.flat();
  if (spec_.map_noise > 0.0) {
    out += spec_.map_noise * normal_matrix(spec_.A.rows(), spec_.A.cols(), xi).transpose() *
           u.flat();
  }
  return Point::from_vector(out);
}

Point NonconvexCompositionalToy::grad_f(const Point& y, RngStream& theta) const {
  Point g = grad_f(y);
  if (spec_.outer_noise > 0.0) g.flat() += spec_.outer_noise * normal_vector(g.size(), theta);
  return g;
}

Point NonconvexCompositionalToy::h(const Point& x) const {
  return Point::from_vector(spec_.A * x.flat());
}

Point NonconvexCompositionalToy::vjp(const Point&, const Point& u) const {
  return Point::from_vector(spec_.A.transpose() * u.flat());
}

Point NonconvexCompositionalToy::grad_f(const Point& y) const {
  const auto v = y.flat().array();
  return Point::from_vector((v * v * v - v).matrix());
}

double NonconvexCompositionalToy::f(const Point& y) const {
  const auto v = y.flat().array();
  return 0.25 * (v * v - 1.0).square().sum();
}

// ---------------------------------------------------------------------------
// StochasticQuadratic

StochasticQuadratic::StochasticQuadratic(Eigen::MatrixXd B, Eigen::VectorXd b, Eigen::VectorXd q,
                                         double noise)
    : B_(std::move(B)), b_(std::move(b)), q_(std::move(q)), noise_(noise) {
  if (q_.size() == 0) throw ConfigError("stochastic quadratic: empty q");
  if (B_.rows() > 0 && (B_.cols() != q_.size() || b_.size() != B_.rows())) {
    throw ConfigError("stochastic quadratic: inconsistent dimensions");
  }
  if (B_.rows() == 0) B_.resize(0, q_.size());
  if (noise_ < 0.0) throw ConfigError("stochastic quadratic: noise must be non-negative");
}

Point StochasticQuadratic::exact_grad(const Point& x) const {
  Eigen::VectorXd g = q_;
  if (B_.rows() > 0) g += B_.transpose() * (B_ * x.flat() - b_);
  return Point::from_vector(g);
}

Point StochasticQuadratic::grad(const Point& x, RngStream& theta) const {
  Point g = exact_grad(x);
  if (noise_ > 0.0) g.flat() += noise_ * normal_vector(g.size(), theta);
  return g;
}

double StochasticQuadratic::objective(const Point& x) const {
  double v = q_.dot(x.flat());
  if (B_.rows() > 0) v += 0.5 * (B_ * x.flat() - b_).squaredNorm();
  return v;
}

// ---------------------------------------------------------------------------

Point projected_gradient_minimize(const std::function<Point(const Point&)>& grad,
                                  const ConstraintSet& set, Point x, double lipschitz,
                                  int iterations) {
  if (!(lipschitz > 0.0)) throw UsageError("projected_gradient_minimize: lipschitz must be positive");
  x = project(set, x);
  Point z = x;
  double t = 1.0;
  for (int it = 0; it < iterations; ++it) {
    Point step = z;
    step.flat() -= grad(z).flat() / lipschitz;
    Point next = project(set, step);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    Point dir = next;
    dir.flat() -= x.flat();
    // Gradient-based restart keeps the accelerated scheme monotone in practice.
    Point zx = z;
    zx.flat() -= next.flat();
    if (zx.flat().dot(dir.flat()) > 0.0) {
      t = 1.0;
      z = next;
    } else {
      z = next;
      z.flat() += ((t - 1.0) / t_next) * dir.flat();
      t = t_next;
    }
    x = std::move(next);
  }
  return x;
}

}  // namespace bifrank::problems
