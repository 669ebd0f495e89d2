#include "bifrank/problems/matrix_completion.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "bifrank/constraint_set.hpp"
#include "bifrank/errors.hpp"

namespace bifrank::problems {

void MatrixCompletionProblem::validate() const {
  if (rows < 1 || cols < 1) throw ConfigError("matcomp: matrix dimensions must be positive");
  if (omega.empty()) throw ConfigError("matcomp: no observed entries");
  if (!(alpha > 0.0)) throw ConfigError("matcomp: alpha must be positive");
  if (!(lambda2 > 0.0)) throw ConfigError("matcomp: lambda2 must be positive");
  if (!(lambda1 >= 0.0)) throw ConfigError("matcomp: lambda1 must be non-negative");
  if (!(epsilon_l1 > 0.0)) throw ConfigError("matcomp: epsilon_l1 must be positive");
  if (batch_outer < 1 || batch_inner < 1) throw ConfigError("matcomp: batch sizes must be >= 1");
  if (!(sigma_g_sq >= 0.0)) throw ConfigError("matcomp: sigma_g_sq must be non-negative");
  std::set<std::pair<Eigen::Index, Eigen::Index>> seen;
  for (const ObservedEntry& e : omega) {
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols) {
      throw ConfigError("matcomp: observed entry out of range");
    }
    if (!std::isfinite(e.value)) throw ConfigError("matcomp: non-finite observed value");
    if (!seen.emplace(e.row, e.col).second) throw ConfigError("matcomp: duplicate observed entry");
  }
}

Eigen::MatrixXd MatrixCompletionProblem::observed_matrix() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  for (const ObservedEntry& e : omega) m(e.row, e.col) = e.value;
  return m;
}

SyntheticMatrixCompletion matcomp_synthetic(Eigen::Index n, Eigen::Index r, double noise_factor,
                                            double observe_prob, RngStream& rng) {
  if (r < 1 || n < r) throw ConfigError("matcomp_synthetic: need n >= r >= 1");
  if (!(noise_factor >= 0.0 && noise_factor < 1.0)) {
    throw ConfigError("matcomp_synthetic: noise factor must lie in [0, 1)");
  }
  if (!(observe_prob > 0.0 && observe_prob <= 1.0)) {
    throw ConfigError("matcomp_synthetic: observe probability must lie in (0, 1]");
  }
  Eigen::MatrixXd W(n, r);
  for (Eigen::Index j = 0; j < r; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) W(i, j) = rng.normal();
  }
  Eigen::MatrixXd L(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) L(i, j) = rng.normal();
  }
  SyntheticMatrixCompletion out;
  out.truth = W * W.transpose();
  out.observed = out.truth + noise_factor * (L + L.transpose());
  MatrixCompletionProblem& p = out.problem;
  p.rows = n;
  p.cols = n;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (rng.uniform() < observe_prob) p.omega.push_back({i, j, out.observed(i, j)});
    }
  }
  if (p.omega.empty()) p.omega.push_back({0, 0, out.observed(0, 0)});
  p.alpha = nuclear_norm(out.truth);
  return out;
}

MatrixCompletionProblem matcomp_from_ratings(const RatingsDataset& dataset,
                                             std::optional<double> alpha) {
  MatrixCompletionProblem p;
  p.rows = static_cast<Eigen::Index>(dataset.n_users);
  p.cols = static_cast<Eigen::Index>(dataset.n_items);
  p.omega.reserve(dataset.entries.size());
  for (const Rating& e : dataset.entries) {
    p.omega.push_back({static_cast<Eigen::Index>(e.user), static_cast<Eigen::Index>(e.item),
                       e.rating});
  }
  p.alpha = alpha ? *alpha : nuclear_norm(p.observed_matrix());
  return p;
}

double normalized_error(const Eigen::MatrixXd& X, const Eigen::MatrixXd& reference,
                        const std::vector<ObservedEntry>& omega) {
  if (omega.empty()) throw MetricError("normalized_error: empty entry set");
  double num = 0.0;
  double den = 0.0;
  for (const ObservedEntry& e : omega) {
    const double r = reference(e.row, e.col);
    const double d = X(e.row, e.col) - r;
    num += d * d;
    den += r * r;
  }
  if (!(den > 0.0)) throw MetricError("normalized_error: zero denominator");
  return num / den;
}

double normalized_error(const Eigen::MatrixXd& X, const std::vector<ObservedEntry>& omega) {
  if (omega.empty()) throw MetricError("normalized_error: empty entry set");
  double num = 0.0;
  double den = 0.0;
  for (const ObservedEntry& e : omega) {
    const double d = X(e.row, e.col) - e.value;
    num += d * d;
    den += e.value * e.value;
  }
  if (!(den > 0.0)) throw MetricError("normalized_error: zero denominator");
  return num / den;
}

// ---------------------------------------------------------------------------
// MatrixCompletionOracle

MatrixCompletionOracle::MatrixCompletionOracle(MatrixCompletionProblem problem)
    : problem_(std::move(problem)) {
  static std::atomic<std::uint64_t> next_id{1};
  instance_id_ = next_id++;
  problem_.validate();
  mask_ = Eigen::MatrixXd::Zero(problem_.rows, problem_.cols);
  for (const ObservedEntry& e : problem_.omega) mask_(e.row, e.col) = 1.0;
  observed_ = problem_.observed_matrix();
}

double MatrixCompletionOracle::mu_g() const { return 2.0 * problem_.lambda2; }

double MatrixCompletionOracle::L_g() const {
  const double l1 = problem_.smooth_l1 ? problem_.lambda1 / problem_.epsilon_l1 : 0.0;
  return 2.0 + l1 + 2.0 * problem_.lambda2;
}

double MatrixCompletionOracle::psi(double v) const {
  if (!problem_.smooth_l1) return std::abs(v);
  const double eps = problem_.epsilon_l1;
  return std::sqrt(v * v + eps * eps) - eps;
}

double MatrixCompletionOracle::psi_prime(double v) const {
  if (!problem_.smooth_l1) return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  const double eps = problem_.epsilon_l1;
  return v / std::sqrt(v * v + eps * eps);
}

double MatrixCompletionOracle::psi_second(double v) const {
  if (!problem_.smooth_l1) return 0.0;
  const double eps = problem_.epsilon_l1;
  const double s = v * v + eps * eps;
  return eps * eps / (s * std::sqrt(s));
}

Point MatrixCompletionOracle::grad_x_f(const Point& x, const Point& y, RngStream& theta) const {
  const auto batch = minibatch(problem_.omega.size(), problem_.batch_outer, theta);
  const double w = 2.0 / static_cast<double>(batch.size());
  Point g(outer_shape());
  for (std::size_t idx : batch) {
    const ObservedEntry& e = problem_.omega[idx];
    g.mat()(e.row, e.col) += w * (x.mat()(e.row, e.col) - y.mat()(e.row, e.col));
  }
  return g;
}

Point MatrixCompletionOracle::grad_y_f(const Point& x, const Point& y, RngStream& theta) const {
  Point g = grad_x_f(x, y, theta);
  g.flat() *= -1.0;
  return g;
}

Point MatrixCompletionOracle::grad_y_g(const Point& x, const Point& y, RngStream& xi) const {
  const auto batch = minibatch(problem_.omega.size(), problem_.batch_inner, xi);
  const double w = 2.0 / static_cast<double>(batch.size());
  Point g(inner_shape());
  const double l1 = problem_.lambda1;
  const double l2 = problem_.lambda2;
  g.mat() = 2.0 * l2 * (y.mat() - x.mat());
  if (l1 > 0.0) g.mat() += y.mat().unaryExpr([&](double v) { return l1 * psi_prime(v); });
  for (std::size_t idx : batch) {
    const ObservedEntry& e = problem_.omega[idx];
    g.mat()(e.row, e.col) += w * (y.mat()(e.row, e.col) - e.value);
  }
  return g;
}

const Eigen::MatrixXd& MatrixCompletionOracle::regularizer_curvature(const Point& y) const {
  // A Neumann chain evaluates many HVPs at one y; keep the last diagonal per thread.
  struct Cache {
    std::uint64_t owner = 0;
    Eigen::MatrixXd y;
    Eigen::MatrixXd diag;
  };
  thread_local Cache cache;
  if (cache.owner != instance_id_ || cache.y.rows() != y.mat().rows() ||
      cache.y.cols() != y.mat().cols() || cache.y != y.mat()) {
    cache.owner = instance_id_;
    cache.y = y.mat();
    cache.diag = 2.0 * problem_.lambda2 * Eigen::MatrixXd::Ones(y.mat().rows(), y.mat().cols());
    if (problem_.lambda1 > 0.0 && problem_.smooth_l1) {
      cache.diag += problem_.lambda1 * y.mat().unaryExpr([this](double t) { return psi_second(t); });
    }
  }
  return cache.diag;
}

Point MatrixCompletionOracle::hvp_yy_g(const Point&, const Point& y, const Point& v,
                                       RngStream& xi) const {
  const auto batch = minibatch(problem_.omega.size(), problem_.batch_inner, xi);
  const double w = 2.0 / static_cast<double>(batch.size());
  Point out(Eigen::MatrixXd(regularizer_curvature(y).cwiseProduct(v.mat())));
  for (std::size_t idx : batch) {
    const ObservedEntry& e = problem_.omega[idx];
    out.mat()(e.row, e.col) += w * v.mat()(e.row, e.col);
  }
  return out;
}

Point MatrixCompletionOracle::cross_hvp_xy_g(const Point&, const Point&, const Point& v,
                                             RngStream&) const {
  Point out = v;
  out.flat() *= -2.0 * problem_.lambda2;
  return out;
}

Point MatrixCompletionOracle::initial_outer() const { return Point(outer_shape()); }

Point MatrixCompletionOracle::initial_inner() const { return Point(observed_); }

// Population pieces: every sum over a minibatch becomes the mean over Omega.

Point MatrixCompletionOracle::grad_x_F(const Point& x, const Point& y) const {
  const double w = 2.0 / static_cast<double>(problem_.omega.size());
  return Point(Eigen::MatrixXd(w * mask_.cwiseProduct(x.mat() - y.mat())));
}

Point MatrixCompletionOracle::grad_y_F(const Point& x, const Point& y) const {
  Point g = grad_x_F(x, y);
  g.flat() *= -1.0;
  return g;
}

Point MatrixCompletionOracle::grad_y_G(const Point& x, const Point& y) const {
  const double w = 2.0 / static_cast<double>(problem_.omega.size());
  const double l1 = problem_.lambda1;
  Eigen::MatrixXd g = w * mask_.cwiseProduct(y.mat() - observed_) +
                      2.0 * problem_.lambda2 * (y.mat() - x.mat());
  if (l1 > 0.0) g += y.mat().unaryExpr([&](double v) { return l1 * psi_prime(v); });
  return Point(std::move(g));
}

Eigen::MatrixXd MatrixCompletionOracle::inner_curvature(const Point& y) const {
  const double w = 2.0 / static_cast<double>(problem_.omega.size());
  Eigen::MatrixXd d = w * mask_;
  d.array() += 2.0 * problem_.lambda2;
  if (problem_.lambda1 > 0.0 && problem_.smooth_l1) {
    d += problem_.lambda1 * y.mat().unaryExpr([this](double t) { return psi_second(t); });
  }
  return d;
}

Eigen::MatrixXd MatrixCompletionOracle::hess_yy_G(const Point&, const Point& y) const {
  const Eigen::MatrixXd d = inner_curvature(y);
  return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(d.data(), d.size())).asDiagonal();
}

Eigen::MatrixXd MatrixCompletionOracle::hess_xy_G(const Point& x, const Point&) const {
  const Eigen::Index n = x.size();
  return -2.0 * problem_.lambda2 * Eigen::MatrixXd::Identity(n, n);
}

Point MatrixCompletionOracle::surrogate_gradient(const Point& x, const Point& y) const {
  // The inner Hessian is diagonal and the cross Hessian is -2 lambda2 I.
  const Point gy = grad_y_F(x, y);
  Point out = grad_x_F(x, y);
  out.mat().array() += 2.0 * problem_.lambda2 * gy.mat().array() / inner_curvature(y).array();
  return out;
}

double MatrixCompletionOracle::outer_value(const Point& x, const Point& y) const {
  const double w = 1.0 / static_cast<double>(problem_.omega.size());
  return w * mask_.cwiseProduct(x.mat() - y.mat()).squaredNorm();
}

double MatrixCompletionOracle::inner_value(const Point& x, const Point& y) const {
  const double w = 1.0 / static_cast<double>(problem_.omega.size());
  double v = w * mask_.cwiseProduct(y.mat() - observed_).squaredNorm() +
             problem_.lambda2 * (x.mat() - y.mat()).squaredNorm();
  if (problem_.lambda1 > 0.0) {
    v += problem_.lambda1 * y.mat().unaryExpr([this](double t) { return psi(t); }).sum();
  }
  return v;
}

Point MatrixCompletionOracle::inner_optimum(const Point& x) const {
  // G separates over entries: minimize w (v - m)^2 + lambda1 psi(v) + lambda2 (x - v)^2.
  const double wn = 1.0 / static_cast<double>(problem_.omega.size());
  const double l1 = problem_.lambda1;
  const double l2 = problem_.lambda2;
  Point y(inner_shape());
  for (Eigen::Index j = 0; j < problem_.cols; ++j) {
    for (Eigen::Index i = 0; i < problem_.rows; ++i) {
      const double w = wn * mask_(i, j);
      const double a = w + l2;
      const double center = (w * observed_(i, j) + l2 * x.mat()(i, j)) / a;
      const double half_width = l1 / (2.0 * a);
      if (l1 == 0.0) {
        y.mat()(i, j) = center;
        continue;
      }
      if (!problem_.smooth_l1) {
        y.mat()(i, j) = std::copysign(std::max(std::abs(center) - half_width, 0.0), center);
        continue;
      }
      // Safeguarded Newton on the increasing derivative 2a(v - center) + l1 psi'(v).
      double lo = center - half_width;
      double hi = center + half_width;
      double v = std::clamp(0.0, lo, hi);
      for (int it = 0; it < 100; ++it) {
        const double d1 = 2.0 * a * (v - center) + l1 * psi_prime(v);
        if (d1 > 0.0) {
          hi = v;
        } else if (d1 < 0.0) {
          lo = v;
        } else {
          break;
        }
        const double d2 = 2.0 * a + l1 * psi_second(v);
        double next = v - d1 / d2;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - v) <= 1e-15 * std::max(1.0, std::abs(v))) {
          v = next;
          break;
        }
        v = next;
      }
      y.mat()(i, j) = v;
    }
  }
  return y;
}

double MatrixCompletionOracle::objective(const Point& x) const {
  return outer_value(x, inner_optimum(x));
}

// ---------------------------------------------------------------------------

MatrixCompletionSingleLevel::MatrixCompletionSingleLevel(MatrixCompletionProblem problem)
    : problem_(std::move(problem)) {
  problem_.validate();
}

Point MatrixCompletionSingleLevel::grad(const Point& x, RngStream& theta) const {
  const auto batch = minibatch(problem_.omega.size(), problem_.batch_outer, theta);
  const double w = 2.0 / static_cast<double>(batch.size());
  Point g(shape());
  for (std::size_t idx : batch) {
    const ObservedEntry& e = problem_.omega[idx];
    g.mat()(e.row, e.col) += w * (x.mat()(e.row, e.col) - e.value);
  }
  return g;
}

double MatrixCompletionSingleLevel::objective(const Point& x) const {
  double v = 0.0;
  for (const ObservedEntry& e : problem_.omega) {
    const double d = x.mat()(e.row, e.col) - e.value;
    v += d * d;
  }
  return v / static_cast<double>(problem_.omega.size());
}

Point MatrixCompletionSingleLevel::exact_grad(const Point& x) const {
  const double w = 2.0 / static_cast<double>(problem_.omega.size());
  Point g(shape());
  for (const ObservedEntry& e : problem_.omega) {
    g.mat()(e.row, e.col) = w * (x.mat()(e.row, e.col) - e.value);
  }
  return g;
}

}  // namespace bifrank::problems
