#include "bifrank/constraint_set.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "bifrank/errors.hpp"

namespace bifrank {

const char* to_string(SetKind kind) {
  switch (kind) {
    case SetKind::L1Ball:
      return "l1_ball";
    case SetKind::NuclearNormBall:
      return "nuclear_ball";
    case SetKind::Simplex:
      return "simplex";
    case SetKind::Box:
      return "box";
  }
  return "unknown";
}

namespace {

void require_positive_radius(double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ConfigError("ConstraintSet: radius must be positive and finite, got " +
                      std::to_string(radius));
  }
}

}  // namespace

ConstraintSet ConstraintSet::l1_ball(Eigen::Index dim, double radius) {
  require_positive_radius(radius);
  if (dim < 1) throw ConfigError("ConstraintSet::l1_ball: dimension must be >= 1");
  ConstraintSet set;
  set.kind_ = SetKind::L1Ball;
  set.radius_ = radius;
  set.shape_ = {dim, 1};
  return set;
}

ConstraintSet ConstraintSet::nuclear_ball(Eigen::Index rows, Eigen::Index cols, double radius) {
  require_positive_radius(radius);
  if (rows < 1 || cols < 1) throw ConfigError("ConstraintSet::nuclear_ball: empty shape");
  ConstraintSet set;
  set.kind_ = SetKind::NuclearNormBall;
  set.radius_ = radius;
  set.shape_ = {rows, cols};
  return set;
}

ConstraintSet ConstraintSet::simplex(Eigen::Index dim) {
  // A 1-dimensional simplex is a single point and has zero diameter.
  if (dim < 2) throw ConfigError("ConstraintSet::simplex: dimension must be >= 2");
  ConstraintSet set;
  set.kind_ = SetKind::Simplex;
  set.radius_ = 1.0;
  set.shape_ = {dim, 1};
  return set;
}

ConstraintSet ConstraintSet::box(Eigen::VectorXd lower, Eigen::VectorXd upper) {
  if (lower.size() != upper.size() || lower.size() < 1) {
    throw ConfigError("ConstraintSet::box: bounds must be non-empty and of equal length");
  }
  if (!lower.allFinite() || !upper.allFinite()) {
    throw ConfigError("ConstraintSet::box: bounds must be finite");
  }
  if ((lower.array() > upper.array()).any()) {
    throw ConfigError("ConstraintSet::box: lower bound exceeds upper bound");
  }
  if ((upper - lower).norm() <= 0.0) {
    throw ConfigError("ConstraintSet::box: degenerate box has zero diameter");
  }
  ConstraintSet set;
  set.kind_ = SetKind::Box;
  set.shape_ = {lower.size(), 1};
  set.lower_ = std::move(lower);
  set.upper_ = std::move(upper);
  return set;
}

ConstraintSet ConstraintSet::box(Eigen::Index dim, double lower, double upper) {
  return box(Eigen::VectorXd::Constant(dim, lower), Eigen::VectorXd::Constant(dim, upper));
}

double ConstraintSet::diameter() const {
  switch (kind_) {
    case SetKind::L1Ball:
    case SetKind::NuclearNormBall:
      return 2.0 * radius_;
    case SetKind::Simplex:
      return std::numbers::sqrt2;
    case SetKind::Box:
      return (upper_ - lower_).norm();
  }
  return 0.0;
}

double ConstraintSet::violation(const Point& x) const {
  if (!(x.shape() == shape_)) throw UsageError("ConstraintSet: point shape does not match set");
  switch (kind_) {
    case SetKind::L1Ball:
      return std::max(0.0, x.flat().lpNorm<1>() - radius_);
    case SetKind::NuclearNormBall:
      return std::max(0.0, nuclear_norm(x.mat()) - radius_);
    case SetKind::Simplex: {
      const auto v = x.flat();
      const double neg = std::max(0.0, -v.minCoeff());
      return std::max(neg, std::abs(v.sum() - 1.0));
    }
    case SetKind::Box: {
      const auto v = x.flat();
      const double below = (lower_ - v).cwiseMax(0.0).maxCoeff();
      const double above = (v - upper_).cwiseMax(0.0).maxCoeff();
      return std::max(below, above);
    }
  }
  return 0.0;
}

bool ConstraintSet::contains(const Point& x, double rel_tol) const {
  if (!(x.shape() == shape_) || !x.all_finite()) return false;
  switch (kind_) {
    case SetKind::L1Ball:
    case SetKind::NuclearNormBall:
    case SetKind::Simplex:
      return violation(x) <= rel_tol * std::max(1.0, radius_);
    case SetKind::Box: {
      const auto v = x.flat();
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double slack_lo = rel_tol * std::max(1.0, std::abs(lower_(i)));
        const double slack_hi = rel_tol * std::max(1.0, std::abs(upper_(i)));
        if (v(i) < lower_(i) - slack_lo || v(i) > upper_(i) + slack_hi) return false;
      }
      return true;
    }
  }
  return false;
}

Point ConstraintSet::canonical_vertex() const {
  Point p(shape_);
  switch (kind_) {
    case SetKind::L1Ball:
    case SetKind::NuclearNormBall:
      p.mat()(0, 0) = radius_;
      break;
    case SetKind::Simplex:
      p.mat()(0, 0) = 1.0;
      break;
    case SetKind::Box:
      p.flat() = lower_;
      break;
  }
  return p;
}

double nuclear_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().sum();
}

}  // namespace bifrank
