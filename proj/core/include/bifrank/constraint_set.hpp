#pragma once

#include <Eigen/Core>

#include "bifrank/point.hpp"

namespace bifrank {

/// Relative tolerance used by every membership check.
inline constexpr double kMembershipTol = 1e-9;

enum class SetKind { L1Ball, NuclearNormBall, Simplex, Box };

const char* to_string(SetKind kind);

/// Feasible region consumed by the linear minimization oracles.
///
/// Balls are centred at the origin. The simplex is the unit probability
/// simplex. Boxes are vector-shaped with per-coordinate bounds.
class ConstraintSet {
 public:
  static ConstraintSet l1_ball(Eigen::Index dim, double radius);
  static ConstraintSet nuclear_ball(Eigen::Index rows, Eigen::Index cols, double radius);
  static ConstraintSet simplex(Eigen::Index dim);
  static ConstraintSet box(Eigen::VectorXd lower, Eigen::VectorXd upper);
  static ConstraintSet box(Eigen::Index dim, double lower, double upper);

  [[nodiscard]] SetKind kind() const { return kind_; }
  [[nodiscard]] double radius() const { return radius_; }
  [[nodiscard]] const Eigen::VectorXd& lower() const { return lower_; }
  [[nodiscard]] const Eigen::VectorXd& upper() const { return upper_; }
  [[nodiscard]] Shape shape() const { return shape_; }

  /// Exact Euclidean (Frobenius for matrices) diameter.
  [[nodiscard]] double diameter() const;

  /// Membership up to `rel_tol`, scaled by max(1, radius) for balls and by
  /// max(1, |bound|) for box coordinates.
  [[nodiscard]] bool contains(const Point& x, double rel_tol = kMembershipTol) const;

  /// Amount by which `x` violates the set (0 for feasible points).
  [[nodiscard]] double violation(const Point& x) const;

  /// Deterministic feasible vertex used as default start and for lmo(0):
  /// +radius e0 (l1), e0 (simplex), lower corner (box), radius e0 e0^T (nuclear).
  [[nodiscard]] Point canonical_vertex() const;

 private:
  ConstraintSet() = default;

  SetKind kind_ = SetKind::L1Ball;
  double radius_ = 1.0;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  Shape shape_;
};

/// Sum of singular values.
[[nodiscard]] double nuclear_norm(const Eigen::MatrixXd& m);

}  // namespace bifrank
