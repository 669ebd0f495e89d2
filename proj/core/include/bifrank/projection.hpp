#pragma once

#include <Eigen/Core>

#include "bifrank/constraint_set.hpp"
#include "bifrank/point.hpp"

namespace bifrank {

/// Euclidean projection of v onto {w >= 0, sum(w) = z}. Sort-based, O(n log n).
[[nodiscard]] Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double z = 1.0);

/// Euclidean projection onto {w : ||w||_1 <= radius} by sorted soft-thresholding.
[[nodiscard]] Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius);

/// Frobenius projection onto {X : ||X||_* <= radius}: full SVD, then the
/// singular values are projected onto {s >= 0, sum(s) <= radius}.
[[nodiscard]] Eigen::MatrixXd project_nuclear_ball(const Eigen::MatrixXd& m, double radius);

/// Projection onto any supported set.
[[nodiscard]] Point project(const ConstraintSet& set, const Point& x);

}  // namespace bifrank
