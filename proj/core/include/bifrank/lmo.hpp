#pragma once

#include <Eigen/Core>

#include "bifrank/constraint_set.hpp"
#include "bifrank/point.hpp"
#include "bifrank/rng.hpp"

namespace bifrank {

struct PowerIterationOptions {
  double rel_tol = 1e-8;
  int max_iterations = 500;
};

struct SingularPair {
  Eigen::VectorXd u;  // unit left singular vector
  Eigen::VectorXd v;  // unit right singular vector
  double sigma = 0.0;
  int iterations = 0;
};

/// Top singular pair of `d` by power iteration on d^T d, applied as the
/// alternating products d v and d^T u so d^T d is never formed.
///
/// The start vector is drawn from `rng` when given and is the normalized
/// all-ones vector otherwise. If the first pass collapses (d v == 0), one
/// restart is made from the largest-norm row of d.
[[nodiscard]] SingularPair top_singular_pair(const Eigen::MatrixXd& d, RngStream* rng = nullptr,
                                             const PowerIterationOptions& options = {});

struct LmoResult {
  Point vertex;               // argmin over the set of <s, d>
  double inner_product = 0;   // <vertex, d>
  int iterations_used = 0;    // power iterations (nuclear ball only)
};

/// Linear minimization oracle: argmin_{s in set} <s, d>.
///
/// Ties pick the lowest index. A zero direction returns the set's canonical
/// vertex. Throws UsageError on shape mismatch and NumericError on non-finite d.
[[nodiscard]] LmoResult lmo(const ConstraintSet& set, const Point& d, RngStream* rng = nullptr,
                            const PowerIterationOptions& options = {});

/// Frank-Wolfe gap max_{v in set} <v - x, -grad>, evaluated via lmo(set, grad).
/// Throws UsageError if x is not in the set.
[[nodiscard]] double fw_gap(const ConstraintSet& set, const Point& x, const Point& grad,
                            RngStream* rng = nullptr);

}  // namespace bifrank
