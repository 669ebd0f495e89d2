#pragma once

#include <Eigen/Core>

namespace bifrank {

/// Rows x cols of a decision variable; vectors use cols == 1.
struct Shape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 1;

  [[nodiscard]] Eigen::Index size() const { return rows * cols; }
  [[nodiscard]] bool is_vector() const { return cols == 1; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense decision variable: a vector in R^m or a matrix in R^{n x m}.
///
/// Storage is a column-major Eigen matrix, so `flat()` exposes the same
/// numbers as a vector of length rows*cols without copying.
class Point {
 public:
  Point() = default;
  explicit Point(Shape shape);
  explicit Point(Eigen::MatrixXd values);

  static Point zeros(Shape shape) { return Point(shape); }
  static Point from_vector(const Eigen::VectorXd& v);

  [[nodiscard]] Shape shape() const { return {values_.rows(), values_.cols()}; }
  [[nodiscard]] Eigen::Index size() const { return values_.size(); }

  [[nodiscard]] Eigen::MatrixXd& mat() { return values_; }
  [[nodiscard]] const Eigen::MatrixXd& mat() const { return values_; }

  [[nodiscard]] Eigen::Map<Eigen::VectorXd> flat() {
    return {values_.data(), values_.size()};
  }
  [[nodiscard]] Eigen::Map<const Eigen::VectorXd> flat() const {
    return {values_.data(), values_.size()};
  }

  [[nodiscard]] bool all_finite() const { return values_.allFinite(); }
  [[nodiscard]] double norm() const { return values_.norm(); }

  friend bool operator==(const Point& a, const Point& b) {
    return a.shape() == b.shape() && a.values_ == b.values_;
  }

 private:
  Eigen::MatrixXd values_;
};

/// Frobenius inner product; throws UsageError on shape mismatch.
[[nodiscard]] double dot(const Point& a, const Point& b);

/// Throws UsageError unless `a` and `b` have identical shapes.
void require_same_shape(const Point& a, const Point& b, const char* what);

/// Throws NumericError if any entry of `p` is NaN or Inf.
void require_finite(const Point& p, const char* what);

/// (1 - eta) x + eta s.  eta must lie in [0, 1].
[[nodiscard]] Point convex_step(const Point& x, const Point& s, double eta);

}  // namespace bifrank
