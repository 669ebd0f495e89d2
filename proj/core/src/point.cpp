#include "bifrank/point.hpp"

#include <string>
#include <utility>

#include "bifrank/errors.hpp"

namespace bifrank {

Point::Point(Shape shape) : values_(Eigen::MatrixXd::Zero(shape.rows, shape.cols)) {}

Point::Point(Eigen::MatrixXd values) : values_(std::move(values)) {}

Point Point::from_vector(const Eigen::VectorXd& v) { return Point(Eigen::MatrixXd(v)); }

void require_same_shape(const Point& a, const Point& b, const char* what) {
  if (!(a.shape() == b.shape())) {
    throw UsageError(std::string(what) + ": shape mismatch (" + std::to_string(a.shape().rows) +
                     "x" + std::to_string(a.shape().cols) + " vs " +
                     std::to_string(b.shape().rows) + "x" + std::to_string(b.shape().cols) +
                     ")");
  }
}

void require_finite(const Point& p, const char* what) {
  if (!p.all_finite()) throw NumericError(std::string(what) + ": non-finite entries");
}

double dot(const Point& a, const Point& b) {
  require_same_shape(a, b, "dot");
  return a.flat().dot(b.flat());
}

Point convex_step(const Point& x, const Point& s, double eta) {
  require_same_shape(x, s, "convex_step");
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw UsageError("convex_step: eta must lie in [0,1], got " + std::to_string(eta));
  }
  Point out(((1.0 - eta) * x.mat() + eta * s.mat()).eval());
  require_finite(out, "convex_step");
  return out;
}

}  // namespace bifrank
