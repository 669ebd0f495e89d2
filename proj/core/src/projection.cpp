#include "bifrank/projection.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <functional>
#include <vector>

#include "bifrank/errors.hpp"

namespace bifrank {

namespace {

// Threshold tau such that sum(max(a_i - tau, 0)) = z for nonnegative a.
double simplex_threshold(const Eigen::VectorXd& a, double z) {
  std::vector<double> sorted(a.data(), a.data() + a.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumsum += sorted[j];
    const double candidate = (cumsum - z) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) tau = candidate;
  }
  return tau;
}

}  // namespace

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double z) {
  if (!(z > 0.0)) throw UsageError("project_simplex: z must be positive");
  if (v.size() == 0) throw UsageError("project_simplex: empty vector");
  const double tau = simplex_threshold(v, z);
  return (v.array() - tau).max(0.0).matrix();
}

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius) {
  if (!(radius > 0.0)) throw UsageError("project_l1_ball: radius must be positive");
  const Eigen::VectorXd a = v.cwiseAbs();
  if (a.sum() <= radius) return v;
  const double tau = simplex_threshold(a, radius);
  return v.array().sign() * (a.array() - tau).max(0.0);
}

Eigen::MatrixXd project_nuclear_ball(const Eigen::MatrixXd& m, double radius) {
  if (!(radius > 0.0)) throw UsageError("project_nuclear_ball: radius must be positive");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  if (s.sum() <= radius) return m;
  const Eigen::VectorXd shrunk = project_simplex(s, radius);
  return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

Point project(const ConstraintSet& set, const Point& x) {
  if (!(x.shape() == set.shape())) throw UsageError("project: shape does not match set");
  require_finite(x, "project");
  switch (set.kind()) {
    case SetKind::L1Ball:
      return Point::from_vector(project_l1_ball(x.flat(), set.radius()));
    case SetKind::Simplex:
      return Point::from_vector(project_simplex(x.flat(), 1.0));
    case SetKind::Box:
      return Point::from_vector(x.flat().cwiseMax(set.lower()).cwiseMin(set.upper()));
    case SetKind::NuclearNormBall:
      return Point(project_nuclear_ball(x.mat(), set.radius()));
  }
  throw UsageError("project: unknown set kind");
}

}  // namespace bifrank
