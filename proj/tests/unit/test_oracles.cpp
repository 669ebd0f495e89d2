#include <cmath>
#include <map>
#include <vector>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "bifrank/errors.hpp"
#include "bifrank/hypergradient.hpp"
#include "bifrank/problems/testbeds.hpp"
#include "test_support.hpp"

namespace bifrank {
namespace {

using testing::ConstantHessianOracle;
using testing::scalar;

problems::BilevelQuadraticSpec scalar_quadratic_spec() {
  // f = (y - x)^2 / 2, g = (y - x)^2 / 2: y*(x) = x and Q is constant.
  problems::BilevelQuadraticSpec s;
  s.C = Eigen::MatrixXd::Ones(1, 1);
  s.c = Eigen::VectorXd::Zero(1);
  s.a = Eigen::VectorXd::Ones(1);
  s.P = Eigen::MatrixXd::Ones(1, 1);
  s.y0 = Eigen::VectorXd::Zero(1);
  s.x0 = Eigen::VectorXd::Zero(1);
  s.q = Eigen::VectorXd::Zero(1);
  return s;
}

TEST(Neumann, ScalarExampleValuesPerDrawnL) {
  const ConstantHessianOracle oracle(1.0, 2.0, 0.0, 1.0, 1.0);
  CountedBilevel calls(oracle);
  RngStream hessian(1, StreamId::Hessian);
  bool seen[2] = {false, false};
  for (int i = 0; i < 64; ++i) {
    std::uint64_t l = 99;
    const Point r = neumann_inverse_apply(calls, scalar(0), scalar(0), scalar(1), 2, hessian, &l);
    ASSERT_LT(l, 2U);
    seen[l] = true;
    EXPECT_DOUBLE_EQ(r.flat()(0), l == 0 ? 1.0 : 0.5);
  }
  EXPECT_TRUE(seen[0] && seen[1]);
}

TEST(Neumann, KOneAlwaysReturnsVOverL) {
  const ConstantHessianOracle oracle(1.0, 4.0, 0.0, 1.0, 1.0);
  CountedBilevel calls(oracle);
  RngStream hessian(2, StreamId::Hessian);
  for (int i = 0; i < 20; ++i) {
    std::uint64_t l = 99;
    const Point r = neumann_inverse_apply(calls, scalar(0), scalar(0), scalar(3), 1, hessian, &l);
    EXPECT_EQ(l, 0U);
    EXPECT_DOUBLE_EQ(r.flat()(0), 0.75);
  }
  EXPECT_EQ(calls.counter().hessian, 0U);
}

TEST(Neumann, ZeroVectorMapsToZero) {
  const ConstantHessianOracle oracle(1.0, 2.0, 0.0, 1.0, 1.0);
  CountedBilevel calls(oracle);
  RngStream hessian(3, StreamId::Hessian);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(neumann_inverse_apply(calls, scalar(0), scalar(0), scalar(0), 7, hessian).flat()(0),
              0.0);
  }
}

TEST(Neumann, KZeroIsUsageError) {
  const ConstantHessianOracle oracle(1.0, 2.0, 0.0, 1.0, 1.0);
  CountedBilevel calls(oracle);
  RngStream hessian(3, StreamId::Hessian);
  EXPECT_THROW((void)neumann_inverse_apply(calls, scalar(0), scalar(0), scalar(1), 0, hessian),
               UsageError);
}

TEST(Neumann, ConsumesExactlyLHessianSamples) {
  const ConstantHessianOracle oracle(1.0, 3.0, 0.0, 1.0, 1.0);
  RngStream hessian(4, StreamId::Hessian);
  for (int i = 0; i < 50; ++i) {
    CountedBilevel calls(oracle);
    std::uint64_t l = 0;
    (void)neumann_inverse_apply(calls, scalar(0), scalar(0), scalar(1), 9, hessian, &l);
    EXPECT_EQ(calls.counter().hessian, l);
  }
}

TEST(Neumann, MeanMatchesClosedForm) {
  struct Case {
    double mu, L;
    std::uint64_t k;
  };
  for (const Case c : {Case{1, 2, 2}, Case{1, 2, 5}, Case{0.5, 1, 4}}) {
    const ConstantHessianOracle oracle(c.mu, c.L, 0.0, 1.0, 1.0);
    CountedBilevel calls(oracle);
    RngStream hessian(5, StreamId::Hessian);
    const int n = 20000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r =
          neumann_inverse_apply(calls, scalar(0), scalar(0), scalar(1), c.k, hessian).flat()(0);
      sum += r;
      sum_sq += r * r;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / n);
    const double expected = (1.0 / c.mu) * (1.0 - std::pow(1.0 - c.mu / c.L, c.k));
    EXPECT_NEAR(mean, expected, 3.0 * se) << "mu=" << c.mu << " L=" << c.L << " k=" << c.k;
  }
}

TEST(Neumann, LinearUnderReplayedStream) {
  RngStream gen(6, StreamId::Problem);
  auto spec = problems::random_bilevel_quadratic(3, 4, 0.5, 2.0, 0.0, gen);
  spec.hessian_noise = 0.5;
  const problems::BilevelQuadratic oracle(spec);
  CountedBilevel calls(oracle);
  const Point x = Point::from_vector(testing::random_vector(3, gen));
  const Point y = Point::from_vector(testing::random_vector(4, gen));
  RngStream hessian(6, StreamId::Hessian);
  for (int trial = 0; trial < 30; ++trial) {
    const Point v = Point::from_vector(testing::random_vector(4, gen));
    const Point w = Point::from_vector(testing::random_vector(4, gen));
    const double a = gen.normal();
    const double b = gen.normal();
    Point combo(v.shape());
    combo.flat() = a * v.flat() + b * w.flat();
    RngStream h1 = hessian, h2 = hessian, h3 = hessian;
    const Point nv = neumann_inverse_apply(calls, x, y, v, 8, h1);
    const Point nw = neumann_inverse_apply(calls, x, y, w, 8, h2);
    const Point nc = neumann_inverse_apply(calls, x, y, combo, 8, h3);
    EXPECT_LT((nc.flat() - (a * nv.flat() + b * nw.flat())).norm(),
              1e-10 * (1.0 + nc.flat().norm()));
    EXPECT_EQ(h1, h3);
    (void)hessian.next_u64();
  }
}

TEST(Hypergradient, StationaryPointOfQuadraticTestbedIsZero) {
  const problems::BilevelQuadratic oracle(scalar_quadratic_spec());
  CountedBilevel calls(oracle);
  RngStream theta(1, StreamId::Theta), hessian(1, StreamId::Hessian);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(hypergradient_sample(calls, scalar(1), scalar(1), 5, theta, hessian).flat()(0),
              0.0);
  }
}

TEST(Hypergradient, QuadraticTestbedUnbiasedAwayFromInnerOptimum) {
  // At x = 1, y = 0 with mu = L = 1 the Neumann chain is k v for l = 0 and 0
  // otherwise, so the sample is 1 - k [l = 0] with mean 0 = grad Q.
  const problems::BilevelQuadratic oracle(scalar_quadratic_spec());
  CountedBilevel calls(oracle);
  RngStream theta(2, StreamId::Theta), hessian(2, StreamId::Hessian);
  const std::uint64_t k = 50;
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    std::uint64_t l = 0;
    const double h = hypergradient_sample(calls, scalar(1), scalar(0), k, theta, hessian, &l)
                         .flat()(0);
    EXPECT_DOUBLE_EQ(h, l == 0 ? 1.0 - static_cast<double>(k) : 1.0);
    sum += h;
  }
  const double se = std::sqrt(static_cast<double>(k - 1)) / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(sum / n, 0.0, 3.0 * se);
  EXPECT_NEAR(surrogate_gradient_exact(oracle, scalar(1), scalar(0)).flat()(0), 0.0, 1e-15);
  EXPECT_NEAR(surrogate_gradient_exact(oracle, scalar(-2), scalar(5)).flat()(0), 0.0, 1e-15);
}

TEST(Hypergradient, DeterministicScalarExpectation) {
  // grad_x f = 0, grad_y f = 1, cross = 1: h = -N(1), which is -1 (l = 0)
  // or -0.5 (l = 1), mean -0.75.
  const ConstantHessianOracle oracle(1.0, 2.0, 0.0, 1.0, 1.0);
  CountedBilevel calls(oracle);
  RngStream theta(3, StreamId::Theta), hessian(3, StreamId::Hessian);
  std::map<std::uint64_t, double> by_l;
  for (int i = 0; i < 64; ++i) {
    std::uint64_t l = 0;
    const double h = hypergradient_sample(calls, scalar(0), scalar(0), 2, theta, hessian, &l)
                         .flat()(0);
    by_l[l] = h;
  }
  ASSERT_EQ(by_l.size(), 2U);
  EXPECT_DOUBLE_EQ(0.5 * (by_l[0] + by_l[1]), -0.75);
}

TEST(Hypergradient, CounterAccounting) {
  RngStream gen(7, StreamId::Problem);
  auto spec = problems::random_bilevel_quadratic(3, 3, 1.0, 3.0, 0.0, gen);
  spec.hessian_noise = 0.2;
  spec.outer_noise = 0.1;
  const problems::BilevelQuadratic oracle(spec);
  RngStream theta(7, StreamId::Theta), hessian(7, StreamId::Hessian);
  const Point x = Point::from_vector(testing::random_vector(3, gen));
  const Point y = Point::from_vector(testing::random_vector(3, gen));
  for (int i = 0; i < 30; ++i) {
    CountedBilevel calls(oracle);
    std::uint64_t l = 0;
    (void)hypergradient_sample(calls, x, y, 6, theta, hessian, &l);
    EXPECT_EQ(calls.counter().hessian, l + 1);
    EXPECT_EQ(calls.counter().outer, 2U);
    EXPECT_EQ(calls.counter().inner, 0U);
    EXPECT_EQ(calls.counter().map, 0U);
  }
}

TEST(SurrogateGradient, MatchesDenseSolve) {
  RngStream gen(8, StreamId::Problem);
  auto spec = problems::random_bilevel_quadratic(4, 5, 0.3, 4.0, 0.7, gen);
  spec.q = testing::random_vector(4, gen);
  const problems::BilevelQuadratic oracle(spec);
  // Independent derivation: Hyy = diag(a), Hxy = -C^T diag(a), so
  // grad S = grad_x F + C^T grad_y F.
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd x = testing::random_vector(4, gen);
    const Eigen::VectorXd y = testing::random_vector(5, gen);
    const Eigen::VectorXd r = y - spec.P * x - spec.y0;
    const Eigen::VectorXd gx = -spec.P.transpose() * r + spec.beta * (x - spec.x0) + spec.q;
    const Eigen::MatrixXd Hyy = spec.a.asDiagonal();
    const Eigen::MatrixXd Hxy = -spec.C.transpose() * spec.a.asDiagonal();
    const Eigen::VectorXd expected = gx - Hxy * Hyy.inverse() * r;
    const Point got =
        surrogate_gradient_exact(oracle, Point::from_vector(x), Point::from_vector(y));
    EXPECT_LT((got.flat() - expected).norm(), 1e-10 * (1.0 + expected.norm()));
  }
}

TEST(SurrogateGradient, AtInnerOptimumEqualsObjectiveGradient) {
  RngStream gen(9, StreamId::Problem);
  auto spec = problems::random_bilevel_quadratic(3, 4, 0.5, 2.0, 0.3, gen);
  const problems::BilevelQuadratic oracle(spec);
  const ExactBilevelModel& model = oracle.model();
  for (int trial = 0; trial < 5; ++trial) {
    const Point x = Point::from_vector(testing::random_vector(3, gen));
    const Point g = surrogate_gradient_exact(oracle, x, model.inner_optimum(x));
    const Point fd =
        testing::fd_gradient([&](const Point& p) { return model.objective(p); }, x);
    EXPECT_LT(testing::rel_error(g, fd), 1e-6);
    EXPECT_LT(testing::rel_error(model.hypergradient(x), g), 1e-14);
  }
}

TEST(SurrogateGradient, OracleWithoutExactModelIsCapabilityError) {
  const ConstantHessianOracle oracle(1.0, 2.0, 0.0, 1.0, 1.0);
  EXPECT_THROW((void)surrogate_gradient_exact(oracle, scalar(0), scalar(0)), CapabilityError);
}

TEST(Hypergradient, BiasDecaysGeometricallyInK) {
  // With deterministic Hessians a sample depends only on l, so the exact
  // expectation is the average over l = 0..k-1 of per-l values.
  RngStream gen(10, StreamId::Problem);
  auto spec = problems::random_bilevel_quadratic(3, 4, 1.0, 2.0, 0.0, gen);
  const problems::BilevelQuadratic oracle(spec);
  const double mu = oracle.mu_g(), L = oracle.L_g();
  const Point x = Point::from_vector(testing::random_vector(3, gen));
  const Point y = Point::from_vector(testing::random_vector(4, gen));
  const Point exact = surrogate_gradient_exact(oracle, x, y);
  std::vector<double> bias;
  for (std::uint64_t k = 1; k <= 12; ++k) {
    CountedBilevel calls(oracle);
    RngStream theta(1, StreamId::Theta), hessian(1, StreamId::Hessian);
    std::map<std::uint64_t, Eigen::VectorXd> per_l;
    while (per_l.size() < k) {
      std::uint64_t l = 0;
      const Point h = hypergradient_sample(calls, x, y, k, theta, hessian, &l);
      per_l[l] = h.flat();
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
    for (const auto& [l, v] : per_l) mean += v / static_cast<double>(k);
    bias.push_back((mean - exact.flat()).norm());
  }
  for (std::size_t i = 1; i < bias.size(); ++i) {
    EXPECT_LE(bias[i] / bias[i - 1], (1.0 - mu / L) + 0.05) << "k=" << i + 1;
  }
}

TEST(CompositionalAsBilevel, KOneSampleIsCompositionalGradient) {
  RngStream gen(11, StreamId::Problem);
  problems::CompositionalQuadraticSpec spec;
  spec.H = testing::random_matrix(4, 3, gen);
  spec.b = testing::random_vector(4, gen);
  spec.y0 = testing::random_vector(4, gen);
  spec.map_noise = 0.3;
  spec.offset_noise = 0.2;
  spec.outer_noise = 0.1;
  const problems::CompositionalQuadratic comp(spec);
  const CompositionalAsBilevel adapter(comp);
  EXPECT_EQ(adapter.mu_g(), 1.0);
  EXPECT_EQ(adapter.L_g(), 1.0);
  CountedBilevel calls(adapter);
  const Point x = Point::from_vector(testing::random_vector(3, gen));
  const Point y = Point::from_vector(testing::random_vector(4, gen));
  RngStream theta(1, StreamId::Theta), hessian(1, StreamId::Hessian);
  RngStream theta_copy = theta, hessian_copy = hessian;
  const Point h = hypergradient_sample(calls, x, y, 1, theta, hessian);
  // Replay: l consumes one draw, then the cross term draws the map sample.
  (void)hessian_copy.uniform_index(1);
  const Point expected = comp.vjp_h(x, comp.grad_f(y, theta_copy), hessian_copy);
  EXPECT_LT(testing::rel_error(h, expected), 1e-14);
  const Point exact = surrogate_gradient_exact(adapter, x, y);
  EXPECT_LT(testing::rel_error(exact, comp.model().vjp(x, comp.model().grad_f(y))), 1e-14);
}

TEST(CountedWrappers, EachCallBumpsOneCounter) {
  const ConstantHessianOracle oracle(1.0, 2.0, 0.0, 1.0, 1.0);
  CountedBilevel calls(oracle);
  RngStream s(1, StreamId::Theta);
  (void)calls.grad_x_f(scalar(0), scalar(0), s);
  (void)calls.grad_y_f(scalar(0), scalar(0), s);
  (void)calls.grad_y_g(scalar(0), scalar(0), s);
  (void)calls.hvp_yy_g(scalar(0), scalar(0), scalar(1), s);
  (void)calls.cross_hvp_xy_g(scalar(0), scalar(0), scalar(1), s);
  EXPECT_EQ(calls.counter(), (OracleCallCounter{2, 1, 2, 0}));
  EXPECT_EQ(calls.counter().total(), 5U);
}

}  // namespace
}  // namespace bifrank
