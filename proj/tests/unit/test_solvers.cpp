#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "bifrank/errors.hpp"
#include "bifrank/lmo.hpp"
#include "bifrank/problems/matrix_completion.hpp"
#include "bifrank/problems/testbeds.hpp"
#include "bifrank/solvers.hpp"
#include "test_support.hpp"

namespace bifrank {
namespace {

problems::BilevelQuadraticSpec linear_q_spec(double noise) {
  // y*(x) = x and f = 1/2 ||y - x||^2 + q^T x, so Q(x) = q^T x.
  problems::BilevelQuadraticSpec s;
  s.C = Eigen::MatrixXd::Identity(3, 3);
  s.P = Eigen::MatrixXd::Identity(3, 3);
  s.c = Eigen::VectorXd::Zero(3);
  s.y0 = Eigen::VectorXd::Zero(3);
  s.x0 = Eigen::VectorXd::Zero(3);
  s.a = Eigen::VectorXd::Ones(3);
  s.q = Eigen::Vector3d(0.5, -1.0, 0.25);
  s.inner_noise = noise;
  s.outer_noise = noise;
  return s;
}

problems::BilevelQuadraticSpec noisy_random_spec(std::uint64_t seed) {
  RngStream gen(seed, StreamId::Problem);
  auto s = problems::random_bilevel_quadratic(4, 5, 0.5, 2.0, 0.1, gen);
  s.inner_noise = 0.2;
  s.outer_noise = 0.2;
  s.hessian_noise = 0.2;
  return s;
}

SolverConfig config_for(Algorithm a, std::uint64_t horizon, std::uint64_t seed = 0) {
  SolverConfig c;
  c.algorithm = a;
  c.horizon = horizon;
  c.seed = seed;
  return c;
}

void expect_same_records(const RunResult& a, const RunResult& b) {
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const RunRecord& r = a.records[i];
    const RunRecord& s = b.records[i];
    EXPECT_EQ(r.iter, s.iter);
    EXPECT_EQ(r.objective, s.objective);
    EXPECT_EQ(r.normalized_error, s.normalized_error);
    EXPECT_EQ(r.fw_gap, s.fw_gap);
    EXPECT_EQ(r.inner_gap, s.inner_gap);
    EXPECT_EQ(r.calls, s.calls);
  }
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.output_index, b.output_index);
}

TEST(Sbfw, SingleStepLandsOnAVertex) {
  const problems::BilevelQuadratic oracle(noisy_random_spec(1));
  const ConstraintSet set = ConstraintSet::l1_ball(4, 1.5);
  const RunResult r = run_sbfw(oracle, set, config_for(Algorithm::Sbfw, 1));
  ASSERT_EQ(r.records.size(), 1U);
  EXPECT_EQ(r.output_index, 2U);
  EXPECT_EQ((r.x.flat().array() != 0.0).count(), 1);
  EXPECT_DOUBLE_EQ(r.x.flat().lpNorm<1>(), 1.5);
}

TEST(Sbfw, LinearObjectiveReachesOptimalVertex) {
  const problems::BilevelQuadratic oracle(linear_q_spec(0.1));
  const ConstraintSet set = ConstraintSet::l1_ball(3, 1.0);
  const RunResult r = run_sbfw(oracle, set, config_for(Algorithm::Sbfw, 10000, 3));
  ASSERT_FALSE(r.aborted) << r.abort_reason;
  const double q_star = -1.0;
  EXPECT_LT(r.records.back().objective.value() - q_star, 1e-2);
  EXPECT_LT(oracle.model().objective(r.x) - q_star, 1e-2);
}

TEST(Sbfw, PerIterationOracleAccounting) {
  const problems::BilevelQuadratic oracle(noisy_random_spec(2));
  const ConstraintSet set = ConstraintSet::l1_ball(4, 1.0);
  const SolverConfig config = config_for(Algorithm::Sbfw, 200, 5);
  const RunResult r = run_sbfw(oracle, set, config);
  ASSERT_EQ(r.records.size(), 200U);
  const ScheduleSpec spec{Regime::SbfwConvex, oracle.mu_g(), oracle.L_g(), oracle.sigma_g_sq(),
                          200};
  OracleCallCounter prev;
  for (const RunRecord& rec : r.records) {
    const std::uint64_t k = schedule(spec, rec.iter).k;
    const auto d_inner = rec.calls.inner - prev.inner;
    const auto d_outer = rec.calls.outer - prev.outer;
    const auto d_hess = rec.calls.hessian - prev.hessian;
    if (rec.iter == 1) {
      EXPECT_EQ(d_inner, 0U);
      EXPECT_EQ(d_outer, 2U);
      EXPECT_LE(d_hess, k);
    } else {
      EXPECT_EQ(d_inner, 1U);
      EXPECT_EQ(d_outer, 4U);
      EXPECT_EQ(d_hess % 2, 0U);
      EXPECT_LE(d_hess, 2 * k);
    }
    EXPECT_EQ(rec.calls.map, 0U);
    prev = rec.calls;
  }
  EXPECT_EQ(r.calls, r.records.back().calls);
}

TEST(Sbfw, DeterministicBySeed) {
  const problems::BilevelQuadratic oracle(noisy_random_spec(3));
  const ConstraintSet set = ConstraintSet::l1_ball(4, 1.0);
  const SolverConfig config = config_for(Algorithm::Sbfw, 300, 9);
  expect_same_records(run_sbfw(oracle, set, config), run_sbfw(oracle, set, config));
  const RunResult other = run_sbfw(oracle, set, config_for(Algorithm::Sbfw, 300, 10));
  EXPECT_NE(other.x, run_sbfw(oracle, set, config).x);
}

TEST(Sbfw, RecordsAreOrderedAndHonourCadence) {
  const problems::BilevelQuadratic oracle(noisy_random_spec(4));
  SolverConfig config = config_for(Algorithm::Sbfw, 95);
  config.cadence = 10;
  const RunResult r = run_sbfw(oracle, ConstraintSet::l1_ball(4, 1.0), config);
  ASSERT_EQ(r.records.size(), 10U);
  EXPECT_EQ(r.records.front().iter, 10U);
  EXPECT_EQ(r.records.back().iter, 95U);
  for (std::size_t i = 1; i < r.records.size(); ++i) {
    EXPECT_GT(r.records[i].iter, r.records[i - 1].iter);
    EXPECT_GE(r.records[i].wall_clock_ms, r.records[i - 1].wall_clock_ms);
  }
  for (const RunRecord& rec : r.records) {
    EXPECT_TRUE(rec.objective && rec.fw_gap && rec.inner_gap);
    EXPECT_FALSE(rec.normalized_error);
    EXPECT_GE(*rec.fw_gap, -1e-9);
  }
}

TEST(Sbfw, InnerGapShrinks) {
  const problems::BilevelQuadratic oracle(noisy_random_spec(5));
  const RunResult r =
      run_sbfw(oracle, ConstraintSet::l1_ball(4, 1.0), config_for(Algorithm::Sbfw, 3000));
  double early = 0, late = 0;
  for (int i = 10; i < 60; ++i) early += *r.records[i].inner_gap;
  for (std::size_t i = r.records.size() - 50; i < r.records.size(); ++i) {
    late += *r.records[i].inner_gap;
  }
  EXPECT_LT(late, 0.5 * early);
}

TEST(Sbfw, UniformOutputReturnsRecordedIterate) {
  const problems::BilevelQuadratic oracle(noisy_random_spec(6));
  const ConstraintSet set = ConstraintSet::l1_ball(4, 1.0);
  SolverConfig config = config_for(Algorithm::Sbfw, 50, 11);
  config.nonconvex = true;
  std::vector<Point> iterates = {set.canonical_vertex()};
  RunOptions options;
  options.on_iterate = [&](std::uint64_t, const Point& x) { iterates.push_back(x); };
  const RunResult r = run_sbfw(oracle, set, config, options);
  ASSERT_GE(r.output_index, 1U);
  ASSERT_LE(r.output_index, 50U);
  EXPECT_EQ(r.x, iterates[r.output_index - 1]);
  EXPECT_EQ(r.last, iterates.back());
}

TEST(Sbfw, AbortsOnNonFiniteGradientWithPartialRecords) {
  const problems::BilevelQuadratic base(noisy_random_spec(7));
  const testing::PoisonedBilevel oracle(base, 40);
  const ConstraintSet set = ConstraintSet::l1_ball(4, 1.0);
  const RunResult r = run_sbfw(oracle, set, config_for(Algorithm::Sbfw, 100));
  EXPECT_TRUE(r.aborted);
  EXPECT_NE(r.abort_reason.find("non-finite"), std::string::npos);
  EXPECT_FALSE(r.records.empty());
  EXPECT_LT(r.records.size(), 100U);
  EXPECT_TRUE(set.contains(r.x));
}

TEST(Solvers, ConfigAndUsageErrors) {
  const problems::BilevelQuadratic oracle(noisy_random_spec(8));
  const ConstraintSet set = ConstraintSet::l1_ball(4, 1.0);
  EXPECT_THROW((void)run_sbfw(oracle, set, config_for(Algorithm::Sbfw, 0)), ConfigError);
  EXPECT_THROW((void)run_sbfw(oracle, set, config_for(Algorithm::Scfw, 10)), ConfigError);
  SolverConfig bad = config_for(Algorithm::Sbfw, 10);
  bad.overrides.rho = 1.5;
  EXPECT_THROW((void)run_sbfw(oracle, set, bad), ConfigError);
  bad = config_for(Algorithm::Sbfw, 10);
  bad.cadence = 0;
  EXPECT_THROW((void)run_sbfw(oracle, set, bad), ConfigError);
  bad = config_for(Algorithm::Sbfw, 10);
  bad.overrides.k = 0;
  EXPECT_THROW((void)run_sbfw(oracle, set, bad), ConfigError);
  RunOptions infeasible;
  infeasible.x1 = Point::from_vector(Eigen::VectorXd::Ones(4));
  EXPECT_THROW((void)run_sbfw(oracle, set, config_for(Algorithm::Sbfw, 10), infeasible),
               UsageError);
  EXPECT_THROW(
      (void)run_sbfw(oracle, ConstraintSet::l1_ball(3, 1.0), config_for(Algorithm::Sbfw, 10)),
      UsageError);
}

TEST(Solvers, EffectiveStepsApplyOverrides) {
  SolverConfig config = config_for(Algorithm::Sbfw, 100);
  const ScheduleSpec spec{Regime::SbfwConvex, 1.0, 2.0, 0.0, 100};
  config.overrides.inner_step_scale = 0.5;
  EXPECT_NEAR(effective_steps(config, spec, 8).delta, 0.5 / 4.0, 1e-15);
  config.overrides.delta = 0.3;
  config.overrides.rho = 0.2;
  config.overrides.eta = 0.1;
  config.overrides.k = 4;
  const StepSizes s = effective_steps(config, spec, 8);
  EXPECT_EQ(s.delta, 0.3);
  EXPECT_EQ(s.rho, 0.2);
  EXPECT_EQ(s.eta, 0.1);
  EXPECT_EQ(s.k, 4U);
}

TEST(Scfw, DeterministicOracleMatchesFrankWolfe) {
  RngStream gen(12, StreamId::Problem);
  problems::CompositionalQuadraticSpec spec;
  spec.H = testing::random_matrix(5, 4, gen);
  spec.b = testing::random_vector(5, gen);
  spec.y0 = testing::random_vector(5, gen);
  const problems::CompositionalQuadratic oracle(spec);
  const ConstraintSet set = ConstraintSet::l1_ball(4, 1.0);
  std::vector<Point> iterates;
  RunOptions options;
  options.on_iterate = [&](std::uint64_t, const Point& x) { iterates.push_back(x); };
  (void)run_scfw(oracle, set, config_for(Algorithm::Scfw, 200, 1), options);
  Point x = set.canonical_vertex();
  for (std::uint64_t t = 1; t <= 200; ++t) {
    const Point s = lmo(set, oracle.model().gradient(x)).vertex;
    x = convex_step(x, s, std::min(1.0, 2.0 / (t + 1.0)));
    ASSERT_LT((x.flat() - iterates[t - 1].flat()).norm(), 1e-12) << "t=" << t;
  }
}

TEST(Scfw, DeterministicBySeedAndAccounting) {
  RngStream gen(13, StreamId::Problem);
  problems::CompositionalQuadraticSpec spec;
  spec.H = testing::random_matrix(5, 4, gen);
  spec.b = testing::random_vector(5, gen);
  spec.y0 = testing::random_vector(5, gen);
  spec.map_noise = 0.1;
  spec.offset_noise = 0.1;
  spec.outer_noise = 0.1;
  const problems::CompositionalQuadratic oracle(spec);
  const ConstraintSet set = ConstraintSet::simplex(4);
  const SolverConfig config = config_for(Algorithm::Scfw, 100, 4);
  const RunResult a = run_scfw(oracle, set, config);
  expect_same_records(a, run_scfw(oracle, set, config));
  // t = 1: one map sample and one gradient pair; later iterations take two of each.
  EXPECT_EQ(a.records[0].calls, (OracleCallCounter{1, 1, 0, 1}));
  EXPECT_EQ(a.records[1].calls, (OracleCallCounter{3, 3, 0, 3}));
}

TEST(Sfw, LinearObjectiveReachesOptimalVertex) {
  const problems::StochasticQuadratic oracle(Eigen::MatrixXd(0, 3), Eigen::VectorXd(0),
                                             Eigen::Vector3d(0.3, -0.7, 0.2), 0.0);
  const RunResult r =
      run_sfw_baseline(oracle, ConstraintSet::l1_ball(3, 1.0), config_for(Algorithm::Sfw, 1000));
  EXPECT_LT(*r.records.back().fw_gap, 1e-3);
}

TEST(Sfw, ZeroObjectiveStaysFeasibleWithZeroGap) {
  const problems::StochasticQuadratic oracle(Eigen::MatrixXd(0, 3), Eigen::VectorXd(0),
                                             Eigen::Vector3d::Zero(), 0.0);
  const ConstraintSet set = ConstraintSet::box(3, -1.0, 2.0);
  RunOptions options;
  options.on_iterate = [&](std::uint64_t, const Point& x) { EXPECT_TRUE(set.contains(x)); };
  const RunResult r = run_sfw_baseline(oracle, set, config_for(Algorithm::Sfw, 100), options);
  for (const RunRecord& rec : r.records) EXPECT_EQ(*rec.fw_gap, 0.0);
}

TEST(Solvers, FeasibleForLifeOnEverySetKind) {
  const problems::BilevelQuadratic quad(noisy_random_spec(14));
  RngStream gen(14, StreamId::Problem);
  const auto mc = problems::matcomp_synthetic(6, 2, 0.3, 0.8, gen);
  auto mc_problem = mc.problem;
  mc_problem.batch_outer = 5;
  mc_problem.batch_inner = 5;
  const problems::MatrixCompletionOracle matcomp(mc_problem);

  auto check_all = [](const ConstraintSet& set) {
    RunOptions options;
    options.on_iterate = [&set](std::uint64_t t, const Point& x) {
      EXPECT_TRUE(set.contains(x)) << to_string(set.kind()) << " t=" << t;
    };
    return options;
  };
  const std::vector<ConstraintSet> vector_sets = {
      ConstraintSet::l1_ball(4, 2.0), ConstraintSet::simplex(4), ConstraintSet::box(4, -0.5, 1.0)};
  for (const ConstraintSet& set : vector_sets) {
    (void)run_sbfw(quad, set, config_for(Algorithm::Sbfw, 200), check_all(set));
    (void)run_projected_baseline(quad, set, config_for(Algorithm::ProjectedBilevel, 200),
                                 check_all(set));
  }
  const ConstraintSet nuc = ConstraintSet::nuclear_ball(6, 6, mc_problem.alpha);
  RunOptions nuc_options = check_all(nuc);
  nuc_options.x1 = matcomp.initial_outer();
  nuc_options.y1 = matcomp.initial_inner();
  SolverConfig c = config_for(Algorithm::Sbfw, 50);
  c.overrides.k = 5;
  (void)run_sbfw(matcomp, nuc, c, nuc_options);
  c.algorithm = Algorithm::ProjectedBilevel;
  (void)run_projected_baseline(matcomp, nuc, c, nuc_options);
}

TEST(Projected, RunsAndIsDeterministic) {
  const problems::BilevelQuadratic oracle(noisy_random_spec(15));
  const ConstraintSet set = ConstraintSet::l1_ball(4, 1.0);
  const SolverConfig config = config_for(Algorithm::ProjectedBilevel, 100, 2);
  const RunResult a = run_projected_baseline(oracle, set, config);
  EXPECT_FALSE(a.aborted);
  expect_same_records(a, run_projected_baseline(oracle, set, config));
  EXPECT_THROW((void)run_projected_baseline(oracle, set, config_for(Algorithm::Sbfw, 10)),
               ConfigError);
}

}  // namespace
}  // namespace bifrank
