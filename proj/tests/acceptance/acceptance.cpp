// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Arguments select a subset by number, e.g. `acceptance 1 3 12`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "bifrank/errors.hpp"
#include "bifrank/hypergradient.hpp"
#include "bifrank/lmo.hpp"
#include "bifrank/problems/matrix_completion.hpp"
#include "bifrank/problems/policy_evaluation.hpp"
#include "bifrank/problems/testbeds.hpp"
#include "bifrank/solvers.hpp"
#include "bifrank_cli/commands.hpp"
#include "bifrank_cli/config.hpp"
#include "bifrank_cli/experiment.hpp"
#include "test_support.hpp"

namespace {

using namespace bifrank;
using namespace bifrank::problems;
namespace fs = std::filesystem;
namespace cli = bifrank::cli;
using testing::random_matrix;
using testing::random_vector;

const fs::path kConfigs = BIFRANK_CONFIG_DIR;
const fs::path kData = BIFRANK_TEST_DATA_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

// Shared testbed for the rate checks: dimension 10, l1 ball of radius 1,
// unit total variance per outer oracle, inner and Hessian noise 0.1.
constexpr int kDim = 10;
constexpr double kRadius = 1.0;
const double kUnitNoise = 1.0 / std::sqrt(static_cast<double>(kDim));
constexpr double kInnerNoise = 0.1;
constexpr double kHessianNoise = 0.1;
constexpr int kSeeds = 10;
constexpr std::uint64_t kRateHorizon = 10000;

/// Log-spaced evaluation points in [100, 10^4].
std::vector<std::uint64_t> fit_points() {
  std::vector<std::uint64_t> ts;
  for (double t = 100; t <= 10000.0; t *= 1.2) ts.push_back(static_cast<std::uint64_t>(t));
  return ts;
}

/// Least-squares slope of log(v) against log(t).
double loglog_slope(const std::vector<std::uint64_t>& ts, const std::vector<double>& vs) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double x = std::log(static_cast<double>(ts[i]));
    const double y = std::log(vs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

BilevelQuadratic rate_bilevel_testbed() {
  RngStream rng(1, StreamId::Problem);
  BilevelQuadraticSpec spec = random_bilevel_quadratic(kDim, kDim, 1.0, 1.0, 0.0, rng);
  spec.inner_noise = kInnerNoise;
  spec.outer_noise = kUnitNoise;
  spec.hessian_noise = kHessianNoise;
  return BilevelQuadratic(spec);
}

// 1. LMO equivalence.
Outcome lmo_equivalence() {
  constexpr int kGradients = 1000;
  constexpr double kNuclearTol = 1e-6;
  RngStream rng(1, StreamId::Data);
  int mismatches = 0, checked = 0;
  for (Eigen::Index n = 1; n <= 6; ++n) {
    std::vector<ConstraintSet> sets = {ConstraintSet::l1_ball(n, 0.5 + rng.uniform())};
    const Eigen::VectorXd lo = random_vector(n, rng);
    sets.push_back(ConstraintSet::box(lo, lo + (Eigen::VectorXd::Ones(n) + random_vector(n, rng).cwiseAbs())));
    if (n >= 2) sets.push_back(ConstraintSet::simplex(n));
    for (const ConstraintSet& set : sets) {
      for (int i = 0; i < kGradients; ++i) {
        const Point d = Point::from_vector(random_vector(n, rng));
        const double brute = testing::brute_force_lmo_value(set, d);
        const LmoResult r = lmo(set, d);
        if (r.inner_product != brute || dot(r.vertex, d) != brute) ++mismatches;
        ++checked;
      }
    }
  }
  double worst = 0.0;
  const ConstraintSet ball = ConstraintSet::nuclear_ball(10, 8, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::MatrixXd d = random_matrix(10, 8, rng);
    const double exact = -Eigen::JacobiSVD<Eigen::MatrixXd>(d).singularValues()(0);
    worst = std::max(worst, std::abs(lmo(ball, Point(d)).inner_product - exact) / std::abs(exact));
  }
  return {mismatches == 0 && worst <= kNuclearTol,
          std::to_string(mismatches) + "/" + std::to_string(checked) +
              " polytope mismatches; nuclear max rel err " + fmt("%.2e (tol 1e-6)", worst)};
}

// 2. Neumann estimator mean and bias decay.
Outcome neumann_bias() {
  constexpr int kDraws = 100000;
  constexpr double kSe = 3.0;
  constexpr double kRatioSlack = 0.05;
  struct Case {
    double mu, L;
    std::uint64_t k;
  };
  auto sample_mean = [](double mu, double L, std::uint64_t k, std::uint64_t seed, double& se) {
    const testing::ConstantHessianOracle oracle(mu, L, 0.0, 1.0, 1.0);
    CountedBilevel calls(oracle);
    RngStream hessian(seed, StreamId::Hessian);
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < kDraws; ++i) {
      const double r = neumann_inverse_apply(calls, testing::scalar(0), testing::scalar(0),
                                             testing::scalar(1), k, hessian)
                           .flat()(0);
      sum += r;
      sum_sq += r * r;
    }
    const double mean = sum / kDraws;
    se = std::sqrt((sum_sq / kDraws - mean * mean) / kDraws);
    return mean;
  };
  bool pass = true;
  std::string detail;
  std::uint64_t seed = 1;
  for (const Case c : {Case{1, 2, 2}, Case{1, 2, 5}, Case{0.5, 1, 4}}) {
    double se = 0.0;
    const double mean = sample_mean(c.mu, c.L, c.k, seed++, se);
    const double expected = (1.0 / c.mu) * (1.0 - std::pow(1.0 - c.mu / c.L, c.k));
    const double z = std::abs(mean - expected) / se;
    pass = pass && z <= kSe;
    detail += fmt("z=%.2f ", z);
  }
  // Bias 1/mu - E[estimate] against k = 1..6, fitted as a geometric sequence.
  for (const auto& [mu, L] : {std::pair{1.0, 2.0}, std::pair{0.5, 1.0}, std::pair{1.0, 4.0}}) {
    std::vector<std::uint64_t> ks;
    std::vector<double> bias;
    for (std::uint64_t k = 1; k <= 6; ++k) {
      double se = 0.0;
      ks.push_back(k);
      bias.push_back(1.0 / mu - sample_mean(mu, L, k, seed++, se));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const double x = static_cast<double>(ks[i]);
      const double y = std::log(std::max(bias[i], 1e-300));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = static_cast<double>(ks.size());
    const double ratio = std::exp((n * sxy - sx * sy) / (n * sxx - sx * sx));
    const double bound = (1.0 - mu / L) + kRatioSlack;
    pass = pass && ratio <= bound;
    detail += fmt("ratio(mu=%g,L=%g)=%.3f<=%.3f ", mu, L, ratio, bound);
  }
  return {pass, detail};
}

// 3. Inner tracking rate.
Outcome inner_tracking_rate() {
  constexpr double kTarget = -2.0 / 3.0;
  constexpr double kTol = 0.2;
  const BilevelQuadratic oracle = rate_bilevel_testbed();
  const ConstraintSet set = ConstraintSet::l1_ball(kDim, kRadius);
  const auto ts = fit_points();
  std::vector<double> mean_sq(ts.size(), 0.0);
  for (int s = 0; s < kSeeds; ++s) {
    SolverConfig c;
    c.horizon = kRateHorizon;
    c.seed = static_cast<std::uint64_t>(s);
    const RunResult r = run_sbfw(oracle, set, c);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double g = *r.records.at(ts[i] - 1).inner_gap;
      mean_sq[i] += g * g / kSeeds;
    }
  }
  const double slope = loglog_slope(ts, mean_sq);
  return {std::abs(slope - kTarget) <= kTol, fmt("slope %.3f (target -0.667 +- 0.2)", slope)};
}

// 4. SCFW convex rate.
Outcome scfw_convex_rate() {
  constexpr double kTarget = -0.5;
  constexpr double kTol = 0.15;
  RngStream rng(1, StreamId::Problem);
  CompositionalQuadraticSpec spec;
  spec.H = Eigen::MatrixXd::Identity(kDim, kDim);
  spec.b = Eigen::VectorXd::Zero(kDim);
  spec.y0 = random_vector(kDim, rng);
  spec.y0 *= 0.5 * kRadius / spec.y0.lpNorm<1>();  // interior minimizer x* = y0
  spec.offset_noise = kUnitNoise;
  spec.outer_noise = kUnitNoise;
  spec.x_norm_bound = kRadius;
  const CompositionalQuadratic oracle(spec);
  const ConstraintSet set = ConstraintSet::l1_ball(kDim, kRadius);
  const auto ts = fit_points();
  std::vector<double> subopt(ts.size(), 0.0);
  for (int s = 0; s < kSeeds; ++s) {
    SolverConfig c;
    c.algorithm = Algorithm::Scfw;
    c.horizon = kRateHorizon;
    c.seed = static_cast<std::uint64_t>(s);
    const RunResult r = run_scfw(oracle, set, c);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      subopt[i] += *r.records.at(ts[i] - 1).objective / kSeeds;  // Q* = 0
    }
  }
  const double slope = loglog_slope(ts, subopt);
  return {std::abs(slope - kTarget) <= kTol, fmt("slope %.3f (target -0.5 +- 0.15)", slope)};
}

// 5. SBFW convex rate.
Outcome sbfw_convex_rate() {
  constexpr double kTarget = -1.0 / 3.0;
  constexpr double kTol = 0.15;
  const BilevelQuadratic oracle = rate_bilevel_testbed();
  const ConstraintSet set = ConstraintSet::l1_ball(kDim, kRadius);
  const ExactBilevelModel& m = oracle.model();
  const Point x_star = projected_gradient_minimize(
      [&](const Point& x) { return m.hypergradient(x); }, set, set.canonical_vertex(),
      oracle.outer_smoothness(), 20000);
  const double q_star = m.objective(x_star);
  const auto ts = fit_points();
  std::vector<double> subopt(ts.size(), 0.0);
  for (int s = 0; s < kSeeds; ++s) {
    SolverConfig c;
    c.horizon = kRateHorizon;
    c.seed = static_cast<std::uint64_t>(s);
    const RunResult r = run_sbfw(oracle, set, c);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      subopt[i] += (*r.records.at(ts[i] - 1).objective - q_star) / kSeeds;
    }
  }
  const double slope = loglog_slope(ts, subopt);
  return {std::abs(slope - kTarget) <= kTol, fmt("slope %.3f (target -0.333 +- 0.15)", slope)};
}

// 6. Nonconvex FW gap decrease.
Outcome nonconvex_gap() {
  constexpr double kScfwRatio = 0.1;
  constexpr double kSbfwRatio = 0.2;
  constexpr std::uint64_t kWindow = 100;
  RngStream rng(3, StreamId::Problem);
  NonconvexToySpec spec;
  spec.A = random_matrix(kDim, kDim, rng);
  spec.map_noise = kUnitNoise;
  spec.outer_noise = kUnitNoise;
  spec.x_norm_bound = kRadius;
  const NonconvexCompositionalToy toy(spec);
  const CompositionalAsBilevel as_bilevel(toy);
  const ConstraintSet set = ConstraintSet::l1_ball(kDim, kRadius);
  double ratio[2] = {0.0, 0.0};
  for (int alg = 0; alg < 2; ++alg) {
    double early = 0.0, late = 0.0;
    for (int s = 0; s < kSeeds; ++s) {
      SolverConfig c;
      c.algorithm = alg == 0 ? Algorithm::Scfw : Algorithm::Sbfw;
      c.nonconvex = true;
      c.horizon = kRateHorizon;
      c.seed = static_cast<std::uint64_t>(s);
      const RunResult r = alg == 0 ? run_scfw(toy, set, c) : run_sbfw(as_bilevel, set, c);
      for (std::uint64_t i = 0; i < kWindow; ++i) {
        early += *r.records.at(i).fw_gap;
        late += *r.records.at(kRateHorizon - 1 - i).fw_gap;
      }
    }
    ratio[alg] = late / early;
  }
  return {ratio[0] <= kScfwRatio && ratio[1] <= kSbfwRatio,
          fmt("SCFW ratio %.4f (<= 0.1), SBFW ratio %.4f (<= 0.2)", ratio[0], ratio[1])};
}

cli::ExperimentConfig load(const std::string& name, const std::vector<std::string>& sets) {
  cli::ConfigMap map = cli::load_config_file(kConfigs / name);
  for (const std::string& s : sets) cli::apply_override(map, s);
  return cli::resolve(map);
}

double error_at(const RunResult& r, std::uint64_t iter) {
  for (const RunRecord& rec : r.records) {
    if (rec.iter == iter) return *rec.normalized_error;
  }
  throw Error("no record at iteration " + std::to_string(iter));
}

// 7. Matrix completion: SBFW against SFW.
Outcome matcomp_comparison() {
  constexpr int kMinWins = 8;
  constexpr double kPlateau = 0.05;
  constexpr std::uint64_t kLag = 500;
  int wins = 0;
  double sbfw_end = 0, sbfw_lag = 0, sfw_end = 0, sfw_lag = 0;
  std::uint64_t horizon = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const std::string seed = std::to_string(s);
    cli::ExperimentConfig config =
        load("matcomp_synth.cfg", {"problem.seed=" + seed, "solver.seed=" + seed});
    horizon = config.solver.horizon;
    const auto experiment = cli::Experiment::build(config);
    const RunResult b = experiment->run(config.solver);
    config.solver.algorithm = Algorithm::Sfw;
    const RunResult f = experiment->run(config.solver);
    const double eb = experiment->error(b.x), ef = experiment->error(f.x);
    if (eb < ef) ++wins;
    sbfw_end += eb / kSeeds;
    sfw_end += ef / kSeeds;
    sbfw_lag += error_at(b, horizon - kLag) / kSeeds;
    sfw_lag += error_at(f, horizon - kLag) / kSeeds;
  }
  const double sfw_gain = (sfw_lag - sfw_end) / sfw_lag;
  const double sbfw_gain = (sbfw_lag - sbfw_end) / sbfw_lag;
  const bool pass = wins >= kMinWins && sfw_gain < kPlateau && sbfw_gain > 0.0;
  std::ostringstream d;
  d << "SBFW wins " << wins << "/" << kSeeds
    << fmt("; mean final err SBFW %.4f SFW %.4f; last-500 gain SFW %.2f%% (< 5%%) SBFW %.2f%% (> 0)",
           sbfw_end, sfw_end, 100 * sfw_gain, 100 * sbfw_gain);
  return {pass, d.str()};
}

// 8. Noise sweep.
Outcome noise_sweep() {
  constexpr double kFrom = 0.3;
  const cli::ExperimentConfig config = load("matcomp_synth.cfg", {});
  std::vector<double> grid;
  for (int i = 1; i <= 9; ++i) grid.push_back(i / 10.0);
  const auto rows = cli::sweep_noise(config, grid);
  bool pass = true;
  std::string detail;
  for (const cli::SweepRow& r : rows) {
    const double db = std::abs(r.err_sbfw - r.err0_sbfw), df = std::abs(r.err_sfw - r.err0_sfw);
    if (r.noise >= kFrom - 1e-12 && db > df) pass = false;
    detail += fmt("%.1f:%.3f/%.3f ", r.noise, db, df);
  }
  return {pass, "|e-e0| SBFW/SFW per noise " + detail};
}

// 9. Policy evaluation: SCFW against SBFW, plus feasibility.
Outcome policy_evaluation() {
  constexpr int kMinWins = 8;
  constexpr double kFeasTol = 1e-9;
  const cli::ExperimentConfig config = load("policy_eval.cfg", {});
  const double alpha = *config.problem.alpha;
  const auto experiment = cli::Experiment::build(config);
  int wins = 0;
  double worst_l1 = 0.0;
  RunOptions extra;
  extra.on_iterate = [&](std::uint64_t, const Point& w) {
    worst_l1 = std::max(worst_l1, w.flat().lpNorm<1>());
  };
  double mean_c = 0, mean_b = 0;
  for (int s = 0; s < kSeeds; ++s) {
    SolverConfig c = config.solver;
    c.seed = static_cast<std::uint64_t>(s);
    c.algorithm = Algorithm::Scfw;
    const double ec = experiment->error(experiment->run(c, extra).last);
    c.algorithm = Algorithm::Sbfw;
    const double eb = experiment->error(experiment->run(c, extra).last);
    if (ec < eb) ++wins;
    mean_c += ec / kSeeds;
    mean_b += eb / kSeeds;
  }
  std::ostringstream d;
  d << "SCFW wins " << wins << "/" << kSeeds
    << fmt("; mean ||w-w*|| SCFW %.4f SBFW %.4f; max ||w||_1 - alpha = %.2e", mean_c, mean_b,
           worst_l1 - alpha);
  return {wins >= kMinWins && worst_l1 <= alpha + kFeasTol, d.str()};
}

// 10. LMO against projection wall clock.
Outcome lmo_speed() {
  constexpr double kMinRatio = 5.0;
  const auto rows = cli::bench_lmo({500}, 5, 0);
  const cli::BenchRow& r = rows.at(0);
  return {r.ratio >= kMinRatio,
          fmt("n=500 lmo %.0f us, projection %.0f us, ratio %.2f (>= 5)", r.lmo_us, r.proj_us,
              r.ratio)};
}

// 11. Finite-difference gradient suite.
Outcome finite_differences() {
  constexpr double kTol = 1e-5;
  double worst = 0.0;
  auto grad_check = [&](const std::function<double(const Point&)>& f, const Point& g,
                        const Point& x) {
    worst = std::max(worst, testing::rel_error(g, testing::fd_gradient(f, x)));
  };
  auto dir_check = [&](const std::function<Point(const Point&)>& F, const Point& jv,
                       const Point& x, const Point& v) {
    worst = std::max(worst, testing::rel_error(jv, testing::fd_directional(F, x, v)));
  };
  RngStream rng(11, StreamId::Problem);
  {
    const auto syn = matcomp_synthetic(5, 2, 0.4, 0.7, rng);
    const MatrixCompletionOracle oracle(syn.problem);
    const ExactBilevelModel& m = oracle.model();
    const Point x(random_matrix(5, 5, rng)), y(random_matrix(5, 5, rng)),
        v(random_matrix(5, 5, rng));
    grad_check([&](const Point& p) { return m.outer_value(p, y); }, m.grad_x_F(x, y), x);
    grad_check([&](const Point& p) { return m.outer_value(x, p); }, m.grad_y_F(x, y), y);
    grad_check([&](const Point& p) { return m.inner_value(x, p); }, m.grad_y_G(x, y), y);
    Point hv(v.shape());
    hv.flat() = m.hess_yy_G(x, y) * v.flat();
    dir_check([&](const Point& p) { return m.grad_y_G(x, p); }, hv, y, v);
    Point cross(x.shape());
    cross.flat() = m.hess_xy_G(x, y) * v.flat();
    grad_check([&](const Point& p) { return dot(m.grad_y_G(p, y), v); }, cross, x);
    grad_check([&](const Point& p) { return m.objective(p); },
               m.surrogate_gradient(x, m.inner_optimum(x)), x);
  }
  {
    PolicyEvalSetup setup;
    setup.S = 7;
    setup.m = 4;
    const PolicyEvalOracle oracle(random_policy_eval(setup, rng));
    const ExactCompositionalModel& m = oracle.model();
    const Point w = Point::from_vector(random_vector(4, rng));
    const Point u = Point::from_vector(random_vector(7, rng));
    grad_check([&](const Point& p) { return dot(m.h(p), u); }, m.vjp(w, u), w);
    grad_check([&](const Point& p) { return m.f(p); }, m.grad_f(u), u);
    grad_check([&](const Point& p) { return m.objective(p); }, m.gradient(w), w);
  }
  {
    auto spec = random_bilevel_quadratic(4, 6, 0.5, 2.0, 0.3, rng);
    spec.q = random_vector(4, rng);
    const BilevelQuadratic oracle(spec);
    const ExactBilevelModel& m = oracle.model();
    const Point x = Point::from_vector(random_vector(4, rng));
    const Point y = Point::from_vector(random_vector(6, rng));
    grad_check([&](const Point& p) { return m.outer_value(p, y); }, m.grad_x_F(x, y), x);
    grad_check([&](const Point& p) { return m.outer_value(x, p); }, m.grad_y_F(x, y), y);
    grad_check([&](const Point& p) { return m.objective(p); },
               m.surrogate_gradient(x, m.inner_optimum(x)), x);

    CompositionalQuadraticSpec qs;
    qs.H = random_matrix(5, 3, rng);
    qs.b = random_vector(5, rng);
    qs.y0 = random_vector(5, rng);
    const CompositionalQuadratic quad(qs);
    NonconvexToySpec ts;
    ts.A = random_matrix(4, 3, rng);
    const NonconvexCompositionalToy toy(ts);
    const Point z = Point::from_vector(random_vector(3, rng));
    grad_check([&](const Point& p) { return quad.model().objective(p); }, quad.model().gradient(z),
               z);
    grad_check([&](const Point& p) { return toy.model().objective(p); }, toy.model().gradient(z),
               z);
    const StochasticQuadratic sq(random_matrix(4, 3, rng), random_vector(4, rng),
                                 random_vector(3, rng), 0.1);
    grad_check([&](const Point& p) { return sq.objective(p); }, sq.exact_grad(z), z);
  }
  return {worst <= kTol, fmt("max rel err %.2e (tol 1e-5)", worst)};
}

std::string read_without_wall_clock(const fs::path& path) {
  std::ifstream in(path);
  std::string line, out;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    out += line.substr(0, a + 1) + line.substr(b) + "\n";
  }
  return out;
}

// 12. Determinism of the run command.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "bifrank_acceptance_determinism";
  fs::remove_all(root);
  struct Case {
    std::string config;
    std::vector<std::string> sets;
  };
  const std::string ratings = "data.path=" + (kData / "ratings_100k.data").string();
  const std::vector<Case> cases = {
      {"matcomp_synth.cfg", {"solver.seed=7", "solver.horizon=500"}},
      {"matcomp_synth.cfg", {"solver.algorithm=sfw", "solver.horizon=500"}},
      {"matcomp_synth.cfg", {"solver.algorithm=projected", "solver.horizon=200"}},
      {"matcomp_ratings.cfg", {ratings, "solver.horizon=100", "data.batch_outer=50",
                               "data.batch_inner=50"}},
      {"policy_eval.cfg", {"solver.seed=3"}},
      {"policy_eval.cfg", {"solver.algorithm=sbfw", "solver.regime=nonconvex"}},
  };
  int identical = 0;
  std::ostringstream log;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    std::string first;
    bool same = true;
    for (int rep = 0; rep < 2; ++rep) {
      std::vector<std::string> sets = cases[i].sets;
      const fs::path dir = root / (std::to_string(i) + "_" + std::to_string(rep));
      sets.push_back("output.dir=" + dir.string());
      cli::cmd_run(load(cases[i].config, sets), log);
      const std::string csv = read_without_wall_clock(dir / "metrics.csv");
      if (rep == 0) {
        first = csv;
      } else {
        same = csv == first && !csv.empty();
      }
    }
    if (same) ++identical;
  }
  fs::remove_all(root);
  return {identical == static_cast<int>(cases.size()),
          std::to_string(identical) + "/" + std::to_string(cases.size()) +
              " configs reproduce metrics.csv exactly"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  Outcome (*check)();
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "lmo-equivalence", 10, lmo_equivalence},
      {2, "neumann-bias", 30, neumann_bias},
      {3, "inner-tracking-rate", 60, inner_tracking_rate},
      {4, "scfw-convex-rate", 120, scfw_convex_rate},
      {5, "sbfw-convex-rate", 300, sbfw_convex_rate},
      {6, "nonconvex-fw-gap", 300, nonconvex_gap},
      {7, "matcomp-sbfw-vs-sfw", 240, matcomp_comparison},
      {8, "matcomp-noise-sweep", 900, noise_sweep},
      {9, "policy-eval-scfw-vs-sbfw", 180, policy_evaluation},
      {10, "lmo-vs-projection-speed", 60, lmo_speed},
      {11, "finite-differences", 30, finite_differences},
      {12, "determinism", 60, determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && selected.count(c.id) == 0) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs <= c.budget_s;
    const bool pass = o.pass && in_budget;
    if (!pass) ++failed;
    std::printf("%s %2d %-26s %s [%.1fs of %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_s, in_budget ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
