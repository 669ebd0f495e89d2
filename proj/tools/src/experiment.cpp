#include "bifrank_cli/experiment.hpp"

#include <charconv>
#include <ostream>

#include "bifrank/errors.hpp"
#include "bifrank/ingest.hpp"
#include "bifrank/rng.hpp"

namespace bifrank::cli {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

void apply_matcomp_settings(problems::MatrixCompletionProblem& mp, const ProblemConfig& p,
                            const DataConfig& d) {
  mp.lambda1 = p.lambda1;
  mp.lambda2 = p.lambda2;
  mp.epsilon_l1 = p.epsilon_l1;
  mp.smooth_l1 = p.smooth_l1;
  mp.sigma_g_sq = p.sigma_g_sq;
  mp.batch_outer = d.batch_outer;
  mp.batch_inner = d.batch_inner;
  if (p.alpha) mp.alpha = *p.alpha;
}

RunOptions with_hooks(const RunOptions& extra, const Experiment& experiment) {
  RunOptions o = extra;
  if (!o.hooks.normalized_error) {
    o.hooks.normalized_error = [&experiment](const Point& x) { return experiment.error(x); };
  }
  return o;
}

}  // namespace

std::unique_ptr<MatcompExperiment> build_matcomp_synthetic(const ProblemConfig& p,
                                                           const DataConfig& d,
                                                           double noise_factor) {
  RngStream rng(p.seed, StreamId::Problem);
  auto synth = problems::matcomp_synthetic(p.n, p.rank, noise_factor, p.observe_prob, rng);
  apply_matcomp_settings(synth.problem, p, d);
  return std::make_unique<MatcompExperiment>(std::move(synth.problem), std::move(synth.truth));
}

std::unique_ptr<Experiment> Experiment::build(const ExperimentConfig& config) {
  const ProblemConfig& p = config.problem;
  switch (p.kind) {
    case ProblemKind::MatcompSynthetic:
      return build_matcomp_synthetic(p, config.data, p.noise_factor);
    case ProblemKind::MatcompRatings: {
      const RatingsDataset data = parse_movielens(config.data.path, config.data.format);
      auto mp = problems::matcomp_from_ratings(data, p.alpha);
      apply_matcomp_settings(mp, p, config.data);
      auto experiment = std::make_unique<MatcompExperiment>(std::move(mp), std::nullopt);
      experiment->attach_ratings(data);
      return experiment;
    }
    case ProblemKind::PolicyEval: {
      problems::PolicyEvalSetup setup;
      setup.S = p.states;
      setup.A = p.actions;
      setup.m = p.features;
      setup.favored_prob = p.favored_prob;
      setup.gamma = p.gamma;
      setup.alpha = p.alpha.value_or(0.1);
      RngStream rng(p.seed, StreamId::Problem);
      auto problem = problems::random_policy_eval(setup, rng);
      problem.deterministic_mode = p.deterministic;
      return std::make_unique<PolicyEvalExperiment>(std::move(problem), p.reference_budget);
    }
  }
  throw ConfigError("unknown problem kind");
}

MatcompExperiment::MatcompExperiment(problems::MatrixCompletionProblem problem,
                                     std::optional<Eigen::MatrixXd> truth)
    : bilevel_(problem),
      single_(problem),
      truth_(std::move(truth)),
      set_(ConstraintSet::nuclear_ball(problem.rows, problem.cols, problem.alpha)) {}

double MatcompExperiment::error(const Point& x) const {
  const auto& omega = bilevel_.problem().omega;
  return truth_ ? problems::normalized_error(x.mat(), *truth_, omega)
                : problems::normalized_error(x.mat(), omega);
}

void MatcompExperiment::write_artifacts(const std::filesystem::path& dir) const {
  if (ratings_) write_id_map(*ratings_, dir / "id_map.csv");
}

RunResult MatcompExperiment::run(const SolverConfig& solver, const RunOptions& extra) const {
  RunOptions o = with_hooks(extra, *this);
  if (!o.x1) o.x1 = bilevel_.initial_outer();
  switch (solver.algorithm) {
    case Algorithm::Sbfw:
      if (!o.y1) o.y1 = bilevel_.initial_inner();
      return run_sbfw(bilevel_, set_, solver, o);
    case Algorithm::ProjectedBilevel:
      if (!o.y1) o.y1 = bilevel_.initial_inner();
      return run_projected_baseline(bilevel_, set_, solver, o);
    case Algorithm::Sfw:
      return run_sfw_baseline(single_, set_, solver, o);
    case Algorithm::Scfw:
      break;
  }
  throw ConfigError("scfw needs a compositional problem (policy_eval)");
}

PolicyEvalExperiment::PolicyEvalExperiment(problems::PolicyEvalProblem problem,
                                           std::uint64_t reference_budget)
    : oracle_(problem),
      as_bilevel_(oracle_),
      set_(ConstraintSet::l1_ball(problem.features(), problem.alpha)),
      w_star_(problems::reference_w_star(problem, reference_budget)) {}

double PolicyEvalExperiment::error(const Point& x) const {
  Point diff = x;
  diff.flat() -= w_star_.flat();
  return diff.norm();
}

RunResult PolicyEvalExperiment::run(const SolverConfig& solver, const RunOptions& extra) const {
  const RunOptions o = with_hooks(extra, *this);
  switch (solver.algorithm) {
    case Algorithm::Scfw:
      return run_scfw(oracle_, set_, solver, o);
    case Algorithm::Sbfw:
      return run_sbfw(as_bilevel_, set_, solver, o);
    case Algorithm::ProjectedBilevel:
      return run_projected_baseline(as_bilevel_, set_, solver, o);
    case Algorithm::Sfw:
      break;
  }
  throw ConfigError("sfw needs a single-level problem (matcomp)");
}

void write_metrics_csv(std::ostream& out, const RunResult& result) {
  out << kMetricsHeader << '\n';
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const RunRecord& r : result.records) {
    out << r.iter << ',' << format_double(r.wall_clock_ms) << ',' << opt(r.objective) << ','
        << opt(r.normalized_error) << ',' << opt(r.fw_gap) << ',' << opt(r.inner_gap) << ','
        << r.calls.outer << ',' << r.calls.inner << ',' << r.calls.hessian << ',' << r.calls.map
        << '\n';
  }
}

}  // namespace bifrank::cli
