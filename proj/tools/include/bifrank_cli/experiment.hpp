#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "bifrank/problems/matrix_completion.hpp"
#include "bifrank/problems/policy_evaluation.hpp"
#include "bifrank/solvers.hpp"
#include "bifrank_cli/config.hpp"

namespace bifrank::cli {

/// A problem instance built from a config, ready to run any compatible solver.
class Experiment {
 public:
  virtual ~Experiment() = default;

  /// Builds the instance; problem randomness comes from the Problem stream
  /// seeded by problem.seed. Throws ConfigError or IngestError.
  static std::unique_ptr<Experiment> build(const ExperimentConfig& config);

  /// Runs `solver` (its algorithm decides the oracle). Throws ConfigError when
  /// the algorithm does not fit the problem.
  [[nodiscard]] virtual RunResult run(const SolverConfig& solver,
                                      const RunOptions& extra = {}) const = 0;
  /// Error of a point as reported in the normalized_error column.
  [[nodiscard]] virtual double error(const Point& x) const = 0;
  /// Extra files that belong next to the run outputs.
  virtual void write_artifacts(const std::filesystem::path& /*dir*/) const {}
};

class MatcompExperiment final : public Experiment {
 public:
  /// `truth` is the reference for the normalized error; without it the
  /// observed values are used.
  MatcompExperiment(problems::MatrixCompletionProblem problem,
                    std::optional<Eigen::MatrixXd> truth);

  [[nodiscard]] RunResult run(const SolverConfig& solver,
                              const RunOptions& extra = {}) const override;
  [[nodiscard]] double error(const Point& x) const override;
  [[nodiscard]] const problems::MatrixCompletionOracle& oracle() const { return bilevel_; }
  [[nodiscard]] const ConstraintSet& set() const { return set_; }
  /// Keeps the raw id mapping of a ratings file for write_artifacts.
  void attach_ratings(RatingsDataset dataset) { ratings_ = std::move(dataset); }
  void write_artifacts(const std::filesystem::path& dir) const override;

 private:
  problems::MatrixCompletionOracle bilevel_;
  problems::MatrixCompletionSingleLevel single_;
  std::optional<Eigen::MatrixXd> truth_;
  ConstraintSet set_;
  std::optional<RatingsDataset> ratings_;
};

class PolicyEvalExperiment final : public Experiment {
 public:
  PolicyEvalExperiment(problems::PolicyEvalProblem problem, std::uint64_t reference_budget);

  [[nodiscard]] RunResult run(const SolverConfig& solver,
                              const RunOptions& extra = {}) const override;
  /// ||w - w*||.
  [[nodiscard]] double error(const Point& x) const override;
  [[nodiscard]] const Point& w_star() const { return w_star_; }
  [[nodiscard]] const ConstraintSet& set() const { return set_; }

 private:
  problems::PolicyEvalOracle oracle_;
  CompositionalAsBilevel as_bilevel_;
  ConstraintSet set_;
  Point w_star_;
};

/// Synthetic matcomp instance for the given problem settings and noise factor.
/// The draws of W, the noise matrix and the mask do not depend on the noise
/// factor, so equal seeds share them across noise levels.
std::unique_ptr<MatcompExperiment> build_matcomp_synthetic(const ProblemConfig& p,
                                                           const DataConfig& d,
                                                           double noise_factor);

/// Metrics CSV with the fixed header; undefined metrics are empty fields.
void write_metrics_csv(std::ostream& out, const RunResult& result);
inline constexpr const char* kMetricsHeader =
    "iter,wall_clock_ms,objective,normalized_error,fw_gap,inner_gap,sfo_outer,sfo_inner,"
    "sfo_hessian,sfo_map";

/// Shortest round-trip representation of a double.
std::string format_double(double v);

}  // namespace bifrank::cli
