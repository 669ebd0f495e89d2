#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bifrank/constraint_set.hpp"
#include "bifrank/oracles.hpp"
#include "bifrank/point.hpp"
#include "bifrank/schedule.hpp"

namespace bifrank {

enum class Algorithm { Sbfw, Scfw, Sfw, ProjectedBilevel };

const char* to_string(Algorithm algorithm);

enum class OutputRule {
  Auto,            // last iterate for convex regimes, uniform for nonconvex
  LastIterate,     // x_{T+1}
  UniformIterate,  // x_i with i uniform on {1, ..., T}
};

const char* to_string(OutputRule rule);

/// Constant values that replace the scheduled ones when set.
struct ScheduleOverrides {
  std::optional<double> delta;
  std::optional<double> rho;
  std::optional<double> eta;
  std::optional<std::uint64_t> k;
  /// Replaces the inner step scale a0 in the bilevel schedules.
  std::optional<double> inner_step_scale;
};

struct SolverConfig {
  Algorithm algorithm = Algorithm::Sbfw;
  bool nonconvex = false;
  std::uint64_t horizon = 1000;
  ScheduleOverrides overrides;
  std::uint64_t seed = 0;
  std::uint64_t cadence = 1;  // record every `cadence` iterations (and always the last)
  OutputRule output = OutputRule::Auto;
  double projected_step = 0.1;  // alpha_0 of the projected baseline, alpha_t = alpha_0 / sqrt(t)
  /// Check every recorded iterate against the constraint set.
  bool check_feasibility = true;

  /// Throws ConfigError on horizon or cadence 0, or overrides outside (0, 1].
  void validate() const;
  [[nodiscard]] Regime regime() const;
};

/// One metrics row. Metrics a problem cannot compute stay empty.
struct RunRecord {
  std::uint64_t iter = 0;
  double wall_clock_ms = 0.0;
  std::optional<double> objective;         // Q(x_{t+1})
  std::optional<double> normalized_error;  // problem-supplied error of x_{t+1}
  std::optional<double> fw_gap;            // gap of x_{t+1} under the exact gradient
  std::optional<double> inner_gap;         // ||y_t - y*(x_t)||
  OracleCallCounter calls;
};

/// Optional problem-supplied metrics evaluated at recorded iterates.
struct MetricHooks {
  std::function<double(const Point&)> normalized_error;
  std::function<double(const Point&)> objective;  // overrides the exact model's objective
};

struct RunOptions {
  std::optional<Point> x1;  // defaults to the set's canonical vertex
  std::optional<Point> y1;  // defaults to zeros (bilevel); unused by SCFW
  MetricHooks hooks;
  /// Called after every iteration with t and x_{t+1}.
  std::function<void(std::uint64_t, const Point&)> on_iterate;
};

struct RunResult {
  Point x;                           // the output point
  std::uint64_t output_index = 0;    // index i of the returned x_i (T + 1 for the last iterate)
  Point last;                        // x_{T+1}, or the last good iterate after an abort
  std::vector<RunRecord> records;
  OracleCallCounter calls;
  bool aborted = false;
  std::string abort_reason;
};

RunResult run_sbfw(const BilevelOracle& oracle, const ConstraintSet& set, const SolverConfig& config,
                   const RunOptions& options = {});

RunResult run_scfw(const CompositionalOracle& oracle, const ConstraintSet& set,
                   const SolverConfig& config, const RunOptions& options = {});

/// Momentum-averaged stochastic Frank-Wolfe on a single-level objective:
/// d_t = (1 - rho_t) d_{t-1} + rho_t grad f(x_t; theta_t), rho_t = 4/(t+8)^{2/3},
/// eta_t = 2/(t+8).
RunResult run_sfw_baseline(const StochasticOracle& oracle, const ConstraintSet& set,
                           const SolverConfig& config, const RunOptions& options = {});

/// Same inner step and gradient tracker as SBFW, followed by
/// x_{t+1} = Proj(x_t - alpha_t d_t) in place of the Frank-Wolfe step.
RunResult run_projected_baseline(const BilevelOracle& oracle, const ConstraintSet& set,
                                 const SolverConfig& config, const RunOptions& options = {});

/// Step sizes for iteration t after applying the config's overrides.
[[nodiscard]] StepSizes effective_steps(const SolverConfig& config, const ScheduleSpec& spec,
                                        std::uint64_t t);

}  // namespace bifrank
