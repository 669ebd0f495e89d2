#include "bifrank/solvers.hpp"

#include <chrono>
#include <cmath>
#include <string>
#include <utility>

#include "bifrank/errors.hpp"
#include "bifrank/hypergradient.hpp"
#include "bifrank/lmo.hpp"
#include "bifrank/projection.hpp"
#include "bifrank/trackers.hpp"

namespace bifrank {

const char* to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Sbfw:
      return "sbfw";
    case Algorithm::Scfw:
      return "scfw";
    case Algorithm::Sfw:
      return "sfw";
    case Algorithm::ProjectedBilevel:
      return "projected";
  }
  return "unknown";
}

const char* to_string(OutputRule rule) {
  switch (rule) {
    case OutputRule::Auto:
      return "auto";
    case OutputRule::LastIterate:
      return "last";
    case OutputRule::UniformIterate:
      return "uniform";
  }
  return "unknown";
}

namespace {

void require_unit_interval(const std::optional<double>& v, const char* name) {
  if (v && !(*v > 0.0 && *v <= 1.0)) {
    throw ConfigError(std::string("solver override ") + name + " must lie in (0, 1], got " +
                      std::to_string(*v));
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (horizon < 1) throw ConfigError("solver horizon must be >= 1");
  if (cadence < 1) throw ConfigError("solver cadence must be >= 1");
  require_unit_interval(overrides.delta, "delta");
  require_unit_interval(overrides.rho, "rho");
  require_unit_interval(overrides.eta, "eta");
  if (overrides.k && *overrides.k < 1) throw ConfigError("solver override k must be >= 1");
  if (overrides.inner_step_scale && !(*overrides.inner_step_scale > 0.0)) {
    throw ConfigError("solver override inner_step_scale must be positive");
  }
  if (!(projected_step > 0.0) || !std::isfinite(projected_step)) {
    throw ConfigError("projected step must be positive");
  }
}

Regime SolverConfig::regime() const {
  if (algorithm == Algorithm::Scfw) return nonconvex ? Regime::ScfwNonconvex : Regime::ScfwConvex;
  return nonconvex ? Regime::SbfwNonconvex : Regime::SbfwConvex;
}

StepSizes effective_steps(const SolverConfig& config, const ScheduleSpec& spec, std::uint64_t t) {
  StepSizes s = schedule(spec, t);
  const bool bilevel = spec.regime == Regime::SbfwConvex || spec.regime == Regime::SbfwNonconvex;
  if (bilevel && config.overrides.inner_step_scale) {
    const double a0 = *config.overrides.inner_step_scale;
    const double p = spec.regime == Regime::SbfwConvex ? 2.0 / 3.0 : 0.5;
    s.delta = std::min(1.0, a0 / std::pow(static_cast<double>(t), p));
  }
  if (config.overrides.delta) s.delta = *config.overrides.delta;
  if (config.overrides.rho) s.rho = *config.overrides.rho;
  if (config.overrides.eta) s.eta = *config.overrides.eta;
  if (config.overrides.k && bilevel) s.k = *config.overrides.k;
  return s;
}

namespace {

// Wall clock of the algorithm itself; metric evaluation runs with it paused.
class RunClock {
 public:
  void pause() { elapsed_ += std::chrono::steady_clock::now() - mark_; }
  void resume() { mark_ = std::chrono::steady_clock::now(); }
  [[nodiscard]] double ms() const {
    return std::chrono::duration<double, std::milli>(elapsed_).count();
  }

 private:
  std::chrono::steady_clock::time_point mark_ = std::chrono::steady_clock::now();
  std::chrono::steady_clock::duration elapsed_{0};
};

// Picks the returned iterate. For the uniform rule the index is drawn from
// the data stream up front, so only the chosen iterate is kept.
class OutputPicker {
 public:
  OutputPicker(const SolverConfig& config, bool nonconvex) {
    const bool uniform = config.output == OutputRule::UniformIterate ||
                         (config.output == OutputRule::Auto && nonconvex);
    if (uniform) {
      RngStream data(config.seed, StreamId::Data);
      index_ = 1 + data.uniform_index(static_cast<std::size_t>(config.horizon));
    } else {
      index_ = config.horizon + 1;
    }
  }

  void offer(std::uint64_t t, const Point& x) {
    if (t == index_) kept_ = x;
  }

  void finish(RunResult& result, const Point& last) const {
    result.last = last;
    if (kept_) {
      result.x = *kept_;
      result.output_index = index_;
      return;
    }
    // After an abort before the chosen index, fall back to the last good iterate.
    result.x = last;
    result.output_index = result.aborted ? 0 : index_;
  }

 private:
  std::uint64_t index_ = 0;
  std::optional<Point> kept_;
};

bool due(const SolverConfig& config, std::uint64_t t) {
  return t % config.cadence == 0 || t == config.horizon;
}

Point initial_point(const ConstraintSet& set, const RunOptions& options) {
  Point x = options.x1 ? *options.x1 : set.canonical_vertex();
  if (!(x.shape() == set.shape())) throw UsageError("initial point shape does not match the set");
  if (!set.contains(x)) throw UsageError("initial point is not feasible");
  return x;
}

struct MetricSources {
  std::function<double(const Point&)> objective;
  std::function<Point(const Point&)> gradient;
};

RunRecord make_record(std::uint64_t t, const RunClock& clock, const OracleCallCounter& calls,
                      const ConstraintSet& set, const Point& x_next, const MetricSources& src,
                      const MetricHooks& hooks, std::optional<double> inner_gap,
                      bool check_feasibility) {
  if (check_feasibility && !set.contains(x_next)) {
    throw NumericError("iterate " + std::to_string(t + 1) + " left the feasible set (violation " +
                       std::to_string(set.violation(x_next)) + ")");
  }
  RunRecord r;
  r.iter = t;
  r.wall_clock_ms = clock.ms();
  r.calls = calls;
  r.inner_gap = inner_gap;
  if (hooks.objective) {
    r.objective = hooks.objective(x_next);
  } else if (src.objective) {
    r.objective = src.objective(x_next);
  }
  if (hooks.normalized_error) r.normalized_error = hooks.normalized_error(x_next);
  if (src.gradient) r.fw_gap = fw_gap(set, x_next, src.gradient(x_next));
  return r;
}

void require_outer_shape(const ConstraintSet& set, Shape shape) {
  if (!(set.shape() == shape)) throw UsageError("constraint set shape does not match the problem");
}

MetricSources bilevel_sources(const BilevelOracle& oracle) {
  MetricSources src;
  if (const ExactBilevelModel* m = oracle.exact()) {
    src.objective = [m](const Point& x) { return m->objective(x); };
    src.gradient = [m](const Point& x) { return m->hypergradient(x); };
  }
  return src;
}

// Shared body of SBFW and the projected baseline; `step` maps
// (t, x_t, d_t, eta_t) to x_{t+1}.
template <typename Step>
RunResult run_bilevel_loop(const BilevelOracle& oracle, const ConstraintSet& set,
                           const SolverConfig& config, const RunOptions& options, Step step) {
  config.validate();
  require_outer_shape(set, oracle.outer_shape());
  const ScheduleSpec spec{config.regime(), oracle.mu_g(), oracle.L_g(), oracle.sigma_g_sq(),
                          config.horizon};
  spec.validate();

  SampleStreams streams(config.seed);
  RngStream lmo_rng(config.seed, StreamId::Lmo);
  CountedBilevel calls(oracle);
  const ExactBilevelModel* exact = oracle.exact();
  const MetricSources src = bilevel_sources(oracle);

  Point x = initial_point(set, options);
  TrackerState st;
  st.y = options.y1 ? *options.y1 : Point(oracle.inner_shape());
  if (!(st.y.shape() == oracle.inner_shape())) throw UsageError("y1 shape does not match problem");

  OutputPicker picker(config, config.nonconvex);
  RunResult result;
  RunClock clock;
  try {
    for (std::uint64_t t = 1; t <= config.horizon; ++t) {
      picker.offer(t, x);
      const StepSizes steps = effective_steps(config, spec, t);
      if (t == 1) {
        st.d = hypergradient_sample(calls, x, st.y, steps.k, streams.theta, streams.hessian);
      } else {
        const Point y_prev = st.y;
        inner_sgd_step(calls, st, st.prev_x, steps.delta, streams.xi);
        bilevel_track(calls, st, x, st.prev_x, st.y, y_prev, steps.rho, steps.k, streams.theta,
                      streams.hessian);
      }
      Point next = step(t, x, st.d, steps.eta, lmo_rng);
      require_finite(next, "outer iterate");
      st.prev_x = std::move(x);
      st.prev_y = st.y;
      x = std::move(next);

      if (due(config, t)) {
        clock.pause();
        std::optional<double> inner_gap;
        if (exact != nullptr) {
          Point diff = st.y;
          diff.flat() -= exact->inner_optimum(st.prev_x).flat();
          inner_gap = diff.norm();
        }
        result.records.push_back(make_record(t, clock, calls.counter(), set, x, src, options.hooks,
                                             inner_gap, config.check_feasibility));
        clock.resume();
      }
      if (options.on_iterate) options.on_iterate(t, x);
    }
  } catch (const NumericError& e) {
    result.aborted = true;
    result.abort_reason = e.what();
    if (!set.contains(x)) x = st.prev_x.size() > 0 ? st.prev_x : x;
  }
  result.calls = calls.counter();
  picker.finish(result, x);
  return result;
}

}  // namespace

RunResult run_sbfw(const BilevelOracle& oracle, const ConstraintSet& set, const SolverConfig& config,
                   const RunOptions& options) {
  if (config.algorithm != Algorithm::Sbfw) throw ConfigError("run_sbfw: algorithm must be sbfw");
  return run_bilevel_loop(oracle, set, config, options,
                          [&set](std::uint64_t, const Point& x, const Point& d, double eta,
                                 RngStream& lmo_rng) {
                            return convex_step(x, lmo(set, d, &lmo_rng).vertex, eta);
                          });
}

RunResult run_projected_baseline(const BilevelOracle& oracle, const ConstraintSet& set,
                                 const SolverConfig& config, const RunOptions& options) {
  if (config.algorithm != Algorithm::ProjectedBilevel) {
    throw ConfigError("run_projected_baseline: algorithm must be projected");
  }
  const double alpha0 = config.projected_step;
  return run_bilevel_loop(oracle, set, config, options,
                          [&set, alpha0](std::uint64_t t, const Point& x, const Point& d, double,
                                         RngStream&) {
                            Point moved = x;
                            moved.flat() -= (alpha0 / std::sqrt(static_cast<double>(t))) * d.flat();
                            return project(set, moved);
                          });
}

RunResult run_scfw(const CompositionalOracle& oracle, const ConstraintSet& set,
                   const SolverConfig& config, const RunOptions& options) {
  if (config.algorithm != Algorithm::Scfw) throw ConfigError("run_scfw: algorithm must be scfw");
  config.validate();
  require_outer_shape(set, oracle.outer_shape());
  // The compositional schedules do not depend on the inner constants.
  const ScheduleSpec spec{config.regime(), 1.0, 1.0, 0.0, config.horizon};

  SampleStreams streams(config.seed);
  RngStream lmo_rng(config.seed, StreamId::Lmo);
  CountedCompositional calls(oracle);
  const ExactCompositionalModel* exact = oracle.exact();
  MetricSources src;
  if (exact != nullptr) {
    src.objective = [exact](const Point& x) { return exact->objective(x); };
    src.gradient = [exact](const Point& x) { return exact->gradient(x); };
  }

  Point x = initial_point(set, options);
  TrackerState st;
  OutputPicker picker(config, config.nonconvex);
  RunResult result;
  RunClock clock;
  try {
    for (std::uint64_t t = 1; t <= config.horizon; ++t) {
      picker.offer(t, x);
      const StepSizes steps = effective_steps(config, spec, t);
      // The map update and the gradient update of one iteration share xi_t.
      const RngStream xi_start = streams.xi;
      if (t == 1) {
        st.y = calls.sample_h(x, streams.xi);
        streams.xi = xi_start;
        st.d = compositional_gradient_sample(calls, x, st.y, streams.theta, streams.xi);
      } else {
        const Point y_prev = st.y;
        compositional_track_y(calls, st, x, st.prev_x, steps.delta, streams.xi);
        streams.xi = xi_start;
        compositional_track_d(calls, st, x, st.prev_x, st.y, y_prev, steps.rho, streams.theta,
                              streams.xi);
      }
      Point next = convex_step(x, lmo(set, st.d, &lmo_rng).vertex, steps.eta);
      require_finite(next, "outer iterate");
      st.prev_x = std::move(x);
      st.prev_y = st.y;
      x = std::move(next);

      if (due(config, t)) {
        clock.pause();
        std::optional<double> inner_gap;
        if (exact != nullptr) {
          Point diff = st.y;
          diff.flat() -= exact->h(st.prev_x).flat();
          inner_gap = diff.norm();
        }
        result.records.push_back(make_record(t, clock, calls.counter(), set, x, src, options.hooks,
                                             inner_gap, config.check_feasibility));
        clock.resume();
      }
      if (options.on_iterate) options.on_iterate(t, x);
    }
  } catch (const NumericError& e) {
    result.aborted = true;
    result.abort_reason = e.what();
    if (!set.contains(x)) x = st.prev_x.size() > 0 ? st.prev_x : x;
  }
  result.calls = calls.counter();
  picker.finish(result, x);
  return result;
}

RunResult run_sfw_baseline(const StochasticOracle& oracle, const ConstraintSet& set,
                           const SolverConfig& config, const RunOptions& options) {
  if (config.algorithm != Algorithm::Sfw) throw ConfigError("run_sfw_baseline: algorithm must be sfw");
  config.validate();
  require_outer_shape(set, oracle.shape());

  RngStream theta(config.seed, StreamId::Theta);
  RngStream lmo_rng(config.seed, StreamId::Lmo);
  MetricSources src;
  if (oracle.has_exact()) {
    src.objective = [&oracle](const Point& x) { return oracle.objective(x); };
    src.gradient = [&oracle](const Point& x) { return oracle.exact_grad(x); };
  }
  OracleCallCounter calls;

  Point x = initial_point(set, options);
  Point prev = x;
  Point d(set.shape());
  OutputPicker picker(config, config.nonconvex);
  RunResult result;
  RunClock clock;
  try {
    for (std::uint64_t t = 1; t <= config.horizon; ++t) {
      picker.offer(t, x);
      const double td = static_cast<double>(t);
      const double rho = config.overrides.rho.value_or(std::min(1.0, 4.0 / std::pow(td + 8.0, 2.0 / 3.0)));
      const double eta = config.overrides.eta.value_or(2.0 / (td + 8.0));
      const Point g = oracle.grad(x, theta);
      ++calls.outer;
      require_same_shape(g, d, "run_sfw_baseline");
      d.flat() = (1.0 - rho) * d.flat() + rho * g.flat();
      Point next = convex_step(x, lmo(set, d, &lmo_rng).vertex, eta);
      require_finite(next, "outer iterate");
      prev = std::move(x);
      x = std::move(next);
      if (due(config, t)) {
        clock.pause();
        result.records.push_back(make_record(t, clock, calls, set, x, src, options.hooks,
                                             std::nullopt, config.check_feasibility));
        clock.resume();
      }
      if (options.on_iterate) options.on_iterate(t, x);
    }
  } catch (const NumericError& e) {
    result.aborted = true;
    result.abort_reason = e.what();
    if (!set.contains(x)) x = prev;
  }
  result.calls = calls;
  picker.finish(result, x);
  return result;
}

}  // namespace bifrank
