#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "bifrank_cli/config.hpp"

namespace bifrank::cli {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitAbort = 3;

/// Worker threads for independent runs: BIFRANK_THREADS when set, otherwise
/// the hardware concurrency, and never more than `tasks`.
unsigned thread_count(std::size_t tasks);

/// Calls fn(i) for i in [0, n) on up to thread_count(n) threads. The first
/// exception thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Runs one experiment and writes metrics.csv, run.json and run.cfg into
/// config.output.dir. Prints a one-line summary to `log`. Returns kExitOk or
/// kExitAbort.
int cmd_run(const ExperimentConfig& config, std::ostream& log);

/// Runs seeds solver.seed, ..., solver.seed + seeds - 1 concurrently, each
/// into output.dir/seed_<s>. Returns the largest per-run exit code.
int cmd_run_seeds(const ExperimentConfig& config, unsigned seeds, std::ostream& log);

struct BenchRow {
  int n = 0;
  double lmo_us = 0.0;
  double proj_us = 0.0;
  double ratio = 0.0;
};

/// Median per-call time of the nuclear LMO and the nuclear-ball projection
/// on one random n x n matrix per size. Throws UsageError for n < 16 or
/// trials < 1, NumericError if a projection leaves the ball.
std::vector<BenchRow> bench_lmo(const std::vector<int>& sizes, int trials, std::uint64_t seed);
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

struct SweepRow {
  double noise = 0.0;
  double err_sbfw = 0.0;
  double err_sfw = 0.0;
  double err0_sbfw = 0.0;
  double err0_sfw = 0.0;
};

/// Final normalized errors of SBFW and SFW per noise factor on the synthetic
/// matcomp problem, with the noise-free errors alongside. Throws ConfigError
/// for other problem kinds.
std::vector<SweepRow> sweep_noise(const ExperimentConfig& config, const std::vector<double>& grid);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Command-line entry point; returns the process exit code.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace bifrank::cli
