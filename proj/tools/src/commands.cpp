#include "bifrank_cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bifrank/constraint_set.hpp"
#include "bifrank/errors.hpp"
#include "bifrank/lmo.hpp"
#include "bifrank/projection.hpp"
#include "bifrank/rng.hpp"
#include "bifrank_cli/experiment.hpp"

namespace bifrank::cli {

unsigned thread_count(std::size_t tasks) {
  unsigned cap = std::max(1U, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BIFRANK_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) cap = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(cap, tasks)));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = thread_count(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json summary_json(const ExperimentConfig& config, const Experiment& experiment,
                            const RunResult& result, double wall_ms) {
  nlohmann::json j;
  j["config"] = to_json(config.source);
  j["algorithm"] = to_string(config.solver.algorithm);
  j["problem_kind"] = to_string(config.problem.kind);
  j["seed"] = config.solver.seed;
  j["problem_seed"] = config.problem.seed;
  j["output_index"] = result.output_index;
  nlohmann::json final_metrics = nlohmann::json::object();
  if (!result.records.empty()) {
    const RunRecord& r = result.records.back();
    final_metrics["iter"] = r.iter;
    final_metrics["objective"] = optional_json(r.objective);
    final_metrics["normalized_error"] = optional_json(r.normalized_error);
    final_metrics["fw_gap"] = optional_json(r.fw_gap);
    final_metrics["inner_gap"] = optional_json(r.inner_gap);
  }
  j["final"] = final_metrics;
  j["output_error"] = experiment.error(result.x);
  j["calls"] = {{"outer", result.calls.outer},
                {"inner", result.calls.inner},
                {"hessian", result.calls.hessian},
                {"map", result.calls.map}};
  j["aborted"] = result.aborted;
  j["abort_reason"] = result.abort_reason;
  j["wall_clock_ms"] = wall_ms;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

int run_with(const ExperimentConfig& config, const Experiment& experiment, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const RunResult result = experiment.run(config.solver);
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  const std::filesystem::path& dir = config.output.dir;
  std::filesystem::create_directories(dir);
  std::ostringstream csv;
  write_metrics_csv(csv, result);
  write_text(dir / "metrics.csv", csv.str());
  write_text(dir / "run.json", summary_json(config, experiment, result, wall_ms).dump(2) + "\n");
  write_text(dir / "run.cfg", to_ini(config.source));
  experiment.write_artifacts(dir);

  std::ostringstream line;
  line << "algorithm=" << to_string(config.solver.algorithm) << " seed=" << config.solver.seed
       << " iters=" << (result.records.empty() ? 0 : result.records.back().iter)
       << " output_index=" << result.output_index
       << " error=" << format_double(experiment.error(result.x))
       << " wall_ms=" << format_double(wall_ms) << " dir=" << dir.string();
  if (result.aborted) line << " aborted=\"" << result.abort_reason << '"';
  log << line.str() << '\n';
  return result.aborted ? kExitAbort : kExitOk;
}

ExperimentConfig with_seed(const ExperimentConfig& base, std::uint64_t seed) {
  ConfigMap map = base.source;
  map.set("solver.seed", std::to_string(seed));
  map.set("output.dir", (base.output.dir / ("seed_" + std::to_string(seed))).string());
  return resolve(map);
}

}  // namespace

int cmd_run(const ExperimentConfig& config, std::ostream& log) {
  const auto experiment = Experiment::build(config);
  return run_with(config, *experiment, log);
}

int cmd_run_seeds(const ExperimentConfig& config, unsigned seeds, std::ostream& log) {
  if (seeds < 1) throw ConfigError("--parallel-seeds must be >= 1");
  const auto experiment = Experiment::build(config);
  std::vector<int> codes(seeds, kExitOk);
  std::vector<std::string> lines(seeds);
  parallel_for(seeds, [&](std::size_t i) {
    std::ostringstream out;
    codes[i] = run_with(with_seed(config, config.solver.seed + i), *experiment, out);
    lines[i] = out.str();
  });
  for (const std::string& l : lines) log << l;
  return *std::max_element(codes.begin(), codes.end());
}

std::vector<BenchRow> bench_lmo(const std::vector<int>& sizes, int trials, std::uint64_t seed) {
  if (trials < 1) throw UsageError("bench-lmo: trials must be >= 1");
  using clock = std::chrono::steady_clock;
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  };
  std::vector<BenchRow> rows;
  for (int n : sizes) {
    if (n < 16) throw UsageError("bench-lmo: sizes must be >= 16");
    RngStream data(seed, StreamId::Data);
    RngStream lmo_rng(seed, StreamId::Lmo);
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) m(i, j) = data.normal();
    }
    const Point d(m);
    const ConstraintSet set = ConstraintSet::nuclear_ball(n, n, 1.0);
    std::vector<double> lmo_us;
    std::vector<double> proj_us;
    for (int t = 0; t < trials; ++t) {
      auto t0 = clock::now();
      const LmoResult s = lmo(set, d, &lmo_rng);
      lmo_us.push_back(std::chrono::duration<double, std::micro>(clock::now() - t0).count());
      if (!set.contains(s.vertex)) throw NumericError("bench-lmo: LMO vertex left the ball");
      t0 = clock::now();
      const Point p = project(set, d);
      proj_us.push_back(std::chrono::duration<double, std::micro>(clock::now() - t0).count());
      if (nuclear_norm(p.mat()) > 1.0 + 1e-6) {
        throw NumericError("bench-lmo: projection left the nuclear ball");
      }
    }
    BenchRow row;
    row.n = n;
    row.lmo_us = median(lmo_us);
    row.proj_us = median(proj_us);
    row.ratio = row.proj_us / row.lmo_us;
    rows.push_back(row);
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "n,lmo_us,proj_us,ratio\n";
  for (const BenchRow& r : rows) {
    out << r.n << ',' << format_double(r.lmo_us) << ',' << format_double(r.proj_us) << ','
        << format_double(r.ratio) << '\n';
  }
}

std::vector<SweepRow> sweep_noise(const ExperimentConfig& config, const std::vector<double>& grid) {
  if (config.problem.kind != ProblemKind::MatcompSynthetic) {
    throw ConfigError("sweep-noise needs problem.kind = matcomp_synthetic");
  }
  for (double noise : grid) {
    if (!(noise >= 0.0 && noise < 1.0)) throw ConfigError("noise grid values must lie in [0, 1)");
  }
  SolverConfig sbfw = config.solver;
  sbfw.algorithm = Algorithm::Sbfw;
  SolverConfig sfw = config.solver;
  sfw.algorithm = Algorithm::Sfw;

  // Slot 0 holds the noise-free runs; slot i + 1 the grid point i.
  std::vector<double> levels = {0.0};
  levels.insert(levels.end(), grid.begin(), grid.end());
  std::vector<std::pair<double, double>> errors(levels.size());
  parallel_for(levels.size() * 2, [&](std::size_t task) {
    const std::size_t slot = task / 2;
    if (slot > 0 && levels[slot] == 0.0) return;
    const auto experiment = build_matcomp_synthetic(config.problem, config.data, levels[slot]);
    const bool bilevel = task % 2 == 0;
    const RunResult r = experiment->run(bilevel ? sbfw : sfw);
    if (r.aborted) throw NumericError("sweep-noise: run aborted: " + r.abort_reason);
    (bilevel ? errors[slot].first : errors[slot].second) = experiment->error(r.x);
  });

  std::vector<SweepRow> rows;
  for (std::size_t i = 1; i < levels.size(); ++i) {
    const auto& e = levels[i] == 0.0 ? errors[0] : errors[i];
    rows.push_back({levels[i], e.first, e.second, errors[0].first, errors[0].second});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "noise,err_sbfw,err_sfw,err0_sbfw,err0_sfw\n";
  for (const SweepRow& r : rows) {
    out << format_double(r.noise) << ',' << format_double(r.err_sbfw) << ','
        << format_double(r.err_sfw) << ',' << format_double(r.err0_sbfw) << ','
        << format_double(r.err0_sfw) << '\n';
  }
}

namespace {

ExperimentConfig load(const std::string& path, const std::vector<std::string>& sets) {
  ConfigMap map = path.empty() ? ConfigMap() : load_config_file(path);
  for (const std::string& s : sets) apply_override(map, s);
  return resolve(map);
}

void emit_csv(const std::string& path, const std::string& text, std::ostream& out) {
  out << text;
  if (path.empty()) return;
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  write_text(p, text);
}

}  // namespace

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Projection-free stochastic bilevel and compositional optimization"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  unsigned seeds = 0;
  auto* run = app.add_subcommand("run", "run one experiment and write metrics.csv and run.json");
  run->add_option("-c,--config", config_path, "INI or JSON experiment config")->required();
  run->add_option("--set", sets, "override section.key=value (repeatable)");
  run->add_option("--parallel-seeds", seeds, "run this many consecutive seeds concurrently")
      ->check(CLI::PositiveNumber);

  std::vector<int> sizes = {16, 100, 250, 500};
  int trials = 5;
  std::uint64_t bench_seed = 0;
  std::string bench_out = "bench.csv";
  auto* bench = app.add_subcommand("bench-lmo", "time the nuclear LMO against projection");
  bench->add_option("--sizes", sizes, "matrix sizes, each >= 16")->delimiter(',');
  bench->add_option("--trials", trials, "timed calls per size");
  bench->add_option("--seed", bench_seed, "seed of the random matrices");
  bench->add_option("-o,--out", bench_out, "CSV path (empty: stdout only)");

  std::vector<double> grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep-noise", "final SBFW and SFW errors per noise factor");
  sweep->add_option("-c,--config", config_path, "synthetic matcomp config")->required();
  sweep->add_option("--set", sets, "override section.key=value (repeatable)");
  sweep->add_option("--grid", grid, "noise factors in [0, 1)")->delimiter(',');
  sweep->add_option("-o,--out", sweep_out, "CSV path (default: <output.dir>/sweep.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) {
      const ExperimentConfig config = load(config_path, sets);
      return seeds > 0 ? cmd_run_seeds(config, seeds, out) : cmd_run(config, out);
    }
    if (*bench) {
      std::ostringstream csv;
      write_bench_csv(csv, bench_lmo(sizes, trials, bench_seed));
      emit_csv(bench_out, csv.str(), out);
      return kExitOk;
    }
    if (*sweep) {
      const ExperimentConfig config = load(config_path, sets);
      std::ostringstream csv;
      write_sweep_csv(csv, sweep_noise(config, grid));
      emit_csv(sweep_out.empty() ? (config.output.dir / "sweep.csv").string() : sweep_out,
               csv.str(), out);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitAbort;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace bifrank::cli
