// Command-line front end: configure runs and verification experiments, emit
// CSV traces/reports. Exit codes: 0 success (all assertions pass), 1 failed
// assertion, 2 configuration error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zoss/analysis.hpp"
#include "zoss/config.hpp"
#include "zoss/optimizer.hpp"
#include "zoss/parallel.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::int64_t> seed_override;
  int jobs = zoss::default_jobs();
  bool force = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_config = true) {
  auto* config = cmd->add_option("--config", opts.config_path, "configuration file path");
  if (needs_config) config->required();
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed_override, "override the configured seed");
  cmd->add_option("--jobs", opts.jobs, "parallel jobs (default: hardware concurrency)");
  cmd->add_flag("--force", opts.force, "allow overwriting existing output files");
}

zoss::LoadedConfig load(const CommonOptions& opts) {
  zoss::LoadedConfig cfg = zoss::load_config(opts.config_path);
  if (opts.seed_override) cfg.run.seed = static_cast<std::uint64_t>(*opts.seed_override);
  return cfg;
}

void write_output(const CommonOptions& opts, const std::string& filename,
                  const std::string& content) {
  fs::create_directories(opts.out_dir);
  const fs::path path = fs::path(opts.out_dir) / filename;
  if (fs::exists(path) && !opts.force)
    throw zoss::ConfigError("refusing to overwrite " + path.string() + " (use --force)");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw zoss::ConfigError("cannot write " + path.string());
  out << content;
}


int cmd_catalog() {
  for (const auto& entry : zoss::builtin_catalog()) {
    std::printf("%-11s d=%-3d %-8s sigma=%.3g L=%.4g G=%.4g  %s\n", entry.problem.name.c_str(),
                entry.problem.dim, entry.constraint.kind_name(), entry.problem.noise.sigma,
                entry.problem.lipschitz_L, entry.problem.subgrad_bound_G,
                entry.description.c_str());
  }
  return 0;
}

int cmd_validate_schedule(const CommonOptions& opts) {
  const zoss::LoadedConfig cfg = load(opts);
  const zoss::ScheduleReport report = zoss::validate(cfg.run.schedule, 1000000);
  std::printf("schedule alpha(n) = %g/(n+1+%ld)^%g, beta(n) = %g/(n+1+%ld)^%g\n",
              cfg.run.schedule.a, cfg.run.schedule.offset, cfg.run.schedule.p, cfg.run.schedule.b,
              cfg.run.schedule.offset, cfg.run.schedule.q);
  std::printf("monotone_ok    = %s\n", report.monotone_ok ? "true" : "false");
  std::printf("ratio_tail     = %.17g\n", report.ratio_tail);
  std::printf("sq_partial_sum = %.17g\n", report.sq_partial_sum);
  std::printf("sum_alpha      = %.17g\n", report.sum_alpha);
  std::printf("sum_beta       = %.17g\n", report.sum_beta);
  if (!report.monotone_ok) throw zoss::ConfigError("schedule is not strictly decreasing");
  std::printf("[PASS] schedule satisfies the step-size conditions\n");
  return 0;
}

int cmd_run(const CommonOptions& opts) {
  const zoss::LoadedConfig cfg = load(opts);
  const zoss::IterateTrace trace = zoss::run(cfg.run);
  write_output(opts, "trace.csv", zoss::trace_to_csv(trace));
  write_output(opts, "trace.meta", zoss::trace_metadata(trace));
  std::printf("run: %s d=%d N=%ld seed=%llu -> %zu records, final gap %.6g, final f %.6g\n",
              trace.problem_name.c_str(), trace.dim, trace.config.iterations,
              static_cast<unsigned long long>(trace.config.seed), trace.records.size(),
              trace.records.back().gap, trace.records.back().f_clean);
  return 0;
}

int cmd_bias(const CommonOptions& opts) {
  const zoss::LoadedConfig cfg = load(opts);
  const zoss::ProblemCatalogEntry entry =
      zoss::make_catalog_entry(cfg.run.problem_name, cfg.run.dim, cfg.run.noise_sigma);
  const auto points = zoss::sample_probe_points(entry, cfg.experiment.points, cfg.run.seed);
  const zoss::BiasReport report = zoss::bias_experiment(
      entry.problem, points, cfg.experiment.lambdas, cfg.experiment.reps, cfg.run.seed, opts.jobs);
  write_output(opts, "bias.csv", report.to_csv());
  std::fputs(report.summary().c_str(), stdout);
  return report.passed() ? 0 : 1;
}

int cmd_moment(const CommonOptions& opts) {
  const zoss::LoadedConfig cfg = load(opts);
  const zoss::ProblemCatalogEntry entry =
      zoss::make_catalog_entry(cfg.run.problem_name, cfg.run.dim, cfg.run.noise_sigma);
  const auto points = zoss::sample_probe_points(entry, cfg.experiment.points, cfg.run.seed);
  const zoss::MomentReport report =
      zoss::moment_experiment(entry.problem, points, cfg.experiment.lambdas, cfg.experiment.reps,
                              cfg.experiment.sigma, cfg.run.seed, opts.jobs);
  write_output(opts, "moment.csv", report.to_csv());
  std::fputs(report.summary().c_str(), stdout);
  return report.passed() ? 0 : 1;
}

int cmd_converge(const CommonOptions& opts) {
  const zoss::LoadedConfig cfg = load(opts);
  const auto seeds = zoss::seed_range(cfg.run.seed, cfg.experiment.seeds);
  const zoss::ConvergenceReport report =
      zoss::convergence_experiment(cfg.run, seeds, cfg.experiment.eps_gap, opts.jobs);
  write_output(opts, "converge.csv", report.to_csv());
  std::fputs(report.summary().c_str(), stdout);
  return report.passed() ? 0 : 1;
}

int cmd_sweep(const CommonOptions& opts) {
  const zoss::LoadedConfig cfg = load(opts);
  const auto seeds = zoss::seed_range(cfg.run.seed, cfg.experiment.seeds);
  const zoss::LambdaSweepReport report =
      zoss::lambda_sweep(cfg.run, cfg.experiment.lambdas, seeds, opts.jobs);
  write_output(opts, "sweep.csv", report.to_csv());
  std::fputs(report.summary().c_str(), stdout);
  return report.passed() ? 0 : 1;
}

int cmd_compare_baseline(const CommonOptions& opts) {
  const zoss::LoadedConfig cfg = load(opts);
  const auto seeds = zoss::seed_range(cfg.run.seed, cfg.experiment.seeds);
  const zoss::BaselineComparisonReport report =
      zoss::baseline_comparison(cfg.run, seeds, opts.jobs);
  write_output(opts, "compare.csv", report.to_csv());
  std::fputs(report.summary().c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two time-scale zeroth-order projected stochastic subgradient toolkit"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto* run = app.add_subcommand("run", "execute a single optimization run and write its trace");
  add_common(run, opts);
  auto* bias = app.add_subcommand("bias", "bias decay experiment (empirical r(lambda))");
  add_common(bias, opts);
  auto* moment = app.add_subcommand("moment", "second-moment bound experiment");
  add_common(moment, opts);
  auto* converge = app.add_subcommand("converge", "multi-seed convergence experiment");
  add_common(converge, opts);
  auto* sweep = app.add_subcommand("sweep", "tail gap trend across a lambda grid");
  add_common(sweep, opts);
  auto* compare = app.add_subcommand("compare-baseline",
                                     "two-timescale vs single-timescale, paired seeds");
  add_common(compare, opts);
  auto* validate = app.add_subcommand("validate-schedule", "check the step-size conditions");
  add_common(validate, opts);
  app.add_subcommand("catalog", "list the built-in problems");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("catalog")) return cmd_catalog();
    if (app.got_subcommand(run)) return cmd_run(opts);
    if (app.got_subcommand(bias)) return cmd_bias(opts);
    if (app.got_subcommand(moment)) return cmd_moment(opts);
    if (app.got_subcommand(converge)) return cmd_converge(opts);
    if (app.got_subcommand(sweep)) return cmd_sweep(opts);
    if (app.got_subcommand(compare)) return cmd_compare_baseline(opts);
    if (app.got_subcommand(validate)) return cmd_validate_schedule(opts);
  } catch (const zoss::InvalidScheduleError& e) {
    std::cerr << "invalid schedule " << e.clause << ": " << e.what() << "\n";
    return 2;
  } catch (const zoss::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
