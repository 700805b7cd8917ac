#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "zoss/common.hpp"
#include "zoss/optimizer.hpp"
#include "zoss/parallel.hpp"
#include "zoss/problems.hpp"
#include "zoss/rng.hpp"
#include "zoss/smoothing.hpp"

namespace zoss {

// Statistical slack conventions, used uniformly across all experiments:
// 3 standard errors for one-sided bound tests, 2 combined standard errors for
// monotonicity comparisons.
inline constexpr double kBoundSlackSE = 3.0;
inline constexpr double kMonotoneSlackSE = 2.0;
// Tail window for run statistics: last 10% of iterations.
inline constexpr double kTailFraction = 0.1;

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::string vec_to_string(const Vec& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += fmt(v[i]);
  }
  return s;
}

inline double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

}  // namespace detail

/// Samples probe points for estimator experiments. A point is rejected when
/// its Clarke hull is non-singleton at the `margin` activity tolerance
/// (function-value units): bias decay over a finite lambda grid is only
/// resolvable at probes whose distance to the nonsmooth locus exceeds the
/// smallest smoothing width. Rejection is capped; problems whose kink jumps
/// are below the margin everywhere (e.g. averaged losses) fall back to plain
/// uniform samples.
inline std::vector<Vec> sample_probe_points(const ProblemCatalogEntry& entry, int count,
                                            std::uint64_t seed, double margin = 0.2,
                                            int max_tries = 200) {
  std::vector<Vec> points;
  RandomStream rng(seed, 0xB1A5);
  for (int i = 0; i < count; ++i) {
    Vec candidate;
    for (int tries = 0; tries < max_tries; ++tries) {
      candidate = sample_uniform(entry.constraint, rng);
      try {
        if (clarke_hull_at(entry.problem, candidate, margin).size() == 1) break;
      } catch (const UnsupportedOperationError&) {
        // margin counts too many pieces as active; treat as a rejection
      }
    }
    points.push_back(std::move(candidate));
  }
  return points;
}

// ---------------------------------------------------------------------------
// Bias decay experiment (empirical r(lambda)).
// ---------------------------------------------------------------------------

struct BiasCell {
  std::size_t point_index = 0;
  double lambda = 0.0;
  double bias = 0.0;
  double std_err = 0.0;
  Vec reference;      // reference grad f_lambda at the probe point
  Vec mean_estimate;
};

struct BiasReport {
  std::string problem_name;
  std::vector<Vec> points;
  std::vector<double> lambdas;  // descending
  std::vector<BiasCell> cells;  // row-major: point index major, lambda minor
  std::vector<bool> monotone_flag;  // per point
  std::vector<double> rbar;         // max bias over points, per lambda
  bool all_monotone = true;

  const BiasCell& cell(std::size_t point, std::size_t lam) const {
    return cells[point * lambdas.size() + lam];
  }

  std::string to_csv() const {
    std::string out = "point_index,lambda,bias,std_err,mean_estimate,reference\n";
    for (const BiasCell& c : cells) {
      out += std::to_string(c.point_index) + ',' + detail::fmt(c.lambda) + ',' +
             detail::fmt(c.bias) + ',' + detail::fmt(c.std_err) + ',' +
             detail::vec_to_string(c.mean_estimate) + ',' + detail::vec_to_string(c.reference) +
             '\n';
    }
    return out;
  }

  std::string summary() const {
    std::string out = "bias experiment: problem " + problem_name + "\n";
    for (std::size_t p = 0; p < points.size(); ++p) {
      out += monotone_flag[p] ? "[PASS]" : "[FAIL]";
      out += " point " + std::to_string(p) + " bias non-increasing across lambda grid:";
      for (std::size_t l = 0; l < lambdas.size(); ++l) out += ' ' + detail::fmt6(cell(p, l).bias);
      out += '\n';
    }
    out += std::string(all_monotone ? "[PASS]" : "[FAIL]") + " bias decay monotone for all points\n";
    return out;
  }

  bool passed() const { return all_monotone; }
};

/// Measures the empirical bias ||E[g] - Clarke hull|| at each (point, lambda)
/// cell with noise-free estimates, and checks monotone decay within the
/// 2-combined-SE convention. Also reports the uniformized max over points.
inline BiasReport bias_experiment(const ObjectiveProblem& problem, const std::vector<Vec>& points,
                                  const std::vector<double>& lambdas, int reps, std::uint64_t seed,
                                  int jobs = 1) {
  if (reps < 10000) throw ConfigError("bias_experiment: reps must be >= 1e4");
  if (lambdas.size() < 1) throw ConfigError("bias_experiment: empty lambda grid");
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    if (!(lambdas[i] < lambdas[i - 1]))
      throw ConfigError("bias_experiment: lambda grid must be strictly descending");

  BiasReport report;
  report.problem_name = problem.name;
  report.points = points;
  report.lambdas = lambdas;
  report.cells.resize(points.size() * lambdas.size());
  parallel_for(report.cells.size(), jobs, [&](std::size_t idx) {
    const std::size_t p = idx / lambdas.size();
    const std::size_t l = idx % lambdas.size();
    SmoothingParams params;
    params.lambda = lambdas[l];
    params.seed = mix_seed(seed, idx);
    const EstimateDecomposition dec =
        decompose_estimate(problem, points[p], params, reps, /*noise_free=*/true);
    BiasCell& cell = report.cells[idx];
    cell.point_index = p;
    cell.lambda = lambdas[l];
    cell.bias = dec.bias_norm;
    cell.std_err = dec.bias_std_err;
    cell.mean_estimate = dec.mean_estimate;
    SmoothingParams ref_params;
    ref_params.lambda = lambdas[l];
    ref_params.seed = mix_seed(seed, idx + 0x10000);
    cell.reference = reference_smoothed_gradient(problem, points[p], ref_params).grad;
  });

  report.monotone_flag.assign(points.size(), true);
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::size_t l = 0; l + 1 < lambdas.size(); ++l) {
      const BiasCell& a = report.cell(p, l);
      const BiasCell& b = report.cell(p, l + 1);
      const double combined = std::sqrt(a.std_err * a.std_err + b.std_err * b.std_err);
      if (b.bias > a.bias + kMonotoneSlackSE * combined) report.monotone_flag[p] = false;
    }
    if (!report.monotone_flag[p]) report.all_monotone = false;
  }
  report.rbar.assign(lambdas.size(), 0.0);
  for (std::size_t p = 0; p < points.size(); ++p)
    for (std::size_t l = 0; l < lambdas.size(); ++l)
      report.rbar[l] = std::max(report.rbar[l], report.cell(p, l).bias);
  return report;
}

// ---------------------------------------------------------------------------
// Second-moment bound experiment.
// ---------------------------------------------------------------------------

struct MomentCell {
  std::size_t point_index = 0;
  double lambda = 0.0;
  double empirical = 0.0;  // E || g ||^2
  double std_err = 0.0;
  double bound = 0.0;      // 2 L^2 (d^2 + d) + K d / lambda^2
  bool pass = false;
};

struct MomentReport {
  std::string problem_name;
  std::vector<Vec> points;
  std::vector<double> lambdas;
  std::vector<MomentCell> cells;
  bool all_pass = true;

  std::string to_csv() const {
    std::string out = "point_index,lambda,empirical,std_err,bound,pass\n";
    for (const MomentCell& c : cells)
      out += std::to_string(c.point_index) + ',' + detail::fmt(c.lambda) + ',' +
             detail::fmt(c.empirical) + ',' + detail::fmt(c.std_err) + ',' + detail::fmt(c.bound) +
             ',' + (c.pass ? "1" : "0") + '\n';
    return out;
  }

  std::string summary() const {
    std::size_t ok = 0;
    for (const MomentCell& c : cells) ok += c.pass ? 1 : 0;
    std::string out = "moment experiment: problem " + problem_name + "\n";
    out += std::string(all_pass ? "[PASS]" : "[FAIL]") + " second-moment bound in " +
           std::to_string(ok) + "/" + std::to_string(cells.size()) + " cells\n";
    return out;
  }

  bool passed() const { return all_pass; }
};

/// Tests the estimator's second moment against 2 L^2 (d^2+d) + K d/lambda^2
/// with 3-SE slack at every (point, lambda) cell, with noise of the given
/// sigma (overriding the problem's noise model).
inline MomentReport moment_experiment(const ObjectiveProblem& base_problem,
                                      const std::vector<Vec>& points,
                                      const std::vector<double>& lambdas, int reps, double sigma,
                                      std::uint64_t seed, int jobs = 1) {
  if (reps < 100000) throw ConfigError("moment_experiment: reps must be >= 1e5");
  ObjectiveProblem problem = base_problem;
  problem.noise = NoiseModel::gaussian(sigma);
  MomentReport report;
  report.problem_name = problem.name;
  report.points = points;
  report.lambdas = lambdas;
  report.cells.resize(points.size() * lambdas.size());
  parallel_for(report.cells.size(), jobs, [&](std::size_t idx) {
    const std::size_t p = idx / lambdas.size();
    const std::size_t l = idx % lambdas.size();
    SmoothingParams params;
    params.lambda = lambdas[l];
    params.seed = mix_seed(seed, idx);
    const EstimateDecomposition dec = decompose_estimate(problem, points[p], params, reps);
    MomentCell& cell = report.cells[idx];
    cell.point_index = p;
    cell.lambda = lambdas[l];
    cell.empirical = dec.second_moment;
    cell.std_err = dec.second_moment_std_err;
    cell.bound = second_moment_bound(problem, lambdas[l]);
    cell.pass = cell.empirical <= cell.bound + kBoundSlackSE * cell.std_err;
  });
  for (const MomentCell& c : report.cells)
    if (!c.pass) report.all_pass = false;
  return report;
}

// ---------------------------------------------------------------------------
// Convergence-to-stationarity experiment.
// ---------------------------------------------------------------------------

struct ConvergenceRow {
  std::uint64_t seed = 0;
  double final_gap = 0.0;
  double tail_min_gap = 0.0;
  std::optional<double> tail_dist_to_S;
  double final_f = 0.0;
  double max_y_norm = 0.0;
  bool pass = false;
};

struct ConvergenceReport {
  std::string problem_name;
  double eps_gap = 0.0;
  std::vector<ConvergenceRow> rows;
  double pass_fraction = 0.0;
  double median_tail_min_gap = 0.0;

  std::string to_csv() const {
    std::string out = "seed,final_gap,tail_min_gap,tail_dist_to_S,final_f,max_y_norm,pass\n";
    for (const ConvergenceRow& r : rows) {
      out += std::to_string(r.seed) + ',' + detail::fmt(r.final_gap) + ',' +
             detail::fmt(r.tail_min_gap) + ',';
      if (r.tail_dist_to_S) out += detail::fmt(*r.tail_dist_to_S);
      out += ',' + detail::fmt(r.final_f) + ',' + detail::fmt(r.max_y_norm) + ',' +
             (r.pass ? "1" : "0") + '\n';
    }
    return out;
  }

  std::string summary() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "convergence experiment: problem %s\n[%s] tail-min gap <= %g in %.0f%% of %zu seeds\n",
                  problem_name.c_str(), pass_fraction >= 0.9 ? "PASS" : "FAIL", eps_gap,
                  100.0 * pass_fraction, rows.size());
    return buf;
  }

  bool passed() const { return pass_fraction >= 0.9; }
};

namespace detail {

struct TailStats {
  double tail_min_gap;
  std::optional<double> tail_dist_to_S;
  double tail_iterate_sd;
};

inline TailStats tail_stats(const IterateTrace& trace, const ObjectiveProblem& problem) {
  const long tail_start =
      trace.final_n - static_cast<long>(kTailFraction * static_cast<double>(trace.final_n));
  TailStats stats{std::numeric_limits<double>::infinity(), std::nullopt, 0.0};
  Vec mean = zeros(trace.final_x.size());
  std::size_t count = 0;
  double dist_best = std::numeric_limits<double>::infinity();
  for (const TraceRecord& r : trace.records) {
    if (r.n < tail_start) continue;
    stats.tail_min_gap = std::min(stats.tail_min_gap, r.gap);
    if (problem.known_stationary_set)
      dist_best = std::min(dist_best, problem.known_stationary_set->distance(r.x));
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += r.x[i];
    ++count;
  }
  if (count == 0) {  // degenerate: no records in the tail window
    stats.tail_min_gap = trace.records.back().gap;
    return stats;
  }
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] /= static_cast<double>(count);
  double sq = 0.0;
  for (const TraceRecord& r : trace.records) {
    if (r.n < tail_start) continue;
    sq += norm2_sq(sub(r.x, mean));
  }
  stats.tail_iterate_sd = std::sqrt(sq / static_cast<double>(count));
  if (problem.known_stationary_set) stats.tail_dist_to_S = dist_best;
  return stats;
}

}  // namespace detail

/// Runs the configured problem once per seed and aggregates stationarity
/// statistics over the tail window.
inline ConvergenceReport convergence_experiment(const RunConfig& base,
                                                const std::vector<std::uint64_t>& seeds,
                                                double eps_gap, int jobs = 1) {
  if (seeds.size() < 10) throw ConfigError("convergence_experiment: needs at least 10 seeds");
  const RunInstance inst = resolve_run(base);
  ConvergenceReport report;
  report.problem_name = inst.problem.name;
  report.eps_gap = eps_gap;
  report.rows.resize(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t i) {
    RunConfig config = base;
    config.seed = seeds[i];
    const IterateTrace trace = run(config);
    const detail::TailStats stats = detail::tail_stats(trace, inst.problem);
    ConvergenceRow& row = report.rows[i];
    row.seed = seeds[i];
    row.final_gap = trace.records.back().gap;
    row.tail_min_gap = stats.tail_min_gap;
    row.tail_dist_to_S = stats.tail_dist_to_S;
    row.final_f = trace.records.back().f_clean;
    row.max_y_norm = trace.max_y_norm;
    row.pass = row.tail_min_gap <= eps_gap;
  });
  std::size_t ok = 0;
  std::vector<double> tails;
  for (const ConvergenceRow& r : report.rows) {
    ok += r.pass ? 1 : 0;
    tails.push_back(r.tail_min_gap);
  }
  report.pass_fraction = static_cast<double>(ok) / static_cast<double>(report.rows.size());
  report.median_tail_min_gap = detail::median(tails);
  return report;
}

// ---------------------------------------------------------------------------
// Lambda sweep: tail gap trend as the smoothing parameter shrinks.
// ---------------------------------------------------------------------------

struct LambdaSweepReport {
  std::vector<double> lambdas;  // descending
  std::vector<ConvergenceReport> reports;
  bool trend_checked = false;
  bool trend_ok = true;  // median tail gap at the smallest lambda does not
                         // exceed the largest-lambda median by more than 0.02

  std::string to_csv() const {
    std::string out = "lambda,median_tail_min_gap,pass_fraction\n";
    for (std::size_t i = 0; i < lambdas.size(); ++i)
      out += detail::fmt(lambdas[i]) + ',' + detail::fmt(reports[i].median_tail_min_gap) + ',' +
             detail::fmt(reports[i].pass_fraction) + '\n';
    return out;
  }

  std::string summary() const {
    std::string out = "lambda sweep:\n";
    for (std::size_t i = 0; i < lambdas.size(); ++i)
      out += "  lambda " + detail::fmt6(lambdas[i]) + ": median tail gap " +
             detail::fmt6(reports[i].median_tail_min_gap) + "\n";
    if (trend_checked)
      out += std::string(trend_ok ? "[PASS]" : "[FAIL]") +
             " median tail gap non-increasing from largest to smallest lambda (+0.02 slack)\n";
    else
      out += "single lambda: no trend claim\n";
    return out;
  }

  bool passed() const { return !trend_checked || trend_ok; }
};

inline LambdaSweepReport lambda_sweep(const RunConfig& base, const std::vector<double>& lambdas,
                                      const std::vector<std::uint64_t>& seeds, int jobs = 1) {
  if (lambdas.empty()) throw ConfigError("lambda_sweep: empty lambda grid");
  LambdaSweepReport report;
  report.lambdas = lambdas;
  for (double lambda : lambdas) {
    RunConfig config = base;
    config.lambda = lambda;
    report.reports.push_back(convergence_experiment(config, seeds, 0.1, jobs));
  }
  if (lambdas.size() >= 2) {
    report.trend_checked = true;
    report.trend_ok = report.reports.back().median_tail_min_gap <=
                      report.reports.front().median_tail_min_gap + 0.02;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Two-timescale vs single-timescale baseline, paired by seed.
// ---------------------------------------------------------------------------

struct BaselinePair {
  std::uint64_t seed = 0;
  double ts_tail_min_gap = 0.0;
  double base_tail_min_gap = 0.0;
  double ts_tail_sd = 0.0;    // tail iterate standard deviation
  double base_tail_sd = 0.0;
};

struct BaselineComparisonReport {
  std::string problem_name;
  std::vector<BaselinePair> pairs;
  double ts_sd_wins_fraction = 0.0;  // fraction of seeds with ts sd <= baseline sd

  std::string to_csv() const {
    std::string out = "seed,ts_tail_min_gap,base_tail_min_gap,ts_tail_sd,base_tail_sd\n";
    for (const BaselinePair& p : pairs)
      out += std::to_string(p.seed) + ',' + detail::fmt(p.ts_tail_min_gap) + ',' +
             detail::fmt(p.base_tail_min_gap) + ',' + detail::fmt(p.ts_tail_sd) + ',' +
             detail::fmt(p.base_tail_sd) + '\n';
    return out;
  }

  std::string summary() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "baseline comparison: problem %s\ntwo-timescale tail sd <= baseline in %.0f%% of %zu seeds\n",
                  problem_name.c_str(), 100.0 * ts_sd_wins_fraction, pairs.size());
    return buf;
  }
};

/// Runs both methods on identical seeds (hence identical estimator draw
/// sequences) and reports paired tail statistics. The two-timescale tracker
/// averages the K/lambda-scale estimator noise, so its tail iterate variance
/// is expected lower at small lambda.
inline BaselineComparisonReport baseline_comparison(const RunConfig& base,
                                                    const std::vector<std::uint64_t>& seeds,
                                                    int jobs = 1) {
  if (seeds.size() < 10) throw ConfigError("baseline_comparison: needs at least 10 seeds");
  const RunInstance inst = resolve_run(base);
  BaselineComparisonReport report;
  report.problem_name = inst.problem.name;
  report.pairs.resize(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t i) {
    RunConfig ts = base;
    ts.seed = seeds[i];
    ts.baseline = false;
    RunConfig single = ts;
    single.baseline = true;
    const IterateTrace ts_trace = run(ts);
    const IterateTrace base_trace = run(single);
    const detail::TailStats ts_stats = detail::tail_stats(ts_trace, inst.problem);
    const detail::TailStats base_stats = detail::tail_stats(base_trace, inst.problem);
    BaselinePair& pair = report.pairs[i];
    pair.seed = seeds[i];
    pair.ts_tail_min_gap = ts_stats.tail_min_gap;
    pair.base_tail_min_gap = base_stats.tail_min_gap;
    pair.ts_tail_sd = ts_stats.tail_iterate_sd;
    pair.base_tail_sd = base_stats.tail_iterate_sd;
  });
  std::size_t wins = 0;
  for (const BaselinePair& p : report.pairs) wins += p.ts_tail_sd <= p.base_tail_sd ? 1 : 0;
  report.ts_sd_wins_fraction =
      report.pairs.empty() ? 0.0 : static_cast<double>(wins) / static_cast<double>(report.pairs.size());
  return report;
}

/// Seed list convention for experiments: base, base+1, ..., base+count-1.
inline std::vector<std::uint64_t> seed_range(std::uint64_t base, int count) {
  std::vector<std::uint64_t> seeds;
  seeds.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) seeds.push_back(base + static_cast<std::uint64_t>(i));
  return seeds;
}

}  // namespace zoss
