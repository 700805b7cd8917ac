// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Each criterion enforces its stated tolerance and runtime
// budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "zoss/analysis.hpp"
#include "zoss/config.hpp"
#include "zoss/optimizer.hpp"
#include "zoss/parallel.hpp"

#ifndef ZOSS_CLI_PATH
#define ZOSS_CLI_PATH "./zoss"
#endif

namespace fs = std::filesystem;
using namespace zoss;

namespace {

int g_jobs = default_jobs();

double phi(double z) { return 0.5 * (1.0 + std::erf(z / std::sqrt(2.0))); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool condition, const std::string& what) {
    if (!condition) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

// ---------------------------------------------------------------------------
// 1. Bias decay on ABS at x = 0.3, noise-free, against 2 Phi(-x/lambda).
// ---------------------------------------------------------------------------
Outcome criterion_bias_decay() {
  Outcome out;
  const std::vector<double> lambdas = {0.4, 0.2, 0.1, 0.05};
  auto abs1 = make_abs(1);
  const BiasReport report = bias_experiment(abs1, {{0.3}}, lambdas, 10000, 1001, g_jobs);
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    const BiasCell& cell = report.cell(0, l);
    const double expected = 2.0 * (1.0 - phi(0.3 / lambdas[l]));
    char buf[120];
    std::snprintf(buf, sizeof(buf), "lambda %.2f: bias %.5f (closed form %.5f)", lambdas[l],
                  cell.bias, expected);
    out.require(std::abs(cell.bias - expected) <= 3.0 * std::max(cell.std_err, 1e-9), buf);
  }
  out.require(report.monotone_flag[0], "bias sequence not monotone decreasing");
  return out;
}

// ---------------------------------------------------------------------------
// 2. Second-moment bound on every catalog problem.
// ---------------------------------------------------------------------------
Outcome criterion_moment_bound() {
  Outcome out;
  for (const auto& entry : builtin_catalog()) {
    RandomStream rng(2002, static_cast<std::uint64_t>(entry.problem.dim));
    std::vector<Vec> points;
    for (int i = 0; i < 10; ++i) points.push_back(sample_uniform(entry.constraint, rng));
    const MomentReport report = moment_experiment(entry.problem, points, {0.5, 0.1, 0.02}, 100000,
                                                  0.1, 2003, g_jobs);
    int failed = 0;
    for (const MomentCell& c : report.cells) failed += c.pass ? 0 : 1;
    out.require(report.all_pass,
                entry.problem.name + ": " + std::to_string(failed) + " cells over the bound");
  }
  return out;
}

// ---------------------------------------------------------------------------
// 3. Projection / cone suite at the stated counts and tolerances.
// ---------------------------------------------------------------------------
Outcome criterion_projection_suite() {
  Outcome out;
  const std::vector<ConstraintSet> sets = {
      ConstraintSet::cube(3, -1.0, 1.0),
      ConstraintSet::ball({0.1, -0.2, 0.3}, 1.5),
      ConstraintSet::simplex(4, 1.0),
  };
  long failures = 0;
  for (const auto& set : sets) {
    RandomStream rng(3003);
    for (int i = 0; i < 10000; ++i) {
      Vec p(static_cast<std::size_t>(set.dim)), q(static_cast<std::size_t>(set.dim));
      for (auto& v : p) v = 4.0 * rng.normal();
      for (auto& v : q) v = 4.0 * rng.normal();
      const Vec pp = project(set, p);
      if (dist2(project(set, pp), pp) > 1e-12) ++failures;
      if (dist2(pp, project(set, q)) > dist2(p, q) + 1e-12) ++failures;
      if (i < 1000) {
        const Vec z = sample_uniform(set, rng);
        if (dot(sub(p, pp), sub(z, pp)) > 1e-10) ++failures;
      }
    }
  }
  out.require(failures == 0,
              "projection identities: " + std::to_string(failures) + " failures");

  long cone_failures = 0;
  long limit_failures = 0;
  for (int kind = 0; kind < 2; ++kind) {
    const ConstraintSet set = kind == 0 ? ConstraintSet::cube(3, -1.0, 1.0)
                                        : ConstraintSet::ball({0.0, 0.0, 0.0}, 1.0);
    RandomStream rng(3004);
    for (int i = 0; i < 10000; ++i) {
      Vec outside(3), v(3), y(3);
      for (auto& w : outside) w = 2.5 * rng.normal();
      for (auto& w : v) w = rng.normal();
      for (auto& w : y) w = 2.0 * rng.normal();
      const Vec x = project(set, outside);
      const auto check = moreau_check(set, x, v);
      if (check.residual > 1e-10 || std::abs(check.inner) > 1e-10) ++cone_failures;
      const Vec eta = normal_project(set, x, scaled(y, -1.0));
      if (norm2(add(eta, y)) > norm2(y) * (1.0 + 1e-12) + 1e-12) ++cone_failures;
      if (norm2(eta) > 2.0 * norm2(y) * (1.0 + 1e-12) + 1e-12) ++cone_failures;
      if (i < 1000) {
        const double t = 1e-6;
        const Vec tp = tangent_project(set, x, v);
        const Vec moved = project(set, axpy(x, t, v));
        Vec limit(3);
        for (std::size_t k = 0; k < 3; ++k) limit[k] = (moved[k] - x[k]) / t;
        if (dist2(limit, tp) > 1e-4) ++limit_failures;
      }
    }
  }
  out.require(cone_failures == 0,
              "Moreau/eta identities: " + std::to_string(cone_failures) + " failures");
  out.require(limit_failures == 0,
              "tangent limit characterization: " + std::to_string(limit_failures) + " failures");
  return out;
}

// ---------------------------------------------------------------------------
// 4. Fast-timescale tracking on every catalog problem, 18 of 20 seeds.
// ---------------------------------------------------------------------------
Outcome criterion_tracking() {
  Outcome out;
  for (const auto& entry : builtin_catalog()) {
    const auto seeds = seed_range(4001, 20);
    std::vector<int> improved(seeds.size(), 0);
    std::vector<double> max_y(seeds.size(), 0.0);
    parallel_for(seeds.size(), g_jobs, [&](std::size_t i) {
      RunConfig config;
      config.problem_name = entry.problem.name;
      config.lambda = 0.05;
      config.iterations = 200000;
      config.stride = 1000;
      config.probe_stride = 1000;
      config.probe_mc_samples = 10000;
      config.seed = seeds[i];
      const IterateTrace trace = run(config);
      std::vector<double> probes;
      for (const TraceRecord& r : trace.records)
        if (r.track_err) probes.push_back(*r.track_err);
      const std::size_t k = probes.size() / 10;
      double head = 0.0, tail = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        head += probes[j];
        tail += probes[probes.size() - 1 - j];
      }
      improved[i] = tail < head ? 1 : 0;
      max_y[i] = trace.max_y_norm;
    });
    int wins = 0;
    for (int w : improved) wins += w;
    out.require(wins >= 18, entry.problem.name + ": tracking improved in only " +
                                std::to_string(wins) + "/20 seeds");
    const double y_bound = 50.0 * (entry.problem.subgrad_bound_G + 0.1 / 0.05);
    for (std::size_t i = 0; i < seeds.size(); ++i)
      out.require(std::isfinite(max_y[i]) && max_y[i] <= y_bound,
                  entry.problem.name + ": fast iterate exceeded the boundedness diagnostic");
  }
  return out;
}

// ---------------------------------------------------------------------------
// 5. Convergence to near-stationarity, 20 seeds per configuration.
// ---------------------------------------------------------------------------
Outcome criterion_convergence() {
  Outcome out;
  struct Case {
    const char* name;
    int dim;
  };
  for (const Case c : {Case{"ABS", 1}, Case{"ABS", 3}, Case{"DOUBLEWELL", 1}, Case{"NEGABS", 1}}) {
    RunConfig config;
    config.problem_name = c.name;
    config.dim = c.dim;
    config.lambda = 0.05;
    config.iterations = 200000;
    config.stride = 100;
    config.probe_stride = 200000;
    const ConvergenceReport report =
        convergence_experiment(config, seed_range(5001, 20), 0.1, g_jobs);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s d=%d: tail-min gap <= 0.1 in %.0f%% of seeds", c.name,
                  c.dim, 100.0 * report.pass_fraction);
    out.require(report.pass_fraction >= 0.9, buf);
    if (std::string(c.name) == "DOUBLEWELL") {
      int near = 0;
      for (const ConvergenceRow& row : report.rows)
        if (row.tail_dist_to_S && *row.tail_dist_to_S <= 0.1) ++near;
      out.require(near >= 18, "DOUBLEWELL: tail iterates near {-1,0,1} in only " +
                                  std::to_string(near) + "/20 seeds");
    }
    const auto entry = make_catalog_entry(c.name, c.dim);
    const double y_bound = 50.0 * (entry.problem.subgrad_bound_G + 0.1 / 0.05);
    for (const ConvergenceRow& row : report.rows)
      out.require(row.max_y_norm <= y_bound, "fast iterate exceeded the boundedness diagnostic");
  }
  return out;
}

// ---------------------------------------------------------------------------
// 6. Lambda-sweep trend on ABS d=1.
// ---------------------------------------------------------------------------
Outcome criterion_lambda_sweep() {
  Outcome out;
  RunConfig config;
  config.problem_name = "ABS";
  config.dim = 1;
  config.iterations = 200000;
  config.stride = 100;
  config.probe_stride = 200000;
  const LambdaSweepReport sweep =
      lambda_sweep(config, {0.4, 0.1, 0.05}, seed_range(6001, 20), g_jobs);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "median tail gap %.4f at lambda 0.05 vs %.4f at 0.4",
                sweep.reports.back().median_tail_min_gap,
                sweep.reports.front().median_tail_min_gap);
  out.require(sweep.trend_checked && sweep.trend_ok, buf);
  return out;
}

// ---------------------------------------------------------------------------
// 7. Schedule validator: acceptance, rejection clauses, closed-form reports.
// ---------------------------------------------------------------------------
Outcome criterion_schedule_validator() {
  Outcome out;
  const StepSchedule good{0.9, 1.0, 0.9, 0.6, 0};
  const long horizon = 1000000;
  const ScheduleReport report = validate(good, horizon);
  out.require(report.monotone_ok, "default schedule flagged non-monotone");

  const double h = static_cast<double>(horizon + 1);
  out.require(std::abs(report.ratio_tail - (0.9 / std::pow(h, 1.0)) / (0.9 / std::pow(h, 0.6))) <=
                  1e-12,
              "ratio_tail deviates from the closed form");

  long double sa = 0, sb = 0, sq = 0, ca = 0, cb = 0, cq = 0;
  for (long n = 0; n <= horizon; ++n) {
    const long double alpha = 0.9L / powl(static_cast<long double>(n + 1), 1.0L);
    const long double beta = 0.9L / powl(static_cast<long double>(n + 1), 0.6L);
    auto acc = [](long double& s, long double& c, long double x) {
      const long double y = x - c;
      const long double t = s + y;
      c = (t - s) - y;
      s = t;
    };
    acc(sa, ca, alpha);
    acc(sb, cb, beta);
    acc(sq, cq, alpha * alpha + beta * beta);
  }
  out.require(std::abs(report.sum_alpha - static_cast<double>(sa)) <= 1e-12 &&
                  std::abs(report.sum_beta - static_cast<double>(sb)) <= 1e-12 &&
                  std::abs(report.sq_partial_sum - static_cast<double>(sq)) <= 1e-12,
              "partial sums deviate from the independent oracle");

  bool clause_e = false, clause_d = false;
  try {
    validate(StepSchedule{0.9, 0.6, 0.9, 0.8, 0}, 1000);
  } catch (const InvalidScheduleError& e) {
    clause_e = e.clause == "(e)";
  }
  try {
    validate(StepSchedule{0.9, 1.0, 0.9, 0.4, 0}, 1000);
  } catch (const InvalidScheduleError& e) {
    clause_d = e.clause == "(d)";
  }
  out.require(clause_e, "p <= q not rejected with clause (e)");
  out.require(clause_d, "q <= 0.5 not rejected with clause (d)");
  return out;
}

// ---------------------------------------------------------------------------
// 8. CLI determinism across invocations and job counts.
// ---------------------------------------------------------------------------
std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_determinism() {
  Outcome out;
  const fs::path dir = fs::temp_directory_path() / "zoss_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "config.ini");
    cfg << "[problem]\nname = ABS\ndim = 1\n\n[run]\niterations = 20000\nseed = 5\nstride = 100\n"
           "probe_stride = 1000\n\n[experiment]\nseeds = 10\neps_gap = 0.5\n";
  }
  auto cli = [&](const std::string& args) {
    const std::string cmd = std::string(ZOSS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  const std::string cfg = (dir / "config.ini").string();
  out.require(cli("run --config " + cfg + " --out " + (dir / "a").string() + " --jobs 1") == 0,
              "first run invocation failed");
  out.require(cli("run --config " + cfg + " --out " + (dir / "b").string() + " --jobs 4") == 0,
              "second run invocation failed");
  out.require(slurp(dir / "a" / "trace.csv") == slurp(dir / "b" / "trace.csv"),
              "trace bytes differ across invocations/job counts");
  out.require(cli("converge --config " + cfg + " --out " + (dir / "c1").string() + " --jobs 1") == 0,
              "converge --jobs 1 failed");
  out.require(cli("converge --config " + cfg + " --out " + (dir / "c2").string() + " --jobs 2") == 0,
              "converge --jobs 2 failed");
  out.require(slurp(dir / "c1" / "converge.csv") == slurp(dir / "c2" / "converge.csv"),
              "converge bytes differ across job counts");
  return out;
}

// ---------------------------------------------------------------------------
// 9. Stationary-set soundness: known members vs sampled far points.
// ---------------------------------------------------------------------------
Outcome criterion_stationary_soundness() {
  Outcome out;
  for (const auto& entry : builtin_catalog()) {
    if (!entry.problem.known_stationary_set) continue;
    const auto& S = *entry.problem.known_stationary_set;
    for (const Vec& s : S.points) {
      const double gap = stationarity_gap(entry.constraint, entry.problem, s, 1e-8).gap;
      out.require(gap <= 1e-6,
                  entry.problem.name + ": known stationary point with gap " + std::to_string(gap));
    }
    RandomStream rng(9009);
    int checked = 0;
    int bad = 0;
    while (checked < 1000) {
      const Vec x = sample_uniform(entry.constraint, rng);
      if (S.distance(x) < 0.1) continue;
      if (stationarity_gap(entry.constraint, entry.problem, x, 1e-8).gap < 1e-3) ++bad;
      ++checked;
    }
    out.require(bad == 0, entry.problem.name + ": " + std::to_string(bad) +
                              " far points with gap below 1e-3");
  }
  return out;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> fn;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_jobs = std::atoi(argv[1]);
  const std::vector<Criterion> criteria = {
      {1, "bias decay matches 2 Phi(-x/lambda) on ABS", 10.0, criterion_bias_decay},
      {2, "second-moment bound holds on all catalog problems", 120.0, criterion_moment_bound},
      {3, "projection and cone identities", 30.0, criterion_projection_suite},
      {4, "fast-timescale tracking improves on all catalog problems", 600.0, criterion_tracking},
      {5, "iterates reach near-stationarity", 600.0, criterion_convergence},
      {6, "tail gap trend across the lambda grid", 300.0, criterion_lambda_sweep},
      {7, "schedule validator accepts/rejects with named clauses", 1.0,
       criterion_schedule_validator},
      {8, "byte-identical runs across invocations and job counts", 60.0, criterion_determinism},
      {9, "stationary-set soundness", 30.0, criterion_stationary_soundness},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.fn();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.budget_seconds) {
      outcome.pass = false;
      if (!outcome.detail.empty()) outcome.detail += "; ";
      outcome.detail += "runtime budget exceeded";
    }
    std::printf("[%s] criterion %d: %s (%.1f s / %.0f s budget)%s%s\n",
                outcome.pass ? "PASS" : "FAIL", c.id, c.name, seconds, c.budget_seconds,
                outcome.detail.empty() ? "" : " -- ", outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures == 0) {
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
    return 0;
  }
  std::printf("%d acceptance criteria failed\n", failures);
  return 1;
}
