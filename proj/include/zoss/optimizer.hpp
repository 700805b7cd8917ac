#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zoss/common.hpp"
#include "zoss/geometry.hpp"
#include "zoss/problems.hpp"
#include "zoss/rng.hpp"
#include "zoss/schedules.hpp"
#include "zoss/smoothing.hpp"

namespace zoss {

// ---------------------------------------------------------------------------
// Run configuration. Defaults follow the shipped experiment setup: schedule
// (0.9, 1, 0.9, 0.6), lambda = 0.05, x0 = P_X(0.8 * ones), y0 = 0.
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string problem_name = "ABS";
  std::optional<int> dim;
  std::optional<double> noise_sigma;
  std::optional<ConstraintSet> constraint;  // default: the catalog pairing
  StepSchedule schedule;
  double lambda = 0.05;
  long iterations = 200000;
  std::uint64_t seed = 1;
  long stride = 100;
  long probe_stride = 1000;     // tracking-error probes; multiple of stride
  int probe_mc_samples = 10000; // reference MC size at probes (d > 1)
  bool baseline = false;        // single-timescale variant
  bool use_post_update_y = false;  // x-update reads y_{n+1} instead of y_n
  // Hull activity tolerance (function-value units) for recorded trace gaps.
  // Iterates settle an O(lambda)-sized offset away from kinks, so the band
  // must cover that offset for the gap to register near-stationarity; the
  // default comfortably covers the shipped lambda grid.
  double gap_activity_tol = 5e-2;
  bool record_residuals = false;   // keep per-step g - y for the noise diagnostic
  std::optional<Vec> x0;
  std::optional<Vec> y0;
};

/// Initial slow iterate when none is configured: the projection of the
/// all-0.8 vector, off-center so symmetric problems do not start stationary.
inline constexpr double kDefaultX0Coordinate = 0.8;

struct TwoTimescaleState {
  long n = 0;
  Vec x;  // slow iterate, always feasible
  Vec y;  // fast iterate, tracks the subgradient estimate
  RandomStream rng;
};

/// One coupled update. The estimate g is drawn at x_n; y moves by
/// beta(n) (g - y_n); x moves by -alpha(n) y_n and is projected. The
/// x-update reads the pre-update y_n, matching the display order of the
/// update equations (post-update y is a config variant, off by default).
inline void apply_coupled_update(Vec& x, Vec& y, const Vec& g, double alpha, double beta,
                                 const ConstraintSet& set, bool use_post_update_y) {
  Vec y_next = y;
  for (std::size_t i = 0; i < y.size(); ++i) y_next[i] += beta * (g[i] - y[i]);
  const Vec& drive = use_post_update_y ? y_next : y;
  Vec moved(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) moved[i] = x[i] - alpha * drive[i];
  x = project(set, moved);
  y = std::move(y_next);
}

inline void ts_step(TwoTimescaleState& state, const ObjectiveProblem& problem,
                    const ConstraintSet& set, const StepSchedule& sched, double lambda,
                    bool use_post_update_y = false) {
  SmoothingParams params;
  params.lambda = lambda;
  const Vec g = two_point_estimate(problem, state.x, params, state.rng);
  apply_coupled_update(state.x, state.y, g, sched.alpha(state.n), sched.beta(state.n), set,
                       use_post_update_y);
  ++state.n;
}

/// Single-timescale baseline: x_{n+1} = P_X(x_n - alpha(n) g). y is unused.
inline void baseline_step(TwoTimescaleState& state, const ObjectiveProblem& problem,
                          const ConstraintSet& set, const StepSchedule& sched, double lambda) {
  SmoothingParams params;
  params.lambda = lambda;
  const Vec g = two_point_estimate(problem, state.x, params, state.rng);
  Vec moved(state.x.size());
  for (std::size_t i = 0; i < state.x.size(); ++i) moved[i] = state.x[i] - sched.alpha(state.n) * g[i];
  state.x = project(set, moved);
  ++state.n;
}

// ---------------------------------------------------------------------------
// Trace of a run, recorded at a configurable stride.
// ---------------------------------------------------------------------------

struct TraceRecord {
  long n = 0;
  double t = 0.0;  // cumulative time sum_{m<n} alpha(m)
  Vec x, y;
  double gap = 0.0;
  std::optional<double> track_err;  // || y - grad f_lambda(x) || at probe strides
  double f_clean = 0.0;
};

struct RunInstance {
  ObjectiveProblem problem;
  ConstraintSet constraint;
  RunConfig config;
};

struct IterateTrace {
  std::vector<TraceRecord> records;
  std::vector<Vec> residuals;  // per-step g - y_n when config.record_residuals
  RunConfig config;
  std::string problem_name;
  std::string constraint_name;
  int dim = 0;
  double max_y_norm = 0.0;
  long final_n = 0;
  double final_t = 0.0;
  Vec final_x, final_y;
};

/// Resolves the problem/constraint named by the config and validates every
/// parameter. Throws ConfigError before any step runs.
inline RunInstance resolve_run(const RunConfig& config) {
  ProblemCatalogEntry entry = make_catalog_entry(config.problem_name, config.dim, config.noise_sigma);
  RunInstance inst;
  inst.problem = std::move(entry.problem);
  inst.constraint = config.constraint ? *config.constraint : std::move(entry.constraint);
  if (inst.constraint.dim != inst.problem.dim)
    throw ConfigError("run: constraint dimension does not match the problem");
  validate(config.schedule, 1000);
  if (!(config.lambda > 0)) throw ConfigError("run: lambda must be positive");
  if (config.iterations < 0) throw ConfigError("run: iterations must be nonnegative");
  if (config.stride < 1) throw ConfigError("run: stride must be positive");
  if (config.probe_stride < 1 || config.probe_stride % config.stride != 0)
    throw ConfigError("run: probe_stride must be a positive multiple of stride");
  if (config.probe_mc_samples < 1000) throw ConfigError("run: probe_mc_samples must be >= 1e3");
  if (config.x0 && static_cast<int>(config.x0->size()) != inst.problem.dim)
    throw ConfigError("run: x0 dimension mismatch");
  if (config.y0 && static_cast<int>(config.y0->size()) != inst.problem.dim)
    throw ConfigError("run: y0 dimension mismatch");
  if (config.x0 && !contains(inst.constraint, *config.x0))
    throw ConfigError("run: x0 is not feasible");
  inst.config = config;
  return inst;
}

inline Vec initial_x(const RunInstance& inst) {
  if (inst.config.x0) return project(inst.constraint, *inst.config.x0);
  return project(inst.constraint,
                 constant(static_cast<std::size_t>(inst.problem.dim), kDefaultX0Coordinate));
}

/// Stationarity gap for trace records. Problems whose losses drive many
/// pieces toward their kinks at once (e.g. averaged L1 fits) can exceed the
/// supported hull size at the configured activity tolerance; the tolerance
/// is then halved until the hull is computable again.
inline double trace_stationarity_gap(const ConstraintSet& set, const ObjectiveProblem& problem,
                                     const Vec& x, double tol) {
  for (double t = tol;; t *= 0.5) {
    try {
      return stationarity_gap(set, problem, x, t).gap;
    } catch (const UnsupportedOperationError&) {
      if (t < 1e-14) return stationarity_gap(set, problem, x, 0.0).gap;
    }
  }
}

/// Executes the configured run. Deterministic per seed: identical configs
/// produce identical traces byte for byte.
inline IterateTrace run(const RunConfig& config) {
  const RunInstance inst = resolve_run(config);
  const ObjectiveProblem& problem = inst.problem;
  const ConstraintSet& set = inst.constraint;
  const long N = config.iterations;
  const std::size_t d = static_cast<std::size_t>(problem.dim);

  IterateTrace trace;
  trace.config = config;
  trace.problem_name = problem.name;
  trace.constraint_name = set.kind_name();
  trace.dim = problem.dim;
  trace.records.reserve(static_cast<std::size_t>(N / config.stride) + 1);
  if (config.record_residuals) trace.residuals.reserve(static_cast<std::size_t>(N));

  Vec x = initial_x(inst);
  Vec y = config.y0 ? *config.y0 : zeros(d);
  RandomStream rng(config.seed);
  SmoothingParams probe_params{config.lambda, config.probe_mc_samples, config.seed};

  detail::TwoPointScratch scratch;
  Vec g;
  double t = 0.0;
  KahanSum time_sum;
  for (long n = 0; n <= N; ++n) {
    if (n % config.stride == 0) {
      TraceRecord rec;
      rec.n = n;
      rec.t = t;
      rec.x = x;
      rec.y = y;
      rec.gap = trace_stationarity_gap(set, problem, x, config.gap_activity_tol);
      rec.f_clean = problem.eval_clean(x);
      if (n % config.probe_stride == 0)
        rec.track_err = dist2(y, reference_smoothed_gradient(problem, x, probe_params).grad);
      trace.records.push_back(std::move(rec));
    }
    if (n == N) break;
    detail::two_point_into(problem, x, config.lambda, rng, false, scratch, g);
    if (config.record_residuals) trace.residuals.push_back(sub(g, y));
    if (config.baseline) {
      Vec moved(d);
      for (std::size_t i = 0; i < d; ++i) moved[i] = x[i] - config.schedule.alpha(n) * g[i];
      x = project(set, moved);
    } else {
      apply_coupled_update(x, y, g, config.schedule.alpha(n), config.schedule.beta(n), set,
                           config.use_post_update_y);
    }
    trace.max_y_norm = std::max(trace.max_y_norm, norm2(y));
    time_sum.add(config.schedule.alpha(n));
    t = time_sum.value();
  }
  trace.final_n = N;
  trace.final_t = t;
  trace.final_x = std::move(x);
  trace.final_y = std::move(y);
  return trace;
}

// ---------------------------------------------------------------------------
// Continuous-time interpolation of the recorded iterates.
// ---------------------------------------------------------------------------

struct InterpolationResult {
  Vec x;
  bool exact = false;  // true when the trace was recorded at stride 1
};

/// Piecewise-linear interpolation x(t) between recorded iterates. With
/// stride 1 this is the exact interpolation of the discrete sequence; larger
/// strides interpolate between recorded iterates and flag the approximation.
inline InterpolationResult interpolate(const IterateTrace& trace, double t) {
  if (trace.records.empty()) throw RangeError("interpolate: empty trace");
  const double t_max = trace.records.back().t;
  if (t < 0.0 || t > t_max) throw RangeError("interpolate: t outside the recorded horizon");
  InterpolationResult out;
  out.exact = trace.config.stride == 1;
  std::size_t lo = 0, hi = trace.records.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (trace.records[mid].t <= t)
      lo = mid;
    else
      hi = mid;
  }
  const TraceRecord& r0 = trace.records[lo];
  if (trace.records.size() == 1 || t <= r0.t) {
    out.x = r0.x;
    return out;
  }
  const TraceRecord& r1 = trace.records[hi];
  const double span = r1.t - r0.t;
  const double w = span > 0 ? (t - r0.t) / span : 0.0;
  out.x.resize(r0.x.size());
  for (std::size_t i = 0; i < out.x.size(); ++i) out.x[i] = r0.x[i] + w * (r1.x[i] - r0.x[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Weighted-noise summability diagnostic.
// ---------------------------------------------------------------------------

/// For anchors n at 10%, 50% and 90% of the horizon, returns
/// max_{n <= k <= tau(n,T)} || sum_{m=n}^{k} alpha(m) Mhat_{m+1} ||, where
/// Mhat is the estimator residual g - y centered over the window and
/// tau(n,T) = min{ m >= n : sum_{k=n}^{m+1} alpha(k) >= T }. Requires a trace
/// recorded with per-step residuals.
inline std::array<double, 3> noise_summability_diagnostic(const IterateTrace& trace,
                                                          const StepSchedule& sched,
                                                          double T = 1.0) {
  const long N = static_cast<long>(trace.residuals.size());
  if (N == 0) {
    if (trace.final_n > 0)
      throw ConfigError("noise_summability_diagnostic: trace lacks per-step residuals");
    return {0.0, 0.0, 0.0};
  }
  std::array<double, 3> out{0.0, 0.0, 0.0};
  if (T <= 0.0) return out;  // empty window
  const std::array<long, 3> anchors = {N / 10, N / 2, (9 * N) / 10};
  const std::size_t d = trace.residuals.front().size();
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const long n = std::min(anchors[a], N - 1);
    // tau(n,T) = min{ m >= n : sum_{k=n}^{m+1} alpha(k) >= T }, capped at the
    // recorded horizon.
    long j = n;
    double acc = sched.alpha(n);
    while (j + 1 < N && acc < T) {
      ++j;
      acc += sched.alpha(j);
    }
    const long tau = std::max(n, j - 1);
    Vec mean = zeros(d);
    for (long m = n; m <= tau; ++m)
      for (std::size_t i = 0; i < d; ++i) mean[i] += trace.residuals[static_cast<std::size_t>(m)][i];
    const double count = static_cast<double>(tau - n + 1);
    for (std::size_t i = 0; i < d; ++i) mean[i] /= count;
    Vec partial = zeros(d);
    double worst = 0.0;
    for (long m = n; m <= tau; ++m) {
      const double alpha = sched.alpha(m);
      for (std::size_t i = 0; i < d; ++i)
        partial[i] += alpha * (trace.residuals[static_cast<std::size_t>(m)][i] - mean[i]);
      worst = std::max(worst, norm2(partial));
    }
    out[a] = worst;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trace serialization: CSV plus a human-readable metadata sidecar.
// ---------------------------------------------------------------------------

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace detail

inline std::string trace_csv_header(int dim) {
  std::string h = "n,t";
  for (int i = 0; i < dim; ++i) h += ",x_" + std::to_string(i);
  for (int i = 0; i < dim; ++i) h += ",y_" + std::to_string(i);
  h += ",gap,track_err,f";
  return h;
}

inline std::string trace_to_csv(const IterateTrace& trace) {
  std::string out = trace_csv_header(trace.dim);
  out += '\n';
  for (const TraceRecord& r : trace.records) {
    out += std::to_string(r.n);
    out += ',';
    detail::append_double(out, r.t);
    for (double v : r.x) {
      out += ',';
      detail::append_double(out, v);
    }
    for (double v : r.y) {
      out += ',';
      detail::append_double(out, v);
    }
    out += ',';
    detail::append_double(out, r.gap);
    out += ',';
    if (r.track_err) detail::append_double(out, *r.track_err);
    out += ',';
    detail::append_double(out, r.f_clean);
    out += '\n';
  }
  return out;
}

inline std::string trace_metadata(const IterateTrace& trace) {
  std::string out;
  auto kv = [&out](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  auto kvd = [&](const std::string& k, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    kv(k, buf);
  };
  kv("problem", trace.problem_name);
  kv("constraint", trace.constraint_name);
  kv("dim", std::to_string(trace.dim));
  kv("iterations", std::to_string(trace.config.iterations));
  kv("seed", std::to_string(trace.config.seed));
  kv("stride", std::to_string(trace.config.stride));
  kv("probe_stride", std::to_string(trace.config.probe_stride));
  kv("baseline", trace.config.baseline ? "true" : "false");
  kvd("lambda", trace.config.lambda);
  kvd("schedule_a", trace.config.schedule.a);
  kvd("schedule_p", trace.config.schedule.p);
  kvd("schedule_b", trace.config.schedule.b);
  kvd("schedule_q", trace.config.schedule.q);
  kv("schedule_offset", std::to_string(trace.config.schedule.offset));
  kvd("gap_activity_tol", trace.config.gap_activity_tol);
  kvd("max_y_norm", trace.max_y_norm);
  kvd("final_t", trace.final_t);
  return out;
}

}  // namespace zoss
