#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "zoss/common.hpp"
#include "zoss/geometry.hpp"
#include "zoss/problems.hpp"
#include "zoss/rng.hpp"

namespace zoss {

/// Default activity tolerance (absolute function-value units) used when
/// resolving the Clarke hull at probe points. Exact kinks are resolved at any
/// tolerance; iterates land near, never exactly on, kinks.
inline constexpr double kDefaultActivityTol = 1e-8;

struct SmoothingParams {
  double lambda = 0.05;
  int mc_samples = 10000;   // reference Monte Carlo size for d > 1
  std::uint64_t seed = 1;

  void require_valid() const {
    if (!(lambda > 0)) throw ConfigError("smoothing: lambda must be positive");
    if (mc_samples < 1000) throw ConfigError("smoothing: mc_samples must be >= 1e3 for reference use");
  }
};

/// Draw from the standard d-dimensional normal.
inline Vec sample_direction(int d, RandomStream& rng) {
  if (d < 1) throw InputDomainError("sample_direction: dimension must be positive");
  return rng.normal_vec(static_cast<std::size_t>(d));
}

namespace detail {

struct TwoPointScratch {
  Vec u, shifted;
};

// g = ((F(x + lambda u, z1) - F(x - lambda u, z2)) / (2 lambda)) u, with the
// direction supplied by the caller. Draw order per estimate: direction first
// (when drawn by the caller), then z1, then z2.
inline void two_point_from_direction_into(const ObjectiveProblem& problem, const Vec& x,
                                          double lambda, const Vec& u, RandomStream& rng,
                                          bool noise_free, TwoPointScratch& scratch, Vec& out) {
  scratch.shifted.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) scratch.shifted[i] = x[i] + lambda * u[i];
  double fp = problem.eval_clean(scratch.shifted);
  for (std::size_t i = 0; i < x.size(); ++i) scratch.shifted[i] = x[i] - lambda * u[i];
  double fm = problem.eval_clean(scratch.shifted);
  if (!std::isfinite(fp) || !std::isfinite(fm))
    throw EvaluationError("two_point_estimate: non-finite objective value");
  if (!noise_free) {
    fp += problem.noise.draw(rng);
    fm += problem.noise.draw(rng);
  }
  const double quot = (fp - fm) / (2.0 * lambda);
  out.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = quot * u[i];
}

inline void two_point_into(const ObjectiveProblem& problem, const Vec& x, double lambda,
                           RandomStream& rng, bool noise_free, TwoPointScratch& scratch,
                           Vec& out) {
  scratch.u.resize(x.size());
  rng.fill_normal(scratch.u);
  two_point_from_direction_into(problem, x, lambda, scratch.u, rng, noise_free, scratch, out);
}

}  // namespace detail

/// Single two-point Gaussian-smoothing estimate at x. The probe points
/// x +- lambda U may leave the constraint set; every catalog objective is
/// defined on all of R^d, so no clipping is applied.
inline Vec two_point_estimate(const ObjectiveProblem& problem, const Vec& x,
                              const SmoothingParams& params, RandomStream& rng) {
  if (!(params.lambda > 0)) throw ConfigError("two_point_estimate: lambda must be positive");
  detail::TwoPointScratch scratch;
  Vec out;
  detail::two_point_into(problem, x, params.lambda, rng, false, scratch, out);
  return out;
}

/// Same estimate with the perturbation direction supplied by the caller;
/// only the two noise values are drawn from the stream.
inline Vec two_point_estimate_along(const ObjectiveProblem& problem, const Vec& x, double lambda,
                                    const Vec& u, RandomStream& rng) {
  if (!(lambda > 0)) throw ConfigError("two_point_estimate: lambda must be positive");
  detail::TwoPointScratch scratch;
  Vec out;
  detail::two_point_from_direction_into(problem, x, lambda, u, rng, false, scratch, out);
  return out;
}

namespace detail {

// Adaptive Simpson on [a,b]; the integrands below are piecewise smooth with
// isolated kinks, which the refinement isolates.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double tol,
                               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  // Seed the recursion with uniform panels so symmetric features cannot hide
  // from the first error estimate.
  const int panels = 40;
  double total = 0.0;
  const double h = (b - a) / panels;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * h;
    const double hi = lo + h;
    const double mid = 0.5 * (lo + hi);
    const double flo = f(lo), fmid = f(mid), fhi = f(hi);
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    total += adaptive_simpson(f, lo, hi, flo, fmid, fhi, whole, tol / panels, 28);
  }
  return total;
}

}  // namespace detail

struct SmoothedGradient {
  Vec grad;
  Vec std_err;       // zero for the deterministic quadrature path
  bool monte_carlo = false;
  int samples = 0;
};

/// Independent reference computation of grad f_lambda(x), noise-free by
/// construction. d = 1 uses deterministic quadrature of the two-point
/// integrand (absolute accuracy ~1e-7); d > 1 uses a seeded Monte Carlo
/// average of mc_samples noise-free estimates and reports standard errors.
inline SmoothedGradient reference_smoothed_gradient(const ObjectiveProblem& problem, const Vec& x,
                                                    const SmoothingParams& params) {
  params.require_valid();
  SmoothedGradient out;
  const int d = problem.dim;
  if (d == 1) {
    const double lambda = params.lambda;
    const double inv_sqrt2pi = 0.3989422804014326779;
    auto integrand = [&](double u) {
      const Vec xp = {x[0] + lambda * u};
      const Vec xm = {x[0] - lambda * u};
      const double quot = (problem.eval_clean(xp) - problem.eval_clean(xm)) / (2.0 * lambda);
      return quot * u * inv_sqrt2pi * std::exp(-0.5 * u * u);
    };
    out.grad = {detail::integrate(integrand, -10.0, 10.0, 1e-8)};
    out.std_err = {0.0};
    out.monte_carlo = false;
    return out;
  }
  RandomStream rng(params.seed, 0x5eedULL);  // reference stream salt
  detail::TwoPointScratch scratch;
  Vec g, sum = zeros(static_cast<std::size_t>(d)), sum_sq = zeros(static_cast<std::size_t>(d));
  for (int s = 0; s < params.mc_samples; ++s) {
    detail::two_point_into(problem, x, params.lambda, rng, true, scratch, g);
    for (int i = 0; i < d; ++i) {
      sum[static_cast<std::size_t>(i)] += g[static_cast<std::size_t>(i)];
      sum_sq[static_cast<std::size_t>(i)] += g[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(i)];
    }
  }
  const double n = static_cast<double>(params.mc_samples);
  out.grad = scaled(sum, 1.0 / n);
  out.std_err.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    const double var =
        std::max(0.0, sum_sq[static_cast<std::size_t>(i)] / n - out.grad[static_cast<std::size_t>(i)] * out.grad[static_cast<std::size_t>(i)]);
    out.std_err[static_cast<std::size_t>(i)] = std::sqrt(var / n);
  }
  out.monte_carlo = true;
  out.samples = params.mc_samples;
  return out;
}

/// Empirical decomposition of the estimator at a fixed point: mean over
/// n_reps independent estimates, distance of the mean to the Clarke hull
/// (the bias), and the centered second moment of the fluctuation.
struct EstimateDecomposition {
  Vec estimate;          // first replication
  Vec mean_estimate;     // empirical E[g | x]
  Vec nearest_subgradient;
  double bias_norm = 0.0;
  double bias_std_err = 0.0;          // SE of the mean estimate, scalar form
  double residual_second_moment = 0;  // empirical E || g - mean ||^2
  double second_moment = 0.0;         // empirical E || g ||^2 (uncentered)
  double second_moment_std_err = 0.0;
  int reps = 0;
};

/// Replication r draws from RandomStream(params.seed, r); the split rule
/// makes concurrent evaluation of replications reproducible.
inline EstimateDecomposition decompose_estimate(const ObjectiveProblem& problem, const Vec& x,
                                                const SmoothingParams& params, int n_reps,
                                                bool noise_free = false,
                                                double activity_tol = kDefaultActivityTol) {
  if (n_reps < 1000) throw ConfigError("decompose_estimate: n_reps must be >= 1e3");
  if (!(params.lambda > 0)) throw ConfigError("decompose_estimate: lambda must be positive");
  const std::size_t d = static_cast<std::size_t>(problem.dim);
  Vec sum = zeros(d);
  double sum_sq_norm = 0.0;
  double sum_quad_norm = 0.0;
  EstimateDecomposition out;
  detail::TwoPointScratch scratch;
  Vec g;
  for (int r = 0; r < n_reps; ++r) {
    RandomStream rep_rng(params.seed, static_cast<std::uint64_t>(r));
    detail::two_point_into(problem, x, params.lambda, rep_rng, noise_free, scratch, g);
    if (r == 0) out.estimate = g;
    for (std::size_t i = 0; i < d; ++i) sum[i] += g[i];
    const double sq = norm2_sq(g);
    sum_sq_norm += sq;
    sum_quad_norm += sq * sq;
  }
  const double n = static_cast<double>(n_reps);
  out.mean_estimate = scaled(sum, 1.0 / n);
  out.second_moment = sum_sq_norm / n;
  out.second_moment_std_err =
      std::sqrt(std::max(0.0, sum_quad_norm / n - out.second_moment * out.second_moment) / n);
  out.residual_second_moment = std::max(0.0, out.second_moment - norm2_sq(out.mean_estimate));
  out.bias_std_err = std::sqrt(out.residual_second_moment / n);
  const auto hull = clarke_hull_at(problem, x, activity_tol);
  const HullMinimum nearest = distance_to_hull(out.mean_estimate, hull);
  out.bias_norm = nearest.value;
  out.nearest_subgradient = nearest.point;
  out.reps = n_reps;
  return out;
}

/// Second-moment bound 2 L^2 (d^2 + d) + K d / lambda^2, where K is the
/// recorded variance bound (sigma^2) of the noise model. See README for the
/// K-vs-K^2 convention this instantiates.
inline double second_moment_bound(const ObjectiveProblem& problem, double lambda) {
  const double L = problem.lipschitz_L;
  const double d = static_cast<double>(problem.dim);
  return 2.0 * L * L * (d * d + d) + problem.noise.variance_bound * d / (lambda * lambda);
}

}  // namespace zoss
