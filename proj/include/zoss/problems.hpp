#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zoss/common.hpp"
#include "zoss/geometry.hpp"
#include "zoss/rng.hpp"

namespace zoss {

// ---------------------------------------------------------------------------
// Noisy-oracle objectives with ground-truth metadata: a Lipschitz constant,
// a uniform subgradient bound on the feasible set, a Clarke-hull oracle and
// (where known analytically) the stationary set of the paired constraint.
// ---------------------------------------------------------------------------

struct NoiseModel {
  enum class Kind { none, gaussian };
  Kind kind = Kind::none;
  double sigma = 0.0;
  double variance_bound = 0.0;  // sigma^2 <= variance_bound

  static NoiseModel none() { return NoiseModel{}; }
  static NoiseModel gaussian(double sigma) {
    if (sigma < 0) throw ConfigError("noise: sigma must be nonnegative");
    NoiseModel n;
    n.kind = sigma == 0.0 ? Kind::none : Kind::gaussian;
    n.sigma = sigma;
    n.variance_bound = sigma * sigma;
    return n;
  }

  double draw(RandomStream& rng) const {
    return kind == Kind::gaussian ? sigma * rng.normal() : 0.0;
  }
};

/// Description of a known stationary set: a finite list of certified members
/// plus a distance function covering the whole set (which may be infinite,
/// e.g. a sphere).
struct StationarySet {
  std::vector<Vec> points;
  std::function<double(const Vec&)> distance_fn;

  double distance(const Vec& x) const { return distance_fn(x); }
};

struct ObjectiveProblem {
  std::string name;
  int dim = 0;
  std::function<double(const Vec&)> eval_clean;
  NoiseModel noise;
  double lipschitz_L = 0.0;    // valid on the inflated evaluation region (see docs)
  double subgrad_bound_G = 0;  // uniform bound on ||g||, g in the Clarke hull, x in X
  std::function<std::vector<Vec>(const Vec&, double)> clarke_hull;
  std::optional<StationarySet> known_stationary_set;
};

inline double evaluate_noisy(const ObjectiveProblem& problem, const Vec& x, RandomStream& rng) {
  require_finite(x, "evaluate_noisy");
  if (static_cast<int>(x.size()) != problem.dim)
    throw InputDomainError("evaluate_noisy: dimension mismatch");
  const double f = problem.eval_clean(x);
  if (!std::isfinite(f)) throw EvaluationError("evaluate_noisy: non-finite objective value");
  return f + problem.noise.draw(rng);
}

/// Vertex list whose convex hull equals the Clarke subdifferential at x.
/// Pieces whose value lies within `tol` (absolute function-value units) of the
/// max/kink are marked active; tol = 0 resolves exact kinks only.
inline std::vector<Vec> clarke_hull_at(const ObjectiveProblem& problem, const Vec& x, double tol) {
  if (tol < 0) throw InputDomainError("clarke_hull_at: negative tolerance");
  return problem.clarke_hull(x, tol);
}

inline GapResult stationarity_gap(const ConstraintSet& set, const ObjectiveProblem& problem,
                                  const Vec& x, double tol) {
  return stationarity_gap_from_hull(set, x, clarke_hull_at(problem, x, tol));
}

namespace detail {

// Enumerates the Cartesian product of per-coordinate gradient choices, used
// by the separable |.| families. `choices[i]` holds 1 or 2 values.
inline std::vector<Vec> enumerate_sign_hull(const std::vector<std::vector<double>>& choices) {
  std::size_t count = 1;
  for (const auto& c : choices) {
    count *= c.size();
    if (count > 256)
      throw UnsupportedOperationError("clarke_hull: too many simultaneous kinks to enumerate");
  }
  std::vector<Vec> vertices;
  vertices.reserve(count);
  Vec current(choices.size());
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == choices.size()) {
      vertices.push_back(current);
      return;
    }
    for (double v : choices[i]) {
      current[i] = v;
      rec(i + 1);
    }
  };
  rec(0);
  return vertices;
}

inline StationarySet grid_stationary_set(int dim, const std::vector<double>& levels) {
  StationarySet s;
  if (dim <= 6) {
    std::vector<Vec> pts;
    Vec cur(static_cast<std::size_t>(dim));
    std::function<void(int)> rec = [&](int i) {
      if (i == dim) {
        pts.push_back(cur);
        return;
      }
      for (double v : levels) {
        cur[static_cast<std::size_t>(i)] = v;
        rec(i + 1);
      }
    };
    rec(0);
    s.points = std::move(pts);
  }
  s.distance_fn = [levels, dim](const Vec& x) {
    double sq = 0.0;
    for (int i = 0; i < dim; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double v : levels) best = std::min(best, std::abs(x[static_cast<std::size_t>(i)] - v));
      sq += best * best;
    }
    return std::sqrt(sq);
  };
  return s;
}

}  // namespace detail

// --------------------------------------------------------------------------
// ABS: f(x) = sum_i |x_i| on the box [-1,1]^d. Convex; S = {0}.
// --------------------------------------------------------------------------
inline ObjectiveProblem make_abs(int dim, double sigma = 0.0) {
  if (dim < 1) throw ConfigError("ABS: dimension must be positive");
  ObjectiveProblem p;
  p.name = "ABS";
  p.dim = dim;
  p.eval_clean = [](const Vec& x) {
    double s = 0.0;
    for (double v : x) s += std::abs(v);
    return s;
  };
  p.noise = NoiseModel::gaussian(sigma);
  p.lipschitz_L = std::sqrt(static_cast<double>(dim));
  p.subgrad_bound_G = std::sqrt(static_cast<double>(dim));
  p.clarke_hull = [](const Vec& x, double tol) {
    std::vector<std::vector<double>> choices(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (2.0 * std::abs(x[i]) <= tol)
        choices[i] = {-1.0, 1.0};
      else
        choices[i] = {x[i] > 0 ? 1.0 : -1.0};
    }
    return detail::enumerate_sign_hull(choices);
  };
  StationarySet s;
  s.points = {zeros(static_cast<std::size_t>(dim))};
  s.distance_fn = [](const Vec& x) { return norm2(x); };
  p.known_stationary_set = std::move(s);
  return p;
}

// --------------------------------------------------------------------------
// NEGABS: f(x) = -sum_i |x_i| on the box [-1,1]^d. Concave, so every interior
// kink is a local max; S is the grid {-1,0,1}^d (hull at 0 is still [-1,1]).
// --------------------------------------------------------------------------
inline ObjectiveProblem make_negabs(int dim, double sigma = 0.0) {
  if (dim < 1) throw ConfigError("NEGABS: dimension must be positive");
  ObjectiveProblem p;
  p.name = "NEGABS";
  p.dim = dim;
  p.eval_clean = [](const Vec& x) {
    double s = 0.0;
    for (double v : x) s += std::abs(v);
    return -s;
  };
  p.noise = NoiseModel::gaussian(sigma);
  p.lipschitz_L = std::sqrt(static_cast<double>(dim));
  p.subgrad_bound_G = std::sqrt(static_cast<double>(dim));
  p.clarke_hull = [](const Vec& x, double tol) {
    std::vector<std::vector<double>> choices(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (2.0 * std::abs(x[i]) <= tol)
        choices[i] = {-1.0, 1.0};
      else
        choices[i] = {x[i] > 0 ? -1.0 : 1.0};
    }
    return detail::enumerate_sign_hull(choices);
  };
  p.known_stationary_set = detail::grid_stationary_set(dim, {-1.0, 0.0, 1.0});
  return p;
}

// --------------------------------------------------------------------------
// DOUBLEWELL: f(x) = | ||x||^2 - 1 | on the box [-2,2]^d. Nonconvex with a
// kink on the unit sphere; S = {0} union (unit sphere).
// --------------------------------------------------------------------------
inline ObjectiveProblem make_doublewell(int dim, double sigma = 0.0) {
  if (dim < 1) throw ConfigError("DOUBLEWELL: dimension must be positive");
  ObjectiveProblem p;
  p.name = "DOUBLEWELL";
  p.dim = dim;
  p.eval_clean = [](const Vec& x) { return std::abs(norm2_sq(x) - 1.0); };
  p.noise = NoiseModel::gaussian(sigma);
  // Gradient norm is 2||x||; the constant below covers the box inflated by
  // the Gaussian smoothing excursions (lambda <= 0.5).
  p.lipschitz_L = 2.0 * (2.0 * std::sqrt(static_cast<double>(dim)) + 6.0);
  p.subgrad_bound_G = 4.0 * std::sqrt(static_cast<double>(dim));
  p.clarke_hull = [](const Vec& x, double tol) {
    const double levelset = norm2_sq(x) - 1.0;
    std::vector<Vec> vertices;
    if (2.0 * std::abs(levelset) <= tol) {
      vertices.push_back(scaled(x, 2.0));
      vertices.push_back(scaled(x, -2.0));
    } else {
      vertices.push_back(scaled(x, levelset > 0 ? 2.0 : -2.0));
    }
    return vertices;
  };
  StationarySet s;
  s.points = {zeros(static_cast<std::size_t>(dim))};
  for (int i = 0; i < dim; ++i) {
    Vec e = zeros(static_cast<std::size_t>(dim));
    e[static_cast<std::size_t>(i)] = 1.0;
    s.points.push_back(e);
    e[static_cast<std::size_t>(i)] = -1.0;
    s.points.push_back(e);
  }
  s.distance_fn = [](const Vec& x) {
    const double r = norm2(x);
    return std::min(r, std::abs(r - 1.0));
  };
  p.known_stationary_set = std::move(s);
  return p;
}

// --------------------------------------------------------------------------
// FINITEMAX: f(x) = max_i (a_i^T x + 0.5 x^T Q_i x), three pieces in d=2 with
// indefinite Q_i, on the box [-1,1]^2. Coefficients are fixed constants
// (generated once from seed 7001, see README).
// --------------------------------------------------------------------------
namespace finitemax_data {
inline constexpr int kPieces = 3;
inline constexpr int kDim = 2;
inline constexpr double kA[kPieces][kDim] = {
    {-0.02, -0.16},
    {0.67, 0.50},
    {-0.73, 0.14},
};
inline constexpr double kQ[kPieces][kDim][kDim] = {
    {{0.21, -0.66}, {-0.66, 0.82}},
    {{-0.95, 0.28}, {0.28, 0.07}},
    {{-0.07, -0.09}, {-0.09, 0.46}},
};
}  // namespace finitemax_data

inline ObjectiveProblem make_finitemax(double sigma = 0.0) {
  using namespace finitemax_data;
  ObjectiveProblem p;
  p.name = "FINITEMAX";
  p.dim = kDim;
  auto piece_value = [](int i, const Vec& x) {
    double v = 0.0;
    for (int r = 0; r < kDim; ++r) {
      v += kA[i][r] * x[static_cast<std::size_t>(r)];
      double qx = 0.0;
      for (int c = 0; c < kDim; ++c) qx += kQ[i][r][c] * x[static_cast<std::size_t>(c)];
      v += 0.5 * x[static_cast<std::size_t>(r)] * qx;
    }
    return v;
  };
  auto piece_grad = [](int i, const Vec& x) {
    Vec g(kDim);
    for (int r = 0; r < kDim; ++r) {
      g[static_cast<std::size_t>(r)] = kA[i][r];
      for (int c = 0; c < kDim; ++c) g[static_cast<std::size_t>(r)] += kQ[i][r][c] * x[static_cast<std::size_t>(c)];
    }
    return g;
  };
  p.eval_clean = [piece_value](const Vec& x) {
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < kPieces; ++i) m = std::max(m, piece_value(i, x));
    return m;
  };
  p.noise = NoiseModel::gaussian(sigma);
  // Gradients are affine, so norms over a box are maximized at its corners.
  auto max_grad_over_box = [piece_grad](double half_width) {
    double best = 0.0;
    for (int i = 0; i < kPieces; ++i) {
      for (int corner = 0; corner < 4; ++corner) {
        Vec c = {(corner & 1) ? half_width : -half_width, (corner & 2) ? half_width : -half_width};
        best = std::max(best, norm2(piece_grad(i, c)));
      }
    }
    return best;
  };
  p.subgrad_bound_G = max_grad_over_box(1.0);
  p.lipschitz_L = max_grad_over_box(5.0);  // box inflated by smoothing excursions
  p.clarke_hull = [piece_value, piece_grad](const Vec& x, double tol) {
    double m = -std::numeric_limits<double>::infinity();
    std::array<double, kPieces> vals{};
    for (int i = 0; i < kPieces; ++i) {
      vals[static_cast<std::size_t>(i)] = piece_value(i, x);
      m = std::max(m, vals[static_cast<std::size_t>(i)]);
    }
    std::vector<Vec> vertices;
    for (int i = 0; i < kPieces; ++i)
      if (m - vals[static_cast<std::size_t>(i)] <= tol) vertices.push_back(piece_grad(i, x));
    return vertices;
  };
  return p;
}

// --------------------------------------------------------------------------
// NNL1: f(x) = (1/N) sum_j |v_j - a^T tanh(W u_j)| with m=4 hidden units and
// 3 inputs; x = (a, W) has dimension 16, constrained to the ball ||x|| <= 2.
// The 20 synthetic samples are fixed constants (seed 7002, see README).
// --------------------------------------------------------------------------
namespace nnl1_data {
inline constexpr int kHidden = 4;
inline constexpr int kInputs = 3;
inline constexpr int kSamples = 20;
inline constexpr int kDim = kHidden + kHidden * kInputs;  // 16
inline constexpr double kU[kSamples][kInputs] = {
    {1.3809, 1.5555, -0.4239}, {-1.5654, 1.0870, 0.0100},  {-0.5442, 2.1533, -1.7854},
    {-1.1707, 1.3410, 2.0530}, {-0.2052, 0.0565, -0.9567}, {-0.3661, 1.3339, 1.6391},
    {0.0168, -1.6367, 0.3970}, {0.5879, 2.3764, -1.8359},  {1.7916, 0.4454, 0.2856},
    {0.3133, -0.6228, -0.6171}, {-2.0510, -1.6956, 0.3470}, {0.1365, -0.5216, 0.1693},
    {1.4597, 0.0503, -1.0554}, {-0.6536, -0.2444, 0.1732}, {0.1936, 1.1752, -0.9514},
    {0.7766, -0.3018, 1.2633}, {-2.6066, 1.5203, 0.4957},  {0.7907, 0.5373, 0.7337},
    {0.7759, 2.1763, -1.1413}, {2.2772, -0.1555, -0.4309},
};
inline constexpr double kV[kSamples] = {
    -0.4571, -0.0656, -0.5017, 0.3583, -0.0599, 0.4247, 0.2481, -0.4367, 0.1620, 0.0888,
    0.3797,  -0.0377, -0.0415, 0.1382, -0.2113, 0.2757, -0.0336, 0.1568, -0.2926, -0.1356,
};
}  // namespace nnl1_data

inline ObjectiveProblem make_nnl1(double sigma = 0.0) {
  using namespace nnl1_data;
  ObjectiveProblem p;
  p.name = "NNL1";
  p.dim = kDim;
  // Per-sample prediction and residual. Parameter layout: x[0..4) = a,
  // x[4 + 3h + k] = W[h][k].
  auto residual = [](const Vec& x, int j, double* hidden_out) {
    double pred = 0.0;
    for (int h = 0; h < kHidden; ++h) {
      double z = 0.0;
      for (int k = 0; k < kInputs; ++k)
        z += x[static_cast<std::size_t>(kHidden + kInputs * h + k)] * kU[j][k];
      const double t = std::tanh(z);
      if (hidden_out) hidden_out[h] = t;
      pred += x[static_cast<std::size_t>(h)] * t;
    }
    return kV[j] - pred;
  };
  p.eval_clean = [residual](const Vec& x) {
    double s = 0.0;
    for (int j = 0; j < kSamples; ++j) s += std::abs(residual(x, j, nullptr));
    return s / kSamples;
  };
  p.noise = NoiseModel::gaussian(sigma);
  // Per-sample gradient norm is at most sqrt(m + ||a||^2 ||u_j||^2); the
  // bounds below use ||a|| <= 2 on the feasible ball and ||a|| <= 8 on the
  // ball inflated by smoothing excursions.
  auto mean_grad_bound = [](double a_bound) {
    double s = 0.0;
    for (int j = 0; j < kSamples; ++j) {
      double un = 0.0;
      for (int k = 0; k < kInputs; ++k) un += kU[j][k] * kU[j][k];
      s += std::sqrt(kHidden + a_bound * a_bound * un);
    }
    return s / kSamples;
  };
  p.subgrad_bound_G = mean_grad_bound(2.0);
  p.lipschitz_L = mean_grad_bound(8.0);
  // The Clarke hull enumerates both signs for samples whose residual sits on
  // the kink; with the shipped data more than a couple of simultaneous zero
  // residuals do not occur in practice.
  p.clarke_hull = [residual](const Vec& x, double tol) {
    std::array<double, kSamples> res{};
    std::array<std::array<double, kHidden>, kSamples> hidden{};
    std::vector<int> active;
    Vec base = zeros(kDim);
    for (int j = 0; j < kSamples; ++j) {
      res[static_cast<std::size_t>(j)] = residual(x, j, hidden[static_cast<std::size_t>(j)].data());
      if (2.0 * std::abs(res[static_cast<std::size_t>(j)]) <= tol) {
        active.push_back(j);
        continue;
      }
      const double s = res[static_cast<std::size_t>(j)] > 0 ? 1.0 : -1.0;
      for (int h = 0; h < kHidden; ++h) {
        const double t = hidden[static_cast<std::size_t>(j)][static_cast<std::size_t>(h)];
        base[static_cast<std::size_t>(h)] += -s * t / kSamples;
        const double dsig = (1.0 - t * t) * x[static_cast<std::size_t>(h)];
        for (int k = 0; k < kInputs; ++k)
          base[static_cast<std::size_t>(kHidden + kInputs * h + k)] += -s * dsig * kU[j][k] / kSamples;
      }
    }
    if (active.size() > 8)
      throw UnsupportedOperationError("NNL1 clarke_hull: too many simultaneous zero residuals");
    std::vector<Vec> vertices;
    const std::size_t combos = std::size_t{1} << active.size();
    vertices.reserve(combos);
    for (std::size_t mask = 0; mask < combos; ++mask) {
      Vec v = base;
      for (std::size_t a = 0; a < active.size(); ++a) {
        const int j = active[a];
        const double s = (mask >> a) & 1 ? 1.0 : -1.0;
        for (int h = 0; h < kHidden; ++h) {
          const double t = hidden[static_cast<std::size_t>(j)][static_cast<std::size_t>(h)];
          v[static_cast<std::size_t>(h)] += -s * t / kSamples;
          const double dsig = (1.0 - t * t) * x[static_cast<std::size_t>(h)];
          for (int k = 0; k < kInputs; ++k)
            v[static_cast<std::size_t>(kHidden + kInputs * h + k)] += -s * dsig * kU[j][k] / kSamples;
        }
      }
      vertices.push_back(std::move(v));
    }
    return vertices;
  };
  return p;
}

// ---------------------------------------------------------------------------
// Built-in catalog: problem + paired constraint set.
// ---------------------------------------------------------------------------

struct ProblemCatalogEntry {
  ObjectiveProblem problem;
  ConstraintSet constraint;
  std::string description;
};

inline constexpr double kDefaultNoiseSigma = 0.1;

/// Builds a catalog entry by family name with optional dimension / noise
/// overrides. Families: ABS, NEGABS, DOUBLEWELL, FINITEMAX, NNL1.
inline ProblemCatalogEntry make_catalog_entry(const std::string& name,
                                              std::optional<int> dim = std::nullopt,
                                              std::optional<double> sigma = std::nullopt) {
  const double sg = sigma.value_or(kDefaultNoiseSigma);
  if (name == "ABS") {
    const int d = dim.value_or(3);
    return {make_abs(d, sg), ConstraintSet::cube(d, -1.0, 1.0),
            "f(x) = sum |x_i| on [-1,1]^d; convex, S = {0}"};
  }
  if (name == "NEGABS") {
    const int d = dim.value_or(1);
    return {make_negabs(d, sg), ConstraintSet::cube(d, -1.0, 1.0),
            "f(x) = -sum |x_i| on [-1,1]^d; concave, S = {-1,0,1}^d"};
  }
  if (name == "DOUBLEWELL") {
    const int d = dim.value_or(1);
    return {make_doublewell(d, sg), ConstraintSet::cube(d, -2.0, 2.0),
            "f(x) = | ||x||^2 - 1 | on [-2,2]^d; S = {0} + unit sphere"};
  }
  if (name == "FINITEMAX") {
    if (dim && *dim != finitemax_data::kDim)
      throw ConfigError("FINITEMAX: dimension is fixed at 2");
    return {make_finitemax(sg), ConstraintSet::cube(finitemax_data::kDim, -1.0, 1.0),
            "max of 3 quadratic pieces (indefinite Q) on [-1,1]^2"};
  }
  if (name == "NNL1") {
    if (dim && *dim != nnl1_data::kDim) throw ConfigError("NNL1: dimension is fixed at 16");
    return {make_nnl1(sg), ConstraintSet::ball(zeros(nnl1_data::kDim), 2.0),
            "L1 loss of a tanh network (4 hidden units, 20 samples) on ||x|| <= 2"};
  }
  throw ConfigError("unknown problem name: " + name);
}

inline std::vector<ProblemCatalogEntry> builtin_catalog() {
  std::vector<ProblemCatalogEntry> entries;
  for (const char* name : {"ABS", "NEGABS", "DOUBLEWELL", "FINITEMAX", "NNL1"})
    entries.push_back(make_catalog_entry(name));
  return entries;
}

}  // namespace zoss
