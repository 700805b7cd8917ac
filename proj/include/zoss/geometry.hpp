#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zoss/common.hpp"
#include "zoss/rng.hpp"

namespace zoss {

// ---------------------------------------------------------------------------
// Compact convex constraint sets: axis-aligned box, Euclidean ball, scaled
// probability simplex {x >= 0, sum x_i = s}.
// ---------------------------------------------------------------------------

struct ConstraintSet {
  enum class Kind { box, ball, simplex };

  Kind kind = Kind::box;
  int dim = 0;
  Vec lower, upper;  // box
  Vec center;        // ball
  double radius = 0; // ball
  double scale = 0;  // simplex

  static ConstraintSet box(Vec lo, Vec hi) {
    if (lo.size() != hi.size() || lo.empty()) throw ConfigError("box: bound dimensions mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i])) throw ConfigError("box: lower must be strictly below upper");
    ConstraintSet s;
    s.kind = Kind::box;
    s.dim = static_cast<int>(lo.size());
    s.lower = std::move(lo);
    s.upper = std::move(hi);
    return s;
  }

  static ConstraintSet cube(int dim, double lo, double hi) {
    return box(constant(static_cast<std::size_t>(dim), lo), constant(static_cast<std::size_t>(dim), hi));
  }

  static ConstraintSet ball(Vec c, double r) {
    if (c.empty()) throw ConfigError("ball: empty center");
    if (!(r > 0)) throw ConfigError("ball: radius must be positive");
    ConstraintSet s;
    s.kind = Kind::ball;
    s.dim = static_cast<int>(c.size());
    s.center = std::move(c);
    s.radius = r;
    return s;
  }

  static ConstraintSet simplex(int dim, double scale) {
    if (dim < 1) throw ConfigError("simplex: dimension must be positive");
    if (!(scale > 0)) throw ConfigError("simplex: scale must be positive");
    ConstraintSet s;
    s.kind = Kind::simplex;
    s.dim = dim;
    s.scale = scale;
    return s;
  }

  double diameter() const {
    switch (kind) {
      case Kind::box:
        return dist2(upper, lower);
      case Kind::ball:
        return 2.0 * radius;
      case Kind::simplex:
        return scale * std::sqrt(2.0);
    }
    return 0.0;
  }

  const char* kind_name() const {
    switch (kind) {
      case Kind::box: return "box";
      case Kind::ball: return "ball";
      case Kind::simplex: return "simplex";
    }
    return "?";
  }
};

// Feasibility tolerance for "x in X" preconditions. Iterates produced by
// project() are exactly feasible, so this only guards external inputs.
inline constexpr double kFeasibilityTol = 1e-9;

inline Vec project(const ConstraintSet& set, const Vec& p) {
  require_finite(p, "project");
  if (static_cast<int>(p.size()) != set.dim) throw InputDomainError("project: dimension mismatch");
  switch (set.kind) {
    case ConstraintSet::Kind::box: {
      Vec z(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) z[i] = std::min(set.upper[i], std::max(set.lower[i], p[i]));
      return z;
    }
    case ConstraintSet::Kind::ball: {
      Vec d = sub(p, set.center);
      const double n = norm2(d);
      if (n <= set.radius) return p;
      return axpy(set.center, set.radius / n, d);
    }
    case ConstraintSet::Kind::simplex: {
      // Sort-based projection onto {x >= 0, sum x = s}.
      Vec u = p;
      std::sort(u.begin(), u.end(), std::greater<double>());
      double cssv = 0.0;
      double tau = 0.0;
      int rho = 0;
      double running = 0.0;
      for (std::size_t j = 0; j < u.size(); ++j) {
        running += u[j];
        const double t = (running - set.scale) / static_cast<double>(j + 1);
        if (u[j] - t > 0) {
          rho = static_cast<int>(j + 1);
          cssv = running;
        }
      }
      tau = (cssv - set.scale) / static_cast<double>(rho);
      Vec z(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) z[i] = std::max(p[i] - tau, 0.0);
      return z;
    }
  }
  throw InternalError("project: unknown set kind");
}

inline double feasibility_distance(const ConstraintSet& set, const Vec& x) {
  return dist2(x, project(set, x));
}

inline bool contains(const ConstraintSet& set, const Vec& x, double tol = kFeasibilityTol) {
  return feasibility_distance(set, x) <= tol;
}

inline void require_feasible(const ConstraintSet& set, const Vec& x, const char* what) {
  if (!contains(set, x)) throw InputDomainError(std::string(what) + ": point not in constraint set");
}

/// Projection onto the tangent cone T_X(x). Supported for box and ball; the
/// simplex would need face enumeration, which the gap measure avoids on
/// purpose (it only needs project()).
inline Vec tangent_project(const ConstraintSet& set, const Vec& x, const Vec& v) {
  require_finite(v, "tangent_project");
  require_feasible(set, x, "tangent_project");
  switch (set.kind) {
    case ConstraintSet::Kind::box: {
      Vec t(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) {
        const bool at_lower = x[i] - set.lower[i] <= kFeasibilityTol;
        const bool at_upper = set.upper[i] - x[i] <= kFeasibilityTol;
        double ti = v[i];
        if (at_lower) ti = std::max(ti, 0.0);
        if (at_upper) ti = std::min(ti, 0.0);
        t[i] = ti;
      }
      return t;
    }
    case ConstraintSet::Kind::ball: {
      Vec d = sub(x, set.center);
      const double n = norm2(d);
      if (n < set.radius - kFeasibilityTol) return v;  // interior
      Vec unit = scaled(d, 1.0 / n);
      const double radial = dot(v, unit);
      if (radial <= 0) return v;
      return axpy(v, -radial, unit);
    }
    case ConstraintSet::Kind::simplex:
      throw UnsupportedOperationError("tangent_project: not supported for simplex sets");
  }
  throw InternalError("tangent_project: unknown set kind");
}

/// Projection onto the normal cone N_X(x), via Moreau: v = P_T(v) + P_N(v).
inline Vec normal_project(const ConstraintSet& set, const Vec& x, const Vec& v) {
  return sub(v, tangent_project(set, x, v));
}

struct MoreauCheck {
  double residual;  // || v - P_T(v) - P_N(v) ||
  double inner;     // < P_T(v), P_N(v) >
};

inline MoreauCheck moreau_check(const ConstraintSet& set, const Vec& x, const Vec& v) {
  const Vec t = tangent_project(set, x, v);
  const Vec n = normal_project(set, x, v);
  Vec r = v;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= t[i] + n[i];
  return MoreauCheck{norm2(r), dot(t, n)};
}

inline Vec sample_uniform(const ConstraintSet& set, RandomStream& rng) {
  switch (set.kind) {
    case ConstraintSet::Kind::box: {
      Vec x(static_cast<std::size_t>(set.dim));
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(set.lower[i], set.upper[i]);
      return x;
    }
    case ConstraintSet::Kind::ball: {
      Vec dir = rng.normal_vec(static_cast<std::size_t>(set.dim));
      const double n = norm2(dir);
      const double r = set.radius * std::pow(rng.uniform(), 1.0 / set.dim);
      return axpy(set.center, r / n, dir);
    }
    case ConstraintSet::Kind::simplex: {
      Vec e(static_cast<std::size_t>(set.dim));
      double total = 0.0;
      for (double& v : e) {
        v = -std::log(rng.uniform());
        total += v;
      }
      return scaled(e, set.scale / total);
    }
  }
  throw InternalError("sample_uniform: unknown set kind");
}

// ---------------------------------------------------------------------------
// Minimization of a function over the convex hull of a small vertex list.
// Closed form for 1 vertex, coarse scan + golden section for 2, simplex-grid
// search (>= 1e4 weight samples) with pairwise-exchange refinement for 3..8.
// Avoiding a QP solver keeps the numerics auditable; catalog hulls are tiny.
// ---------------------------------------------------------------------------

struct HullMinimum {
  double value = 0.0;
  Vec weights;  // convex weights over the vertices
  Vec point;    // the hull element attaining the minimum
};

namespace detail {

inline Vec hull_combine(const std::vector<Vec>& vertices, const Vec& w) {
  Vec g = zeros(vertices.front().size());
  for (std::size_t k = 0; k < vertices.size(); ++k)
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += w[k] * vertices[k][i];
  return g;
}

inline int grid_subdivisions(std::size_t k) {
  // Smallest m with C(m+k-1, k-1) >= 1e4 weight samples.
  switch (k) {
    case 3: return 140;
    case 4: return 38;
    case 5: return 20;
    case 6: return 14;
    case 7: return 11;
    default: return 9;  // k == 8
  }
}

inline void enumerate_compositions(int m, std::size_t parts, Vec& w, std::size_t idx,
                                   const std::function<void(const Vec&)>& visit) {
  if (idx + 1 == parts) {
    w[idx] = static_cast<double>(m);
    visit(w);
    return;
  }
  for (int c = 0; c <= m; ++c) {
    w[idx] = static_cast<double>(c);
    enumerate_compositions(m - c, parts, w, idx + 1, visit);
  }
}

}  // namespace detail

/// Minimizes `objective(g)` over g in conv(vertices). `objective` must be
/// continuous; the supported hull sizes are 1..8 vertices.
inline HullMinimum minimize_over_hull(const std::vector<Vec>& vertices,
                                      const std::function<double(const Vec&)>& objective) {
  if (vertices.empty()) throw InternalError("minimize_over_hull: empty hull");
  if (vertices.size() > 8)
    throw UnsupportedOperationError("minimize_over_hull: more than 8 hull vertices");
  const std::size_t k = vertices.size();

  if (k == 1) {
    HullMinimum m;
    m.weights = {1.0};
    m.point = vertices[0];
    m.value = objective(m.point);
    return m;
  }

  if (k == 2) {
    auto eval = [&](double theta) {
      Vec g(vertices[0].size());
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = (1.0 - theta) * vertices[0][i] + theta * vertices[1][i];
      return std::make_pair(objective(g), std::move(g));
    };
    // Coarse scan to bracket the minimum, then golden section inside it.
    const int scan = 64;
    double best_theta = 0.0;
    double best_val = eval(0.0).first;
    for (int i = 1; i <= scan; ++i) {
      const double theta = static_cast<double>(i) / scan;
      const double val = eval(theta).first;
      if (val < best_val) {
        best_val = val;
        best_theta = theta;
      }
    }
    double lo = std::max(0.0, best_theta - 1.0 / scan);
    double hi = std::min(1.0, best_theta + 1.0 / scan);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - invphi * (hi - lo);
    double d = lo + invphi * (hi - lo);
    double fc = eval(c).first;
    double fd = eval(d).first;
    for (int it = 0; it < 120 && hi - lo > 1e-14; ++it) {
      if (fc < fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - invphi * (hi - lo);
        fc = eval(c).first;
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + invphi * (hi - lo);
        fd = eval(d).first;
      }
    }
    double theta = (fc < fd) ? c : d;
    if (eval(theta).first > best_val) theta = best_theta;  // plateau guard
    auto refined = eval(theta);
    HullMinimum m;
    m.value = refined.first;
    m.weights = {1.0 - theta, theta};
    m.point = std::move(refined.second);
    return m;
  }

  // k in 3..8: grid over the weight simplex, then pairwise-exchange descent.
  const int m_sub = detail::grid_subdivisions(k);
  Vec counts(k, 0.0);
  Vec best_w;
  double best_val = std::numeric_limits<double>::infinity();
  detail::enumerate_compositions(m_sub, k, counts, 0, [&](const Vec& c) {
    Vec w = scaled(c, 1.0 / m_sub);
    const double val = objective(detail::hull_combine(vertices, w));
    if (val < best_val) {
      best_val = val;
      best_w = std::move(w);
    }
  });

  double step = 1.0 / m_sub;
  while (step > 1e-10) {
    bool improved = false;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (i == j || best_w[j] < step) continue;
        Vec w = best_w;
        w[i] += step;
        w[j] -= step;
        const double val = objective(detail::hull_combine(vertices, w));
        if (val < best_val - 1e-15) {
          best_val = val;
          best_w = std::move(w);
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }

  HullMinimum m;
  m.value = best_val;
  m.weights = best_w;
  m.point = detail::hull_combine(vertices, best_w);
  return m;
}

/// Euclidean distance from `p` to conv(vertices), with the attaining point.
inline HullMinimum distance_to_hull(const Vec& p, const std::vector<Vec>& vertices) {
  if (vertices.size() == 2) {
    // Exact segment projection.
    const Vec e = sub(vertices[1], vertices[0]);
    const double ee = dot(e, e);
    double t = ee > 0 ? dot(sub(p, vertices[0]), e) / ee : 0.0;
    t = std::min(1.0, std::max(0.0, t));
    HullMinimum m;
    m.weights = {1.0 - t, t};
    m.point = axpy(vertices[0], t, e);
    m.value = dist2(p, m.point);
    return m;
  }
  return minimize_over_hull(vertices, [&](const Vec& g) { return dist2(p, g); });
}

struct GapResult {
  double gap = 0.0;
  Vec witness_subgradient;
  Vec witness_weights;
};

/// Clarke stationarity measured as the unit-step projected fixed-point
/// residual min_{g in conv(hull)} ||x - P_X(x - g)||. Zero exactly on the
/// stationary set S for the supported convex sets.
inline GapResult stationarity_gap_from_hull(const ConstraintSet& set, const Vec& x,
                                            const std::vector<Vec>& hull) {
  require_feasible(set, x, "stationarity_gap");
  if (hull.empty()) throw InternalError("stationarity_gap: empty Clarke hull");
  if (hull.size() > 8)
    throw UnsupportedOperationError("stationarity_gap: hull has more than 8 vertices");
  auto residual = [&](const Vec& g) {
    Vec step(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) step[i] = x[i] - g[i];
    return dist2(x, project(set, step));
  };
  const HullMinimum m = minimize_over_hull(hull, residual);
  GapResult r;
  r.gap = m.value;
  r.witness_subgradient = m.point;
  r.witness_weights = m.weights;
  return r;
}

}  // namespace zoss
