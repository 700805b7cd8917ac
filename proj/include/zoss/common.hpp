#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace zoss {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps ConfigError (and subclasses) to exit code 2,
// failed experiment assertions to exit code 1.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InputDomainError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct UnsupportedOperationError : Error {
  using Error::Error;
};

struct InternalError : Error {
  using Error::Error;
};

struct RangeError : Error {
  using Error::Error;
};

struct EvaluationError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Dense vector helpers. Dimensions in this library are small (d <= 16), so a
// plain std::vector<double> with free functions keeps the numerics auditable.
// ---------------------------------------------------------------------------

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm2_sq(const Vec& a) { return dot(a, a); }

inline double dist2(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline Vec zeros(std::size_t d) { return Vec(d, 0.0); }

inline Vec constant(std::size_t d, double value) { return Vec(d, value); }

// a + s*b
inline Vec axpy(const Vec& a, double s, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
  return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec add(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec scaled(const Vec& a, double s) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

inline bool all_finite(const Vec& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

inline void require_finite(const Vec& a, const char* what) {
  if (!all_finite(a)) throw InputDomainError(std::string(what) + ": non-finite input vector");
}

// Compensated (Kahan) accumulator for long partial sums.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

}  // namespace zoss
