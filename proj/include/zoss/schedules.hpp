#pragma once

#include <cmath>
#include <string>

#include "zoss/common.hpp"

namespace zoss {

/// Power-law Robbins-Monro pair: alpha(n) = a/(n+1+s)^p on the slow timescale
/// and beta(n) = b/(n+1+s)^q on the fast one. The exponent window
/// 0.5 < q < p <= 1 certifies the divergent-sum / square-summable / vanishing
/// ratio conditions analytically.
struct StepSchedule {
  double a = 0.9;
  double p = 1.0;
  double b = 0.9;
  double q = 0.6;
  long offset = 0;

  double alpha(long n) const { return a / std::pow(static_cast<double>(n + 1 + offset), p); }
  double beta(long n) const { return b / std::pow(static_cast<double>(n + 1 + offset), q); }
};

struct StepPair {
  double alpha;
  double beta;
};

inline StepPair step_values(const StepSchedule& sched, long n) {
  return StepPair{sched.alpha(n), sched.beta(n)};
}

struct ScheduleReport {
  double ratio_tail = 0.0;      // alpha(N)/beta(N) at the horizon
  double sq_partial_sum = 0.0;  // sum_{n<=N} (alpha^2 + beta^2)
  double sum_alpha = 0.0;
  double sum_beta = 0.0;
  bool monotone_ok = false;
};

struct InvalidScheduleError : ConfigError {
  std::string clause;  // which step-size condition fails, e.g. "(e)"
  InvalidScheduleError(std::string clause_, const std::string& msg)
      : ConfigError(msg), clause(std::move(clause_)) {}
};

/// Checks the step-size conditions. The infinite-sum conditions are certified
/// by the exponent constraints; the prefix quantities are reported for
/// inspection. Throws InvalidScheduleError naming the violated clause.
inline ScheduleReport validate(const StepSchedule& sched, long horizon) {
  if (horizon < 1000) throw ConfigError("validate: horizon must be at least 1e3");
  if (sched.offset < 0) throw ConfigError("validate: negative offset");
  if (!(sched.a > 0.0 && sched.a < 1.0))
    throw InvalidScheduleError("(a)", "schedule clause (a): requires 0 < a < 1 so that alpha(0) < 1");
  if (!(sched.b > 0.0 && sched.b < 1.0))
    throw InvalidScheduleError("(b)", "schedule clause (b): requires 0 < b < 1 so that beta(0) < 1");
  if (sched.p > 1.0)
    throw InvalidScheduleError("(c)",
                               "schedule clause (c): p > 1 makes the alpha series summable, not divergent");
  if (sched.q <= 0.5)
    throw InvalidScheduleError("(d)", "schedule clause (d): q <= 0.5 makes sum beta(n)^2 diverge");
  if (sched.p <= sched.q)
    throw InvalidScheduleError("(e)", "schedule clause (e): p <= q, the ratio alpha(n)/beta(n) does not vanish");

  ScheduleReport report;
  KahanSum sq, sa, sb;
  bool monotone = true;
  double prev_alpha = std::numeric_limits<double>::infinity();
  double prev_beta = std::numeric_limits<double>::infinity();
  for (long n = 0; n <= horizon; ++n) {
    const double alpha = sched.alpha(n);
    const double beta = sched.beta(n);
    if (!(alpha < prev_alpha) || !(beta < prev_beta)) monotone = false;
    prev_alpha = alpha;
    prev_beta = beta;
    sq.add(alpha * alpha + beta * beta);
    sa.add(alpha);
    sb.add(beta);
  }
  report.ratio_tail = sched.alpha(horizon) / sched.beta(horizon);
  report.sq_partial_sum = sq.value();
  report.sum_alpha = sa.value();
  report.sum_beta = sb.value();
  report.monotone_ok = monotone;
  return report;
}

}  // namespace zoss
