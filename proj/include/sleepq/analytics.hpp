#pragma once

// Closed forms for the M/G/1 queue with repeated inhomogeneous vacations,
// vacation trigger time and warm-up.
//
// Notation used in comments:
//   L_Tt      = exp(-lambda t_t), probability that vacation mode triggers
//   P_i       = prod_{k<i} L_k(lambda), probability that vacations 1..i-1 saw no arrival
//   S1        = sum_i E[V_i] P_i
//   I_a, I_c  = L_Tt sum_i E[V_i^2] P_i,  L_Tt sum_i E[V_i^3] P_i
//
// A cycle that does not trigger (first arrival before t_t) starts its busy
// period with exactly one customer and no warm-up; a triggered cycle starts
// with the arrivals of the last vacation plus those of the warm-up. The two
// counts are therefore dependent through the trigger event, and the PGF of
// the initial queue is
//   N(z) = (1 - L_Tt) z + L_Tt A(z) exp(-lambda t_w (1 - z)),
//   A(z) = sum_i P_i [L_i(lambda(1-z)) - L_i(lambda)].

#include <cmath>
#include <stdexcept>
#include <string>

#include "dist.hpp"
#include "errors.hpp"
#include "policy.hpp"

namespace sleepq {

inline constexpr double kStabilityMargin = 1e-9;
inline constexpr long kSeriesTermCap = 1'000'000;

/// lambda-dependent aggregates over the vacation sequence of one idle period.
struct VacationSeriesSums {
  double l_tt = 0.0;         // L_Tt(lambda)
  double e_zeta = 0.0;       // E[zeta]
  double e_idle = 0.0;       // E[I] = E[min(t_t, t_f)] + E[total vacation time]
  double i_tilde_mom = 0.0;  // E[N] = lambda (t_w L_Tt + i_tilde_mom)
  double e_vacation = 0.0;   // L_Tt S1, expected total vacation time per cycle
  double i_a = 0.0;          // frames^2
  double i_c = 0.0;          // frames^3
  double i_trig = 0.0;       // E[I 1{t_f > t_t}]
  double i_notrig = 0.0;     // E[I 1{t_f <= t_t}]
  long terms_used = 0;
  double tail_bound = 0.0;
};

struct InitialQueueMoments {
  double e_n = 0.0;
  double e_n2 = 0.0;
  double e_n3 = 0.0;
  double factorial2 = 0.0;  // N''(1) = E[N(N-1)]
  double factorial3 = 0.0;  // N'''(1) = E[N(N-1)(N-2)]
};

struct WaitingMoments {
  double e_w = 0.0;
  double e_w2 = 0.0;
};

struct MarkovBounds {
  double m1_bound = 0.0;  // E[W] / w
  double m2_bound = 0.0;  // E[W^2] / w^2
};

struct QueueMetrics {
  double rho = 0.0;
  double e_n = 0.0, e_n2 = 0.0, e_n3 = 0.0;
  double e_x = 0.0;
  double e_b = 0.0;
  double e_w = 0.0, e_w2 = 0.0;
  double e_t = 0.0;
};

namespace detail {

inline void require_rate(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DomainError("lambda must be finite and > 0");
}

inline double trigger_probability(double lambda, const ProtocolParams& p) {
  return p.never_triggers() ? 0.0 : std::exp(-lambda * p.t_t);
}

// t_t * L_Tt with the t_t = inf convention (0).
inline double trigger_time_weight(double lambda, const ProtocolParams& p) {
  return p.never_triggers() ? 0.0 : p.t_t * std::exp(-lambda * p.t_t);
}

// 1 - L_i(s) without cancellation.
inline double vacation_lst_complement(const SleepWindowScenario& sc, long i, double s) {
  const double m = sleep_mean(sc, i);
  const double c = listen_part(sc, i);
  if (sc.law == WindowLaw::Deterministic) return -std::expm1(-(m + c) * s);
  return (m * s - std::expm1(-c * s)) / (1.0 + m * s);
}

// Calls f(i, w_i) such that sum_i f-contributions equals sum_{i>=1} g(i) P_i for
// any g that is constant from first_repeating_index on. The last call carries
// the closed-form geometric tail weight P_{i0} / (1 - L_{i0}(lambda)).
// Returns the number of calls.
template <class F>
long for_each_vacation(double lambda, const SleepWindowScenario& sc, F&& f) {
  const long i0 = first_repeating_index(sc);
  double survival = 1.0;
  long i = 1;
  for (; i < i0; ++i) {
    if (i > kSeriesTermCap)
      throw std::runtime_error("vacation series: term cap reached at i = " + std::to_string(i) +
                               " with survival " + std::to_string(survival));
    f(i, survival);
    survival *= vacation_lst(sc, i, lambda);
    if (survival == 0.0) return i;
  }
  f(i0, survival / vacation_lst_complement(sc, i0, lambda));
  return i0;
}

inline double stable_rho(double lambda, const ServiceDistribution& d) {
  require_rate(lambda);
  const double rho = lambda * d.m1();
  if (rho > 1.0 - kStabilityMargin) throw InstabilityError(rho);
  return rho;
}

}  // namespace detail

/// Load rho = lambda E[sigma]; throws InstabilityError unless rho <= 1 - 1e-9.
inline double load(double lambda, const ServiceDistribution& d) {
  return detail::stable_rho(lambda, d);
}

/// Idle-side series. Stability is not required.
inline VacationSeriesSums series_sums(double lambda, const SleepWindowScenario& sc) {
  detail::require_rate(lambda);
  sc.params.validate();
  VacationSeriesSums out;
  out.l_tt = detail::trigger_probability(lambda, sc.params);
  const double tt_weight = detail::trigger_time_weight(lambda, sc.params);
  const double pre_trigger = -std::expm1(-lambda * sc.params.t_t) / lambda;  // E[min(t_t, t_f)]

  double survival_sum = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  if (out.l_tt > 0.0) {
    out.terms_used = detail::for_each_vacation(lambda, sc, [&](long i, double w) {
      survival_sum += w;
      s1 += w * vacation_moment(sc, i, 1);
      s2 += w * vacation_moment(sc, i, 2);
      s3 += w * vacation_moment(sc, i, 3);
    });
  }
  out.e_zeta = out.l_tt * survival_sum;
  out.e_vacation = out.l_tt * s1;
  out.i_a = out.l_tt * s2;
  out.i_c = out.l_tt * s3;
  out.e_idle = pre_trigger + out.e_vacation;
  out.i_tilde_mom = out.e_idle;
  out.i_trig = tt_weight + out.e_vacation;
  out.i_notrig = pre_trigger - tt_weight;
  out.tail_bound = 0.0;
  return out;
}

/// P(zeta = i).
inline double vacation_count_pmf(double lambda, const SleepWindowScenario& sc, long i) {
  detail::require_rate(lambda);
  if (i < 0) throw DomainError("vacation count must be >= 0");
  const double l_tt = detail::trigger_probability(lambda, sc.params);
  if (i == 0) return 1.0 - l_tt;
  double p = l_tt;
  for (long k = 1; k < i && p > 0.0; ++k) p *= vacation_lst(sc, k, lambda);
  return p * detail::vacation_lst_complement(sc, i, lambda);
}

/// N(z) = E[z^N], N = queue size when the busy period starts. z in [0, 1].
inline double initial_queue_pgf(double lambda, const SleepWindowScenario& sc, double z) {
  detail::require_rate(lambda);
  if (!(z >= 0.0 && z <= 1.0)) throw DomainError("pgf argument z must lie in [0, 1]");
  const double l_tt = detail::trigger_probability(lambda, sc.params);
  if (z == 1.0) return 1.0;
  double last_vacation = 0.0;  // A(z)
  if (l_tt > 0.0) {
    const double s = lambda * (1.0 - z);
    detail::for_each_vacation(lambda, sc, [&](long i, double w) {
      last_vacation += w * (vacation_lst(sc, i, s) - vacation_lst(sc, i, lambda));
    });
  }
  const double warmup = std::exp(-lambda * sc.params.t_w * (1.0 - z));
  return (1.0 - l_tt) * z + l_tt * last_vacation * warmup;
}

inline InitialQueueMoments initial_queue_moments(double lambda, const SleepWindowScenario& sc) {
  const VacationSeriesSums ss = series_sums(lambda, sc);
  const double tw = sc.params.t_w;
  const double l = ss.l_tt;
  InitialQueueMoments m;
  m.e_n = lambda * (tw * l + ss.i_tilde_mom);
  m.factorial2 = lambda * lambda * (ss.i_a + 2.0 * tw * ss.e_vacation + tw * tw * l);
  m.factorial3 = lambda * lambda * lambda *
                 (ss.i_c + 3.0 * tw * ss.i_a + 3.0 * tw * tw * ss.e_vacation + tw * tw * tw * l);
  m.e_n2 = m.factorial2 + m.e_n;
  m.e_n3 = m.factorial3 + 3.0 * m.e_n2 - 2.0 * m.e_n;
  return m;
}

/// Stationary number-in-system PGF, z in [0, 1].
inline double queue_length_pgf(double lambda, const SleepWindowScenario& sc,
                               const ServiceDistribution& d, double z) {
  const double rho = detail::stable_rho(lambda, d);
  if (!(z >= 0.0 && z <= 1.0)) throw DomainError("pgf argument z must lie in [0, 1]");
  if (z == 1.0) return 1.0;
  const double e_n = initial_queue_moments(lambda, sc).e_n;
  const double n_z = initial_queue_pgf(lambda, sc, z);
  const double sigma = d.lst(lambda * (1.0 - z));
  // (1 - N(z)) / (E[N](1 - z)) * (1 - rho)(1 - z) sigma / (sigma - z)
  return (1.0 - n_z) / e_n * (1.0 - rho) * sigma / (sigma - z);
}

/// E[X] from the decomposition: N''(1) / (2 E[N]) + E[X_{M/G/1}].
inline double expected_queue_length(double lambda, const SleepWindowScenario& sc,
                                    const ServiceDistribution& d) {
  const double rho = detail::stable_rho(lambda, d);
  const InitialQueueMoments n = initial_queue_moments(lambda, sc);
  const double mg1 = rho + lambda * lambda * d.m2() / (2.0 * (1.0 - rho));
  return n.factorial2 / (2.0 * n.e_n) + mg1;
}

inline double expected_busy_period(double lambda, const SleepWindowScenario& sc,
                                   const ServiceDistribution& d) {
  const double rho = detail::stable_rho(lambda, d);
  return initial_queue_moments(lambda, sc).e_n * d.m1() / (1.0 - rho);
}

inline WaitingMoments waiting_time_moments(double lambda, const SleepWindowScenario& sc,
                                           const ServiceDistribution& d) {
  const double rho = detail::stable_rho(lambda, d);
  const InitialQueueMoments n = initial_queue_moments(lambda, sc);
  WaitingMoments w;
  w.e_w = n.factorial2 / (2.0 * lambda * n.e_n) + lambda * d.m2() / (2.0 * (1.0 - rho));
  w.e_w2 = n.factorial3 / (3.0 * lambda * lambda * n.e_n) +
           lambda * w.e_w * d.m2() / (1.0 - rho) + lambda * d.m3() / (3.0 * (1.0 - rho));
  return w;
}

/// E[T] = vacation term + E[T_{M/G/1}].
inline double sojourn_time(double lambda, const SleepWindowScenario& sc,
                           const ServiceDistribution& d) {
  const double rho = detail::stable_rho(lambda, d);
  const InitialQueueMoments n = initial_queue_moments(lambda, sc);
  const double vacation_term = n.factorial2 / (2.0 * lambda * n.e_n);
  const double mg1 = lambda * d.m2() / (2.0 * (1.0 - rho)) + d.m1();
  return vacation_term + mg1;
}

/// Markov bounds on P(W > w). Not clamped to 1.
inline MarkovBounds excess_waiting_bounds(double lambda, const SleepWindowScenario& sc,
                                          const ServiceDistribution& d, double w) {
  if (!(w > 0.0)) throw DomainError("excess waiting threshold w must be > 0");
  const WaitingMoments wm = waiting_time_moments(lambda, sc, d);
  return {wm.e_w / w, wm.e_w2 / (w * w)};
}

inline QueueMetrics queue_metrics(double lambda, const SleepWindowScenario& sc,
                                  const ServiceDistribution& d) {
  QueueMetrics q;
  q.rho = detail::stable_rho(lambda, d);
  const InitialQueueMoments n = initial_queue_moments(lambda, sc);
  q.e_n = n.e_n;
  q.e_n2 = n.e_n2;
  q.e_n3 = n.e_n3;
  q.e_x = expected_queue_length(lambda, sc, d);
  q.e_b = expected_busy_period(lambda, sc, d);
  const WaitingMoments w = waiting_time_moments(lambda, sc, d);
  q.e_w = w.e_w;
  q.e_w2 = w.e_w2;
  q.e_t = sojourn_time(lambda, sc, d);
  return q;
}

}  // namespace sleepq
