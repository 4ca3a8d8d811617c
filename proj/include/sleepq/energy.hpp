#pragma once

#include <cmath>

#include "analytics.hpp"
#include "errors.hpp"

namespace sleepq {

/// Power drawn in each node state, per frame.
struct EnergyProfile {
  double c_high = 1.0;    // serving (busy period)
  double c_listen = 0.2;  // listen windows and warm-up
  double c_low = 0.2;     // awake idle, including the pre-trigger wait
  double c_sleep = 0.0;   // sleep windows

  void validate() const {
    if (!(c_high > 0.0)) throw DomainError("c_high must be > 0");
    if (!(c_listen >= 0.0 && c_low >= 0.0 && c_sleep >= 0.0))
      throw DomainError("energy levels must be >= 0");
    if (!(c_sleep <= c_low && c_low <= c_high && c_listen <= c_high))
      throw DomainError("energy levels must satisfy c_sleep <= c_low <= c_high, c_listen <= c_high");
  }

  EnergyProfile scaled(double factor) const {
    return {c_high * factor, c_listen * factor, c_low * factor, c_sleep * factor};
  }
};

struct EnergyMetrics {
  double e_no_sleep = 0.0;
  double e_sleep = 0.0;
  double gain = 0.0;
  double gain_simplified = 0.0;  // c_sleep neglected, t_w taken equal to t_l
};

/// Consumption rate with power save disabled: rho c_high + (1 - rho) c_low.
inline double energy_no_sleep(double rho, const EnergyProfile& prof) {
  if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("rho must lie in [0, 1)");
  return rho * prof.c_high + (1.0 - rho) * prof.c_low;
}

/// Consumption rate with power save enabled, by cycle accounting:
///   awake-idle  E[min(t_t, t_f)]                          at c_low
///   sleeping    E[total vacation time] - listen time      at c_sleep
///   listening   t_l (E[zeta] - L_Tt) + t_w L_Tt            at c_listen
///   busy        E[B]                                       at c_high
/// divided by E[C] = E[I] + t_w L_Tt + E[B].
inline double energy_sleep(double lambda, const SleepWindowScenario& sc,
                           const ServiceDistribution& d, const EnergyProfile& prof) {
  detail::stable_rho(lambda, d);
  const VacationSeriesSums ss = series_sums(lambda, sc);
  const double e_b = expected_busy_period(lambda, sc, d);
  const auto& p = sc.params;
  const double tt_weight = detail::trigger_time_weight(lambda, p);
  const double listen = p.t_l * (ss.e_zeta - ss.l_tt);
  const double warmup = p.t_w * ss.l_tt;
  const double cycle = ss.e_idle + warmup + e_b;
  const double energy = ss.i_trig * prof.c_sleep + ss.i_notrig * prof.c_low +
                        tt_weight * (prof.c_low - prof.c_sleep) +
                        listen * (prof.c_listen - prof.c_sleep) + warmup * prof.c_listen +
                        e_b * prof.c_high;
  return energy / cycle;
}

inline EnergyMetrics gain(double lambda, const SleepWindowScenario& sc,
                          const ServiceDistribution& d, const EnergyProfile& prof) {
  const double rho = detail::stable_rho(lambda, d);
  EnergyMetrics em;
  em.e_no_sleep = energy_no_sleep(rho, prof);
  em.e_sleep = energy_sleep(lambda, sc, d, prof);
  em.gain = (em.e_no_sleep - em.e_sleep) / em.e_no_sleep;

  const VacationSeriesSums ss = series_sums(lambda, sc);
  const double e_b = expected_busy_period(lambda, sc, d);
  const double low = prof.c_low / prof.c_high;
  const double listen = prof.c_listen / prof.c_high;
  const double awake_idle = -std::expm1(-lambda * sc.params.t_t) / lambda;
  em.gain_simplified =
      ((1.0 - rho) * low - rho / e_b * (sc.params.t_l * ss.e_zeta * listen + awake_idle * low)) /
      (rho + (1.0 - rho) * low);
  return em;
}

}  // namespace sleepq
