#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "errors.hpp"

namespace sleepq {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Protocol tuple (t_min, a, l) plus the timing constants of a power-save cycle.
/// All times in frames. t_t may be +infinity (vacations never trigger).
struct ProtocolParams {
  double t_min = 2.0;  // initial sleep window
  double a = 2.0;      // window growth factor
  int l = 9;           // final exponent
  double t_t = 0.0;    // vacation trigger time
  double t_w = 1.0;    // warm-up
  double t_l = 1.0;    // listen window

  void validate() const {
    if (!(t_min > 0.0) || !std::isfinite(t_min)) throw DomainError("t_min must be finite and > 0");
    if (!(a >= 1.0) || !std::isfinite(a)) throw DomainError("a must be finite and >= 1");
    if (l < 0) throw DomainError("l must be >= 0");
    if (!(t_t >= 0.0)) throw DomainError("t_t must be >= 0 (inf allowed)");
    if (!(t_w >= 0.0) || !std::isfinite(t_w)) throw DomainError("t_w must be finite and >= 0");
    if (!(t_l >= 0.0) || !std::isfinite(t_l)) throw DomainError("t_l must be finite and >= 0");
  }

  /// Constant window schedule: all sleep windows equal t_min.
  bool type_two() const noexcept { return a == 1.0 || l == 0; }
  bool never_triggers() const noexcept { return std::isinf(t_t); }
};

enum class WindowLaw { Deterministic, Exponential };

/// Sleep-window law together with the protocol parameters.
///   S_i has mean a^min(i-1,l) * t_min; V_1 = S_1, V_i = t_l + S_i for i >= 2.
struct SleepWindowScenario {
  WindowLaw law = WindowLaw::Deterministic;
  ProtocolParams params;

  /// "D-I", "D-II", "E-I" or "E-II"; type II whenever a = 1 or l = 0.
  std::string label() const {
    std::string s = law == WindowLaw::Deterministic ? "D-" : "E-";
    return s + (params.type_two() ? "II" : "I");
  }
};

/// Builds a scenario from its name. Type II names force a = 1, l = 0.
inline SleepWindowScenario make_scenario(const std::string& name, ProtocolParams params) {
  SleepWindowScenario sc;
  if (name == "D-I" || name == "D-II") {
    sc.law = WindowLaw::Deterministic;
  } else if (name == "E-I" || name == "E-II") {
    sc.law = WindowLaw::Exponential;
  } else {
    throw DomainError("unknown scenario '" + name + "' (expected D-I, D-II, E-I or E-II)");
  }
  if (name.ends_with("-II")) {
    params.a = 1.0;
    params.l = 0;
  }
  params.validate();
  sc.params = params;
  return sc;
}

/// Mean sleep window E[S_i] = a^min(i-1,l) * t_min.
inline double sleep_mean(const SleepWindowScenario& sc, long i) {
  const auto& p = sc.params;
  const long e = std::min<long>(i - 1, p.l);
  return (p.a == 1.0 || e == 0) ? p.t_min : std::pow(p.a, static_cast<double>(e)) * p.t_min;
}

/// Listen prefix of vacation i: zero for the first vacation.
inline double listen_part(const SleepWindowScenario& sc, long i) {
  return i >= 2 ? sc.params.t_l : 0.0;
}

/// Smallest index from which V_i, V_{i+1}, ... are identically distributed.
inline long first_repeating_index(const SleepWindowScenario& sc) {
  const auto& p = sc.params;
  if (p.type_two()) return 2;
  return std::max<long>(2, static_cast<long>(p.l) + 1);
}

/// E[V_i^k], k in {1, 2, 3}.
inline double vacation_moment(const SleepWindowScenario& sc, long i, int k) {
  if (k < 1 || k > 3) throw UnsupportedOrder(k);
  if (i < 1) throw DomainError("vacation index must be >= 1");
  const double m = sleep_mean(sc, i);
  const double c = listen_part(sc, i);
  if (sc.law == WindowLaw::Deterministic) return std::pow(m + c, k);
  // (c + S)^k with E[S^j] = j! m^j
  switch (k) {
    case 1: return c + m;
    case 2: return c * c + 2.0 * c * m + 2.0 * m * m;
    default: return c * c * c + 3.0 * c * c * m + 6.0 * c * m * m + 6.0 * m * m * m;
  }
}

/// L_i(s) = E[exp(-s V_i)], s >= 0.
inline double vacation_lst(const SleepWindowScenario& sc, long i, double s) {
  if (!(s >= 0.0)) throw DomainError("vacation lst: s must be >= 0");
  if (i < 1) throw DomainError("vacation index must be >= 1");
  const double m = sleep_mean(sc, i);
  const double c = listen_part(sc, i);
  if (sc.law == WindowLaw::Deterministic) return std::exp(-(m + c) * s);
  return std::exp(-c * s) / (1.0 + m * s);
}

template <class Rng>
double sample_sleep(const SleepWindowScenario& sc, long i, Rng& rng) {
  const double m = sleep_mean(sc, i);
  if (sc.law == WindowLaw::Deterministic) return m;
  return std::exponential_distribution<double>(1.0 / m)(rng);
}

template <class Rng>
double sample_vacation(const SleepWindowScenario& sc, long i, Rng& rng) {
  return listen_part(sc, i) + sample_sleep(sc, i, rng);
}

}  // namespace sleepq
