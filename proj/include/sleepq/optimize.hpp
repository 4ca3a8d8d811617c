#pragma once

// Constrained protocol tuning by exhaustive grid search:
//   maximize gain (or minimize E_sleep) over (t_min, a, l) subject to E[T] <= t_qos,
// for a single input rate, in expectation over a rate distribution, or in the
// worst case over its support.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "analytics.hpp"
#include "dist.hpp"
#include "energy.hpp"
#include "errors.hpp"
#include "policy.hpp"

namespace sleepq {

inline constexpr double kGridPointLimit = 1e6;

// E[T] <= t_qos is tested with this relative slack so that closed forms landing
// exactly on the bound are not rejected by rounding.
inline constexpr double kQosSlack = 1e-12;

inline bool meets_qos(double sojourn, double t_qos) {
  return sojourn <= t_qos * (1.0 + kQosSlack);
}

struct LambdaPoint {
  double lambda = 0.0;
  double p = 0.0;
};

/// Discrete distribution of the input rate.
class LambdaDistribution {
public:
  LambdaDistribution() = default;
  explicit LambdaDistribution(std::vector<LambdaPoint> support) : support_(std::move(support)) {
    if (support_.empty()) throw DomainError("rate distribution must have at least one point");
    double total = 0.0;
    for (const auto& pt : support_) {
      detail::require_rate(pt.lambda);
      if (!(pt.p >= 0.0 && pt.p <= 1.0)) throw DomainError("rate probabilities must lie in [0, 1]");
      total += pt.p;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw DomainError("rate probabilities sum to " + std::to_string(total) + ", expected 1");
  }

  static LambdaDistribution single(double lambda) { return LambdaDistribution({{lambda, 1.0}}); }

  /// Five-point distribution skewed toward light traffic.
  static LambdaDistribution light_traffic() {
    return LambdaDistribution(
        {{0.02, 0.3125}, {0.05, 0.3125}, {0.1, 0.1875}, {0.2, 0.125}, {0.5, 0.0625}});
  }

  const std::vector<LambdaPoint>& support() const noexcept { return support_; }
  std::size_t size() const noexcept { return support_.size(); }

  void require_stable(const ServiceDistribution& d) const {
    for (const auto& pt : support_) detail::stable_rho(pt.lambda, d);
  }

private:
  std::vector<LambdaPoint> support_;
};

/// Inclusive arithmetic grid lo, lo + step, ..., <= hi.
struct GridRange {
  double lo = 0.0;
  double hi = 0.0;
  double step = 1.0;

  void validate(const std::string& name) const {
    if (!(step > 0.0) || !std::isfinite(step)) throw DomainError(name + ": step must be > 0");
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
      throw DomainError(name + ": need finite lo <= hi");
  }
  double count() const { return std::floor((hi - lo) / step + 1e-9) + 1.0; }
  std::vector<double> values() const {
    std::vector<double> out;
    const auto n = static_cast<long>(count());
    out.reserve(static_cast<std::size_t>(n));
    for (long k = 0; k < n; ++k) out.push_back(lo + static_cast<double>(k) * step);
    return out;
  }
};

enum class OptMode { Direct, Expectation, WorstCase };
enum class OptObjective { MaximizeGain, MinimizeEnergySleep };
enum class OptConstraint { Hard, Soft };

struct OptimizationProblem {
  OptMode mode = OptMode::Direct;
  OptObjective objective = OptObjective::MaximizeGain;
  OptConstraint constraint = OptConstraint::Hard;
  double t_qos = 50.0;
  WindowLaw law = WindowLaw::Deterministic;
  ProtocolParams fixed;  // values of the parameters that are not decision variables
  std::optional<GridRange> t_min, a, l;
  LambdaDistribution lambdas = LambdaDistribution::single(0.1);
  ServiceDistribution service = ServiceDistribution::exponential(1.0);
  EnergyProfile profile;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const {
    if (!(t_qos > 0.0)) throw DomainError("t_qos must be > 0");
    if (!t_min && !a && !l) throw DomainError("at least one decision variable is required");
    if (t_min) t_min->validate("t_min");
    if (a) a->validate("a");
    if (l) {
      l->validate("l");
      if (l->lo != std::floor(l->lo) || l->step != std::floor(l->step) || l->lo < 0.0)
        throw DomainError("l: bounds and step must be non-negative integers");
    }
    if (mode == OptMode::Direct && lambdas.size() != 1)
      throw DomainError("direct optimization takes a single input rate");
    fixed.validate();
    profile.validate();
  }

  double grid_size() const {
    double n = 1.0;
    if (t_min) n *= t_min->count();
    if (a) n *= a->count();
    if (l) n *= l->count();
    return n;
  }
};

/// Value of the program at one parameter point.
struct PointEvaluation {
  bool feasible = false;
  double objective = 0.0;  // expected or worst gain / energy, as the mode dictates
  double constraint_value = 0.0;  // expected or worst sojourn time used for feasibility
};

struct OptimizationDiagnostics {
  double grid_size = 0.0;
  std::size_t feasible_count = 0;
  PointEvaluation at_default;  // evaluation at `fixed`
};

struct OptimizationResult {
  bool feasible = false;
  ProtocolParams theta;
  double objective = 0.0;
  std::vector<double> gain_per_lambda;     // at theta, in support order
  std::vector<double> sojourn_per_lambda;  // at theta
  OptimizationDiagnostics diagnostics;
};

inline bool feasible(const ProtocolParams& theta, double lambda, WindowLaw law,
                     const ServiceDistribution& d, double t_qos) {
  try {
    return meets_qos(sojourn_time(lambda, SleepWindowScenario{law, theta}, d), t_qos);
  } catch (const InstabilityError&) {
    return false;
  }
}

namespace detail {

inline PointEvaluation evaluate_point(const OptimizationProblem& pb, const ProtocolParams& theta) {
  const SleepWindowScenario sc{pb.law, theta};
  const bool maximize = pb.objective == OptObjective::MaximizeGain;
  PointEvaluation ev;
  double expected_t = 0.0, expected_obj = 0.0;
  double worst_obj = maximize ? kInfinity : -kInfinity;
  double worst_t = 0.0;
  bool every_rate_ok = true;
  for (const auto& pt : pb.lambdas.support()) {
    double t = 0.0;
    EnergyMetrics em;
    try {
      t = sojourn_time(pt.lambda, sc, pb.service);
      em = gain(pt.lambda, sc, pb.service, pb.profile);
    } catch (const InstabilityError&) {
      return ev;
    }
    const double obj = maximize ? em.gain : em.e_sleep;
    expected_t += pt.p * t;
    worst_t = std::max(worst_t, t);
    expected_obj += pt.p * obj;
    worst_obj = maximize ? std::min(worst_obj, obj) : std::max(worst_obj, obj);
    every_rate_ok = every_rate_ok && meets_qos(t, pb.t_qos);
  }
  if (pb.constraint == OptConstraint::Hard || pb.mode == OptMode::Direct) {
    ev.feasible = every_rate_ok;
    ev.constraint_value = worst_t;
  } else {
    ev.feasible = meets_qos(expected_t, pb.t_qos);
    ev.constraint_value = expected_t;
  }
  ev.objective = pb.mode == OptMode::WorstCase ? worst_obj : expected_obj;
  return ev;
}

// Grid points in lexicographic (t_min, a, l) order.
inline std::vector<ProtocolParams> grid_points(const OptimizationProblem& pb) {
  const auto axis = [](const std::optional<GridRange>& r, double fixed) {
    return r ? r->values() : std::vector<double>{fixed};
  };
  const auto tv = axis(pb.t_min, pb.fixed.t_min);
  const auto av = axis(pb.a, pb.fixed.a);
  const auto lv = axis(pb.l, static_cast<double>(pb.fixed.l));
  std::vector<ProtocolParams> out;
  out.reserve(tv.size() * av.size() * lv.size());
  for (double t : tv)
    for (double a : av)
      for (double l : lv) {
        ProtocolParams p = pb.fixed;
        p.t_min = t;
        p.a = a;
        p.l = static_cast<int>(std::lround(l));
        out.push_back(p);
      }
  return out;
}

inline OptimizationResult solve(const OptimizationProblem& pb) {
  pb.validate();
  OptimizationResult res;
  res.diagnostics.grid_size = pb.grid_size();
  if (res.diagnostics.grid_size > kGridPointLimit)
    throw GridTooLarge(res.diagnostics.grid_size, kGridPointLimit);

  const auto points = grid_points(pb);
  std::vector<PointEvaluation> evals(points.size());
  unsigned threads = pb.threads ? pb.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, points.size()));
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (points.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t lo = t * chunk;
      const std::size_t hi = std::min(points.size(), lo + chunk);
      pool.emplace_back([&, lo, hi] {
        for (std::size_t k = lo; k < hi; ++k) evals[k] = evaluate_point(pb, points[k]);
      });
    }
  }

  // Serial reduction in grid order: a later point must beat the incumbent by more
  // than a relative 1e-12 to replace it, so ties go to the smallest (t_min, a, l).
  const bool maximize = pb.objective == OptObjective::MaximizeGain;
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!evals[k].feasible) continue;
    ++res.diagnostics.feasible_count;
    if (!best) {
      best = k;
      continue;
    }
    const double inc = evals[*best].objective;
    const double margin = 1e-12 * std::max(1.0, std::abs(inc));
    const bool better = maximize ? evals[k].objective > inc + margin
                                 : evals[k].objective < inc - margin;
    if (better) best = k;
  }
  res.diagnostics.at_default = evaluate_point(pb, pb.fixed);
  if (!best) return res;

  res.feasible = true;
  res.theta = points[*best];
  res.objective = evals[*best].objective;
  const SleepWindowScenario sc{pb.law, res.theta};
  for (const auto& pt : pb.lambdas.support()) {
    res.gain_per_lambda.push_back(gain(pt.lambda, sc, pb.service, pb.profile).gain);
    res.sojourn_per_lambda.push_back(sojourn_time(pt.lambda, sc, pb.service));
  }
  return res;
}

}  // namespace detail

inline OptimizationResult solve_direct(OptimizationProblem pb) {
  pb.mode = OptMode::Direct;
  return detail::solve(pb);
}

/// Hard: E[T] <= t_qos at every rate. Soft: sum p E[T] <= t_qos. Objective sum p G.
inline OptimizationResult solve_expectation(OptimizationProblem pb) {
  pb.mode = OptMode::Expectation;
  return detail::solve(pb);
}

/// Objective min over the support of G (or max of E_sleep); constraints as above.
inline OptimizationResult solve_worstcase(OptimizationProblem pb) {
  pb.mode = OptMode::WorstCase;
  return detail::solve(pb);
}

inline OptimizationResult solve(const OptimizationProblem& pb) {
  switch (pb.mode) {
    case OptMode::Direct: return solve_direct(pb);
    case OptMode::Expectation: return solve_expectation(pb);
    default: return solve_worstcase(pb);
  }
}

}  // namespace sleepq
