#pragma once

// Regenerative simulation of the vacation queue. Each cycle runs
//   trigger wait -> vacations V_1..V_zeta -> warm-up -> exhaustive FCFS busy period
// and arrivals inside a vacation are only noticed when that vacation ends.
// Estimates use batch means over contiguous groups of cycles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "analytics.hpp"
#include "dist.hpp"
#include "energy.hpp"
#include "errors.hpp"
#include "policy.hpp"

namespace sleepq {

struct SimConfig {
  double lambda = 0.1;
  SleepWindowScenario scenario;
  ServiceDistribution service = ServiceDistribution::exponential(1.0);
  EnergyProfile profile;
  long n_cycles = 100'000;
  std::uint64_t seed = 1;
  int batch_count = 30;
  std::optional<double> wait_threshold;  // estimate P(W > w)
  std::optional<double> pgf_z;           // estimate the time-average of z^X
  bool keep_cycle_trace = false;         // per-cycle sums of sojourn times

  void validate() const {
    detail::require_rate(lambda);
    scenario.params.validate();
    profile.validate();
    detail::stable_rho(lambda, service);
    if (batch_count < 2) throw DomainError("batch_count must be >= 2");
    if (n_cycles < batch_count) throw DomainError("n_cycles must be >= batch_count");
    if (wait_threshold && !(*wait_threshold > 0.0))
      throw DomainError("wait_threshold must be > 0");
    if (pgf_z && !(*pgf_z >= 0.0 && *pgf_z <= 1.0)) throw DomainError("pgf_z must lie in [0, 1]");
  }
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct StateTime {
  double sleep = 0.0;
  double listen = 0.0;
  double low = 0.0;
  double high = 0.0;
  double total() const { return sleep + listen + low + high; }
};

struct SimResult {
  Estimate e_zeta, e_idle, e_n, e_n2, e_n3, e_b, e_w, e_w2, e_t, e_x;
  Estimate e_sleep_rate, gain, busy_fraction;
  std::optional<Estimate> p_wait_exceeds;
  std::optional<Estimate> queue_pgf;
  std::uint64_t cycles = 0;
  std::uint64_t customers = 0;
  double horizon = 0.0;
  StateTime state_time;
  std::vector<std::uint64_t> zeta_histogram;  // index = number of vacations
  std::vector<double> cycle_sojourn_sums;     // filled when keep_cycle_trace

  /// Metrics in a fixed order, for reports and CSV.
  std::vector<std::pair<std::string, Estimate>> metrics() const {
    std::vector<std::pair<std::string, Estimate>> out = {
        {"e_zeta", e_zeta}, {"e_idle", e_idle}, {"e_n", e_n},
        {"e_b", e_b},       {"e_w", e_w},       {"e_t", e_t},
        {"e_x", e_x},       {"e_sleep_rate", e_sleep_rate}, {"gain", gain}};
    if (p_wait_exceeds) out.emplace_back("p_wait_exceeds", *p_wait_exceeds);
    if (queue_pgf) out.emplace_back("queue_pgf", *queue_pgf);
    return out;
  }
};

namespace detail {

// Sums over one batch of cycles.
struct BatchSums {
  double cycles = 0, zeta = 0, idle = 0, n = 0, n2 = 0, n3 = 0, busy = 0, length = 0;
  double customers = 0, wait = 0, wait2 = 0, sojourn = 0, energy = 0, exceed = 0, pgf_area = 0;
};

inline Estimate batch_ratio(const std::vector<BatchSums>& batches, double BatchSums::*num,
                            double BatchSums::*den) {
  double total_num = 0.0, total_den = 0.0;
  for (const auto& b : batches) {
    total_num += b.*num;
    total_den += b.*den;
  }
  Estimate e;
  e.value = total_den > 0.0 ? total_num / total_den : 0.0;
  const auto k = static_cast<double>(batches.size());
  double mean = 0.0, ss = 0.0;
  std::size_t used = 0;
  for (const auto& b : batches) {
    if (!(b.*den > 0.0)) continue;
    const double r = b.*num / b.*den;
    ++used;
    const double delta = r - mean;
    mean += delta / static_cast<double>(used);
    ss += delta * (r - mean);
  }
  if (used >= 2) e.std_error = std::sqrt(ss / static_cast<double>(used - 1) / static_cast<double>(used));
  (void)k;
  return e;
}

}  // namespace detail

inline SimResult run_simulation(const SimConfig& cfg) {
  cfg.validate();
  const auto& sc = cfg.scenario;
  const auto& p = sc.params;
  const auto& prof = cfg.profile;

  std::mt19937_64 rng(cfg.seed);
  std::exponential_distribution<double> interarrival(cfg.lambda);

  std::vector<detail::BatchSums> batches(static_cast<std::size_t>(cfg.batch_count));
  SimResult res;
  std::vector<double> queue;      // arrival times of this cycle's customers, FCFS order
  std::vector<double> departures;  // only kept for the queue-length PGF
  queue.reserve(64);
  if (cfg.keep_cycle_trace) res.cycle_sojourn_sums.reserve(static_cast<std::size_t>(cfg.n_cycles));

  for (long c = 0; c < cfg.n_cycles; ++c) {
    auto& batch = batches[static_cast<std::size_t>(c * cfg.batch_count / cfg.n_cycles)];
    queue.clear();
    departures.clear();

    double low = 0.0, sleep = 0.0, listen = 0.0;
    long zeta = 0;
    double busy_start = 0.0;
    double idle = 0.0;
    double next;  // next arrival not yet in the queue

    const double first = interarrival(rng);
    if (first <= p.t_t) {
      low = first;
      idle = first;
      queue.push_back(first);
      busy_start = first;
      next = first + interarrival(rng);
    } else {
      low = p.t_t;
      double t = p.t_t;
      next = first;
      for (long i = 1;; ++i) {
        const double lp = listen_part(sc, i);
        const double s = sample_sleep(sc, i, rng);
        listen += lp;
        sleep += s;
        t += lp + s;
        zeta = i;
        if (next <= t) break;
      }
      idle = t;
      const double ready = t + p.t_w;
      listen += p.t_w;
      while (next <= ready) {
        queue.push_back(next);
        next += interarrival(rng);
      }
      busy_start = ready;
    }

    const auto n = static_cast<double>(queue.size());
    double now = busy_start;
    double cycle_sojourn = 0.0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const double w = now - queue[head];
      const double s = cfg.service.sample(rng);
      now += s;
      batch.wait += w;
      batch.wait2 += w * w;
      batch.sojourn += w + s;
      cycle_sojourn += w + s;
      if (cfg.wait_threshold && w > *cfg.wait_threshold) batch.exceed += 1.0;
      if (cfg.pgf_z) departures.push_back(now);
      while (next <= now) {
        queue.push_back(next);
        next += interarrival(rng);
      }
    }
    const double busy = now - busy_start;
    const double length = now;

    if (cfg.pgf_z) {
      // integrate z^X(t) over the cycle; X jumps up at arrivals, down at departures
      const double z = *cfg.pgf_z;
      double area = 0.0, t = 0.0, zx = 1.0;
      std::size_t ia = 0, id = 0;
      while (ia < queue.size() || id < departures.size()) {
        const bool arrival = ia < queue.size() && (id >= departures.size() || queue[ia] <= departures[id]);
        const double te = arrival ? queue[ia] : departures[id];
        area += zx * (te - t);
        t = te;
        if (arrival) {
          zx *= z;
          ++ia;
        } else {
          // recompute to avoid dividing by z = 0
          ++id;
          zx = std::pow(z, static_cast<double>(ia - id));
        }
      }
      area += zx * (length - t);
      batch.pgf_area += area;
    }

    batch.cycles += 1.0;
    batch.zeta += static_cast<double>(zeta);
    batch.idle += idle;
    batch.n += n;
    batch.n2 += n * n;
    batch.n3 += n * n * n;
    batch.busy += busy;
    batch.length += length;
    batch.customers += static_cast<double>(queue.size());
    batch.energy += low * prof.c_low + sleep * prof.c_sleep + listen * prof.c_listen + busy * prof.c_high;

    res.state_time.low += low;
    res.state_time.sleep += sleep;
    res.state_time.listen += listen;
    res.state_time.high += busy;
    res.horizon += length;
    res.customers += queue.size();
    if (res.zeta_histogram.size() <= static_cast<std::size_t>(zeta))
      res.zeta_histogram.resize(static_cast<std::size_t>(zeta) + 1, 0);
    ++res.zeta_histogram[static_cast<std::size_t>(zeta)];
    if (cfg.keep_cycle_trace) res.cycle_sojourn_sums.push_back(cycle_sojourn);
  }
  res.cycles = static_cast<std::uint64_t>(cfg.n_cycles);

  using B = detail::BatchSums;
  res.e_zeta = detail::batch_ratio(batches, &B::zeta, &B::cycles);
  res.e_idle = detail::batch_ratio(batches, &B::idle, &B::cycles);
  res.e_n = detail::batch_ratio(batches, &B::n, &B::cycles);
  res.e_n2 = detail::batch_ratio(batches, &B::n2, &B::cycles);
  res.e_n3 = detail::batch_ratio(batches, &B::n3, &B::cycles);
  res.e_b = detail::batch_ratio(batches, &B::busy, &B::cycles);
  res.e_w = detail::batch_ratio(batches, &B::wait, &B::customers);
  res.e_w2 = detail::batch_ratio(batches, &B::wait2, &B::customers);
  res.e_t = detail::batch_ratio(batches, &B::sojourn, &B::customers);
  res.e_x = detail::batch_ratio(batches, &B::sojourn, &B::length);
  res.e_sleep_rate = detail::batch_ratio(batches, &B::energy, &B::length);
  res.busy_fraction = detail::batch_ratio(batches, &B::busy, &B::length);
  if (cfg.wait_threshold) res.p_wait_exceeds = detail::batch_ratio(batches, &B::exceed, &B::customers);
  if (cfg.pgf_z) res.queue_pgf = detail::batch_ratio(batches, &B::pgf_area, &B::length);

  const double e_no_sleep = energy_no_sleep(cfg.lambda * cfg.service.m1(), prof);
  res.gain = {1.0 - res.e_sleep_rate.value / e_no_sleep, res.e_sleep_rate.std_error / e_no_sleep};
  return res;
}

/// Analytic counterparts of the simulated metrics.
struct AnalyticSnapshot {
  double e_zeta = 0, e_idle = 0, e_n = 0, e_b = 0, e_w = 0, e_t = 0, e_x = 0;
  double e_sleep_rate = 0, gain = 0;

  std::vector<std::pair<std::string, double>> values() const {
    return {{"e_zeta", e_zeta}, {"e_idle", e_idle}, {"e_n", e_n},
            {"e_b", e_b},       {"e_w", e_w},       {"e_t", e_t},
            {"e_x", e_x},       {"e_sleep_rate", e_sleep_rate}, {"gain", gain}};
  }
};

inline AnalyticSnapshot analytic_snapshot(double lambda, const SleepWindowScenario& sc,
                                          const ServiceDistribution& d, const EnergyProfile& prof) {
  const VacationSeriesSums ss = series_sums(lambda, sc);
  const QueueMetrics q = queue_metrics(lambda, sc, d);
  const EnergyMetrics em = gain(lambda, sc, d, prof);
  return {ss.e_zeta, ss.e_idle, q.e_n, q.e_b, q.e_w, q.e_t, q.e_x, em.e_sleep, em.gain};
}

struct ValidationRow {
  std::string metric;
  double analytic = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  bool pass = false;
};

struct ValidationReport {
  std::vector<ValidationRow> rows;
  SimResult sim;
  bool all_pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const ValidationRow& r) { return r.pass; });
  }
};

struct ValidationOptions {
  double z_threshold = 3.0;
  std::function<void(AnalyticSnapshot&)> tamper;  // test hook: corrupt analytic values
};

/// |analytic - estimate| / stderr. Zero stderr only passes on (near) exact agreement.
inline double z_score(double analytic, const Estimate& est) {
  const double diff = std::abs(analytic - est.value);
  if (est.std_error > 0.0) return diff / est.std_error;
  return diff <= 1e-9 * std::max(1.0, std::abs(analytic)) ? 0.0 : kInfinity;
}

inline ValidationReport validate(const SimConfig& cfg, const ValidationOptions& opts = {}) {
  ValidationReport report;
  AnalyticSnapshot a = analytic_snapshot(cfg.lambda, cfg.scenario, cfg.service, cfg.profile);
  if (opts.tamper) opts.tamper(a);
  report.sim = run_simulation(cfg);
  const auto estimates = report.sim.metrics();
  for (const auto& [name, value] : a.values()) {
    const auto it = std::find_if(estimates.begin(), estimates.end(),
                                 [&](const auto& e) { return e.first == name; });
    ValidationRow row;
    row.metric = name;
    row.analytic = value;
    row.estimate = it->second.value;
    row.std_error = it->second.std_error;
    row.z = z_score(value, it->second);
    row.pass = row.z <= opts.z_threshold;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace sleepq
