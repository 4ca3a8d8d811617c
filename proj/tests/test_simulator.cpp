#include <catch_amalgamated.hpp>

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <numeric>

#include "sleepq/simulator.hpp"

using namespace sleepq;
using Catch::Approx;

namespace {

SimConfig config(const char* name, double lambda, std::uint64_t seed, long cycles = 100'000) {
  SimConfig cfg;
  cfg.lambda = lambda;
  cfg.scenario = make_scenario(name, {});
  cfg.n_cycles = cycles;
  cfg.seed = seed;
  return cfg;
}

bool within(double analytic, const Estimate& e, double k = 3.0) { return z_score(analytic, e) <= k; }

}  // namespace

TEST_CASE("plain M/M/1 when vacations never trigger") {
  auto cfg = config("D-I", 0.5, 1);
  cfg.scenario.params.t_t = kInfinity;
  const auto r = run_simulation(cfg);
  CHECK(within(2.0, r.e_t));
  CHECK(r.e_zeta.value == 0.0);
  CHECK(r.e_n.value == 1.0);
  CHECK(within(0.0, r.gain));
  CHECK(r.state_time.sleep == 0.0);
}

TEST_CASE("geometric vacation count") {
  SimConfig cfg;
  cfg.lambda = std::log(2.0);
  ProtocolParams p;
  p.t_min = 1;
  p.a = 1;
  p.l = 0;
  p.t_t = 0;
  p.t_l = 0;
  cfg.scenario = {WindowLaw::Deterministic, p};
  cfg.service = ServiceDistribution::exponential(1.0);
  cfg.n_cycles = 100'000;
  cfg.seed = 2;
  const auto r = run_simulation(cfg);
  CHECK(within(2.0, r.e_zeta));
  CHECK(within(2.0, r.e_idle));
}

TEST_CASE("same seed, same result") {
  auto cfg = config("E-I", 0.3, 99, 20'000);
  cfg.pgf_z = 0.5;
  cfg.wait_threshold = 10.0;
  const auto a = run_simulation(cfg);
  const auto b = run_simulation(cfg);
  const auto ma = a.metrics(), mb = b.metrics();
  REQUIRE(ma.size() == mb.size());
  for (std::size_t i = 0; i < ma.size(); ++i) {
    CHECK(ma[i].second.value == mb[i].second.value);
    CHECK(ma[i].second.std_error == mb[i].second.std_error);
  }
  CHECK(a.zeta_histogram == b.zeta_histogram);
  CHECK(a.horizon == b.horizon);
  cfg.seed = 100;
  CHECK(run_simulation(cfg).e_t.value != a.e_t.value);
}

TEST_CASE("default configurations validate") {
  std::uint64_t seed = 500;
  for (const char* name : {"D-I", "D-II", "E-I", "E-II"}) {
    for (double lam : {0.2, 0.5}) {
      const auto rep = validate(config(name, lam, ++seed));
      for (const auto& row : rep.rows) {
        INFO(name << " lambda " << lam << ' ' << row.metric << " z " << row.z);
        CHECK(row.pass);
      }
    }
  }
}

TEST_CASE("a corrupted analytic value is flagged") {
  ValidationOptions opts;
  opts.tamper = [](AnalyticSnapshot& a) { a.e_w *= 1.05; };
  const auto rep = validate(config("D-I", 0.3, 7), opts);
  CHECK_FALSE(rep.all_pass());
  for (const auto& row : rep.rows)
    if (row.metric == "e_w") CHECK(row.z > 3.0);
}

TEST_CASE("state times cover the horizon and busy fraction is the load") {
  auto cfg = config("E-II", 0.4, 8);
  cfg.scenario.params.t_t = 1.5;
  const auto r = run_simulation(cfg);
  CHECK(r.state_time.total() == Approx(r.horizon).epsilon(1e-9));
  CHECK(within(0.4, r.busy_fraction));
  const double e_ns = energy_no_sleep(0.4, cfg.profile);
  CHECK(r.gain.value == Approx(1.0 - r.e_sleep_rate.value / e_ns).epsilon(1e-12));
}

TEST_CASE("cycles are independent") {
  auto cfg = config("D-I", 0.3, 12);
  cfg.keep_cycle_trace = true;
  const auto r = run_simulation(cfg);
  const auto& x = r.cycle_sojourn_sums;
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double c0 = 0, c1 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    c0 += (x[i] - mean) * (x[i] - mean);
    if (i + 1 < x.size()) c1 += (x[i] - mean) * (x[i + 1] - mean);
  }
  CHECK(std::abs(c1 / c0) <= 3.0 / std::sqrt(n));
}

TEST_CASE("vacation count histogram fits the pmf") {
  for (const char* name : {"D-I", "E-I"}) {
    auto cfg = config(name, 0.2, 21);
    const auto r = run_simulation(cfg);
    // pool the tail so every cell expects at least 5 cycles
    const double n = static_cast<double>(r.cycles);
    double chi2 = 0, tail_expected = 1.0, tail_observed = n;
    int cells = 0;
    for (long i = 0;; ++i) {
      const double e = n * vacation_count_pmf(cfg.lambda, cfg.scenario, i);
      const double o = i < static_cast<long>(r.zeta_histogram.size()) ? r.zeta_histogram[i] : 0.0;
      if (e == 0.0) {
        CHECK(o == 0.0);
        continue;
      }
      if (e < 5.0 || tail_expected * n - e < 5.0) break;
      chi2 += (o - e) * (o - e) / e;
      ++cells;
      tail_expected -= e / n;
      tail_observed -= o;
    }
    chi2 += (tail_observed - tail_expected * n) * (tail_observed - tail_expected * n) / (tail_expected * n);
    ++cells;
    const boost::math::chi_squared dist(cells - 1);
    INFO(name << " chi2 " << chi2 << " cells " << cells);
    CHECK(cells >= 3);
    CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.01);
  }
}

TEST_CASE("warm-up cross term uses only the triggered idle time") {
  // Trigger time, warm-up and listen window all nonzero: the count of arrivals
  // during warm-up depends on the trigger event, so E[N(N-1)] carries
  // 2 lambda^2 t_w L_Tt S1 and not 2 lambda^2 t_w L_Tt E[I].
  SimConfig cfg;
  cfg.lambda = 0.3;
  ProtocolParams p;
  p.t_min = 5;
  p.t_t = 2;
  p.t_w = 1.5;
  cfg.scenario = make_scenario("E-II", p);
  cfg.n_cycles = 400'000;
  cfg.seed = 77;
  const auto r = run_simulation(cfg);
  const auto m = initial_queue_moments(cfg.lambda, cfg.scenario);
  const auto ss = series_sums(cfg.lambda, cfg.scenario);
  CHECK(within(m.e_n, r.e_n));
  CHECK(within(m.e_n2, r.e_n2));
  const double lam = cfg.lambda, tw = p.t_w;
  const double independent = m.e_n + lam * lam * (ss.i_a + 2 * tw * ss.l_tt * ss.e_idle + tw * tw * ss.l_tt);
  CHECK(z_score(independent, r.e_n2) > 5.0);
  const auto q = queue_metrics(cfg.lambda, cfg.scenario, cfg.service);
  CHECK(within(q.e_w, r.e_w));
  CHECK(within(q.e_w2, r.e_w2));
  CHECK(within(q.e_t, r.e_t));
}

TEST_CASE("time-average queue PGF") {
  auto cfg = config("D-I", 0.3, 41);
  cfg.pgf_z = 0.5;
  const auto r = run_simulation(cfg);
  REQUIRE(r.queue_pgf);
  CHECK(within(queue_length_pgf(0.3, cfg.scenario, cfg.service, 0.5), *r.queue_pgf));
}

TEST_CASE("waiting tail under the Markov bounds") {
  auto cfg = config("D-II", 0.2, 43);
  cfg.wait_threshold = 20.0;
  const auto r = run_simulation(cfg);
  const auto mb = excess_waiting_bounds(0.2, cfg.scenario, cfg.service, 20.0);
  REQUIRE(r.p_wait_exceeds);
  CHECK(r.p_wait_exceeds->value <= std::min(mb.m1_bound, mb.m2_bound) + 3 * r.p_wait_exceeds->std_error);
}

TEST_CASE("bad configurations are rejected before running") {
  CHECK_THROWS_AS(run_simulation(config("D-I", 1.0, 1)), InstabilityError);
  auto cfg = config("D-I", 0.2, 1, 10);
  cfg.batch_count = 30;
  CHECK_THROWS_AS(run_simulation(cfg), DomainError);
  cfg = config("D-I", 0.2, 1);
  cfg.batch_count = 1;
  CHECK_THROWS_AS(run_simulation(cfg), DomainError);
  cfg = config("D-I", 0.2, 1);
  cfg.pgf_z = 1.5;
  CHECK_THROWS_AS(run_simulation(cfg), DomainError);
}

TEST_CASE("zero standard error only passes on exact agreement") {
  CHECK(z_score(1.0, Estimate{1.0, 0.0}) == 0.0);
  CHECK(std::isinf(z_score(1.0, Estimate{1.1, 0.0})));
  CHECK(z_score(1.0, Estimate{1.3, 0.1}) == Approx(3.0));
}
