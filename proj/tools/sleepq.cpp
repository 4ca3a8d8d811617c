// sleepq: analytic metrics, simulation, validation, sweeps and parameter
// optimization for the power-save vacation queue.
//
// Exit codes: 0 ok, 1 config error, 2 unstable system, 3 grid too large,
// 4 optimization infeasible.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sleepq/config.hpp"
#include "sleepq/sleepq.hpp"

namespace {

using namespace sleepq;

enum ExitCode { kOk = 0, kConfigError = 1, kUnstable = 2, kGridRefused = 3, kInfeasible = 4 };

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

RunConfig load(const Options& opt) {
  json root = opt.config.empty() ? json::object() : load_config_json(opt.config);
  for (const auto& o : opt.overrides) apply_override(root, o);
  RunConfig cfg = parse_config(root);
  if (opt.seed) cfg.seed = *opt.seed;
  return cfg;
}

int with_output(const Options& opt, const std::function<int(std::ostream&)>& body) {
  if (opt.out.empty()) return body(std::cout);
  std::ofstream f(opt.out);
  if (!f) throw ConfigError("--out", "cannot write '" + opt.out + "'");
  return body(f);
}

double single_lambda(const RunConfig& cfg) {
  if (cfg.traffic.size() != 1) throw ConfigError("traffic", "this command needs a single lambda");
  return cfg.traffic.support().front().lambda;
}

int cmd_analyze(const Options& opt) {
  const RunConfig cfg = load(opt);
  return with_output(opt, [&](std::ostream& os) {
    os << "scenario,lambda,metric,value\n";
    for (const auto& pt : cfg.traffic.support()) {
      const double lam = pt.lambda;
      const QueueMetrics q = queue_metrics(lam, cfg.scenario, cfg.service);
      const VacationSeriesSums ss = series_sums(lam, cfg.scenario);
      const MarkovBounds mb = excess_waiting_bounds(lam, cfg.scenario, cfg.service, cfg.analyze_w);
      const EnergyMetrics em = gain(lam, cfg.scenario, cfg.service, cfg.energy);
      const std::vector<std::pair<const char*, double>> rows = {
          {"rho", q.rho},       {"e_zeta", ss.e_zeta},     {"e_idle", ss.e_idle},
          {"e_n", q.e_n},       {"e_n2", q.e_n2},          {"e_x", q.e_x},
          {"e_b", q.e_b},       {"e_w", q.e_w},            {"e_w2", q.e_w2},
          {"e_t", q.e_t},       {"m1", mb.m1_bound},       {"m2", mb.m2_bound},
          {"e_no_sleep", em.e_no_sleep}, {"e_sleep", em.e_sleep}, {"gain", em.gain},
          {"gain_simplified", em.gain_simplified}};
      for (const auto& [name, value] : rows)
        os << cfg.scenario.label() << ',' << num(lam) << ',' << name << ',' << num(value) << '\n';
    }
    return kOk;
  });
}

SimConfig sim_config(const RunConfig& cfg, double lambda) {
  SimConfig sc;
  sc.lambda = lambda;
  sc.scenario = cfg.scenario;
  sc.service = cfg.service;
  sc.profile = cfg.energy;
  sc.n_cycles = cfg.n_cycles;
  sc.seed = cfg.seed;
  sc.batch_count = cfg.batches;
  sc.wait_threshold = cfg.wait_threshold;
  return sc;
}

std::string config_columns(const RunConfig& cfg, double lambda) {
  const auto& p = cfg.scenario.params;
  std::ostringstream os;
  os << cfg.scenario.label() << ',' << num(lambda) << ',' << num(p.t_min) << ',' << num(p.a) << ','
     << p.l << ',' << num(p.t_t) << ',' << num(p.t_w) << ',' << num(p.t_l) << ',' << cfg.n_cycles
     << ',' << cfg.seed;
  return os.str();
}

int cmd_simulate(const Options& opt) {
  const RunConfig cfg = load(opt);
  return with_output(opt, [&](std::ostream& os) {
    os << "scenario,lambda,t_min,a,l,t_t,t_w,t_l,n_cycles,seed,metric,estimate,stderr\n";
    for (const auto& pt : cfg.traffic.support()) {
      const SimResult r = run_simulation(sim_config(cfg, pt.lambda));
      const std::string prefix = config_columns(cfg, pt.lambda);
      for (const auto& [name, est] : r.metrics())
        os << prefix << ',' << name << ',' << num(est.value) << ',' << num(est.std_error) << '\n';
    }
    return kOk;
  });
}

int cmd_validate(const Options& opt) {
  const RunConfig cfg = load(opt);
  return with_output(opt, [&](std::ostream& os) {
    os << "scenario,lambda,metric,analytic,estimate,stderr,z,pass\n";
    std::size_t passed = 0, total = 0;
    for (const auto& pt : cfg.traffic.support()) {
      const ValidationReport rep = validate(sim_config(cfg, pt.lambda));
      for (const auto& row : rep.rows) {
        os << cfg.scenario.label() << ',' << num(pt.lambda) << ',' << row.metric << ','
           << num(row.analytic) << ',' << num(row.estimate) << ',' << num(row.std_error) << ','
           << num(row.z) << ',' << (row.pass ? 1 : 0) << '\n';
        passed += row.pass ? 1 : 0;
        ++total;
      }
    }
    std::cerr << "validate: " << passed << "/" << total << " metrics within z <= 3\n";
    return kOk;
  });
}

void set_variable(const std::string& name, double v, double& lambda, ProtocolParams& p) {
  if (name == "lambda") lambda = v;
  else if (name == "t_min") p.t_min = v;
  else if (name == "a") p.a = v;
  else if (name == "l") p.l = static_cast<int>(std::lround(v));
  else p.t_t = v;
}

int cmd_sweep(const Options& opt) {
  const RunConfig cfg = load(opt);
  if (!cfg.has_sweep) throw ConfigError("sweep", "missing required block");
  double points = 1.0;
  for (const auto& v : cfg.sweep) points *= v.range.count();
  if (points > kGridPointLimit) throw GridTooLarge(points, kGridPointLimit);
  bool sweeps_lambda = false;
  for (const auto& v : cfg.sweep) sweeps_lambda = sweeps_lambda || v.name == "lambda";
  const double base_lambda = sweeps_lambda ? 0.0 : single_lambda(cfg);

  const auto first = cfg.sweep[0].range.values();
  const auto second = cfg.sweep.size() == 2 ? cfg.sweep[1].range.values() : std::vector<double>{0.0};
  return with_output(opt, [&](std::ostream& os) {
    os << "scenario," << cfg.sweep[0].name;
    if (cfg.sweep.size() == 2) os << ',' << cfg.sweep[1].name;
    os << ",e_t,gain\n";
    for (double x : first) {
      for (double y : second) {
        double lambda = base_lambda;
        SleepWindowScenario sc = cfg.scenario;
        set_variable(cfg.sweep[0].name, x, lambda, sc.params);
        if (cfg.sweep.size() == 2) set_variable(cfg.sweep[1].name, y, lambda, sc.params);
        try {
          sc.params.validate();
        } catch (const DomainError& e) {
          throw ConfigError("sweep", e.what());
        }
        double e_t = std::nan(""), g = std::nan("");
        try {
          e_t = sojourn_time(lambda, sc, cfg.service);
          g = gain(lambda, sc, cfg.service, cfg.energy).gain;
        } catch (const InstabilityError&) {
          // unstable points are reported as nan
        }
        os << sc.label() << ',' << num(x);
        if (cfg.sweep.size() == 2) os << ',' << num(y);
        os << ',' << num(e_t) << ',' << num(g) << '\n';
      }
    }
    return kOk;
  });
}

const char* mode_name(OptMode m) {
  return m == OptMode::Direct ? "direct" : m == OptMode::Expectation ? "expectation" : "worstcase";
}

int cmd_optimize(const Options& opt) {
  const RunConfig cfg = load(opt);
  if (!cfg.optimize) throw ConfigError("optimize", "missing required block");
  const OptimizationProblem& pb = *cfg.optimize;
  const OptimizationResult res = solve(pb);
  const int rc = with_output(opt, [&](std::ostream& os) {
    os << "scenario,mode,objective,constraint,t_qos,feasible,t_min,a,l,objective_value,feasible_points,grid_size\n";
    os << cfg.scenario.label() << ',' << mode_name(pb.mode) << ','
       << (pb.objective == OptObjective::MaximizeGain ? "gain" : "energy") << ','
       << (pb.constraint == OptConstraint::Hard ? "hard" : "soft") << ',' << num(pb.t_qos) << ','
       << (res.feasible ? 1 : 0) << ',';
    if (res.feasible)
      os << num(res.theta.t_min) << ',' << num(res.theta.a) << ',' << res.theta.l << ','
         << num(res.objective);
    else
      os << ",,,";
    os << ',' << res.diagnostics.feasible_count << ',' << num(res.diagnostics.grid_size) << '\n';
    return kOk;
  });

  std::cerr << cfg.scenario.label() << ' ' << mode_name(pb.mode) << ": ";
  if (!res.feasible) {
    std::cerr << "no feasible point among " << num(res.diagnostics.grid_size) << '\n';
    return kInfeasible;
  }
  std::cerr << "t_min=" << num(res.theta.t_min) << " a=" << num(res.theta.a) << " l=" << res.theta.l
            << " objective=" << num(res.objective) << " (" << res.diagnostics.feasible_count << " of "
            << num(res.diagnostics.grid_size) << " points feasible)\n";
  const auto& sup = pb.lambdas.support();
  for (std::size_t i = 0; i < sup.size(); ++i)
    std::cerr << "  lambda=" << num(sup[i].lambda) << " gain=" << num(res.gain_per_lambda[i])
              << " e_t=" << num(res.sojourn_per_lambda[i]) << '\n';
  if (res.diagnostics.at_default.feasible)
    std::cerr << "  objective at configured parameters: " << num(res.diagnostics.at_default.objective) << '\n';
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power-save vacation queue: analysis, simulation and tuning"};
  app.require_subcommand(1);
  Options opt;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Command commands[] = {
      {"analyze", "Closed-form metrics", cmd_analyze},
      {"simulate", "Regenerative simulation with batch-means errors", cmd_simulate},
      {"validate", "Analytic values against simulation (z-scores)", cmd_validate},
      {"sweep", "E[T] and gain over a one or two dimensional grid", cmd_sweep},
      {"optimize", "Grid search for the best protocol parameters", cmd_optimize},
  };
  int (*selected)(const Options&) = nullptr;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opt.config, "JSON config file");
    sub->add_option("--out", opt.out, "Output CSV path (default stdout)");
    sub->add_option("--seed", opt.seed, "Simulation seed");
    sub->add_option("--override", opt.overrides, "Dotted key=value, e.g. scenario.t_min=5");
    sub->callback([&selected, run = c.run] { selected = run; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    return selected(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InstabilityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnstable;
  } catch (const GridTooLarge& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kGridRefused;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}
