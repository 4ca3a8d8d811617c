#pragma once

// JSON run configuration. Every block is optional and defaults to the reference
// setup (exp(1) service, C_low/C_high = C_listen/C_high = 0.2, C_sleep = 0,
// t_min = 2, a = 2, l = 9, t_t = 0, t_w = t_l = 1). Unknown keys are rejected.
//
//   {
//     "traffic":  {"lambda": 0.1}  or  {"distribution": [{"lambda": 0.02, "p": 0.3125}, ...]}
//                                  or  {"distribution": "light"},
//     "scenario": {"name": "D-I", "t_min": 2, "a": 2, "l": 9, "t_t": 0, "t_w": 1, "t_l": 1},
//     "service":  {"kind": "exponential", "mean": 1},
//     "energy":   {"c_high": 1, "c_listen": 0.2, "c_low": 0.2, "c_sleep": 0},
//     "analyze":  {"w": 20},
//     "simulate": {"n_cycles": 100000, "seed": 1, "batches": 30, "wait_threshold": 20},
//     "sweep":    {"variables": [{"name": "lambda", "lo": 0.1, "hi": 0.9, "step": 0.1}]},
//     "optimize": {"mode": "expectation", "objective": "gain", "constraint": "hard",
//                  "t_qos": 50, "vars": {"t_min": {"lo": 1, "hi": 100, "step": 1}}}
//   }
//
// t_t and t_qos accept the string "inf".

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dist.hpp"
#include "energy.hpp"
#include "errors.hpp"
#include "optimize.hpp"
#include "policy.hpp"

namespace sleepq {

using json = nlohmann::json;

struct SweepVariable {
  std::string name;  // lambda, t_min, a, l or t_t
  GridRange range;
};

struct RunConfig {
  LambdaDistribution traffic = LambdaDistribution::single(0.1);
  std::string scenario_name = "D-I";
  SleepWindowScenario scenario = make_scenario("D-I", {});
  ServiceDistribution service = ServiceDistribution::exponential(1.0);
  EnergyProfile energy;
  double analyze_w = 20.0;
  long n_cycles = 100'000;
  std::uint64_t seed = 1;
  int batches = 30;
  std::optional<double> wait_threshold;
  std::vector<SweepVariable> sweep;
  bool has_sweep = false;
  std::optional<OptimizationProblem> optimize;
};

namespace detail {

inline void allow_keys(const json& obj, const std::string& block,
                       std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(block, "expected an object");
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (const char* allowed : keys) known = known || k == allowed;
    if (!known) throw ConfigError(block.empty() ? k : block + "." + k, "unknown field");
  }
}

inline double get_number(const json& obj, const std::string& path, const char* key,
                         std::optional<double> fallback, bool allow_inf = false) {
  const std::string field = path + "." + key;
  if (!obj.contains(key)) {
    if (!fallback) throw ConfigError(field, "missing required field");
    return *fallback;
  }
  const json& v = obj.at(key);
  if (allow_inf && v.is_string() && v.get<std::string>() == "inf") return kInfinity;
  if (!v.is_number()) throw ConfigError(field, allow_inf ? "expected a number or \"inf\"" : "expected a number");
  return v.get<double>();
}

inline std::string get_string(const json& obj, const std::string& path, const char* key,
                              std::optional<std::string> fallback) {
  const std::string field = path + "." + key;
  if (!obj.contains(key)) {
    if (!fallback) throw ConfigError(field, "missing required field");
    return *fallback;
  }
  if (!obj.at(key).is_string()) throw ConfigError(field, "expected a string");
  return obj.at(key).get<std::string>();
}

inline long get_integer(const json& obj, const std::string& path, const char* key, long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(path + "." + key, "expected an integer");
  return v.get<long>();
}

// Re-throws library validation failures as config errors attributed to a block.
template <class F>
auto in_block(const std::string& block, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const DomainError& e) {
    throw ConfigError(block, e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(block, e.what());
  }
}

inline GridRange parse_range(const json& obj, const std::string& path) {
  allow_keys(obj, path, {"lo", "hi", "step"});
  GridRange r{get_number(obj, path, "lo", std::nullopt), get_number(obj, path, "hi", std::nullopt),
              get_number(obj, path, "step", std::nullopt)};
  in_block(path, [&] { r.validate(path); return 0; });
  return r;
}

inline LambdaDistribution parse_traffic(const json& t) {
  allow_keys(t, "traffic", {"lambda", "distribution"});
  if (t.contains("lambda") && t.contains("distribution"))
    throw ConfigError("traffic", "give either lambda or distribution, not both");
  if (t.contains("lambda"))
    return in_block("traffic.lambda", [&] {
      return LambdaDistribution::single(get_number(t, "traffic", "lambda", std::nullopt));
    });
  if (!t.contains("distribution")) throw ConfigError("traffic.lambda", "missing required field");
  const json& d = t.at("distribution");
  if (d.is_string()) {
    if (d.get<std::string>() == "light") return LambdaDistribution::light_traffic();
    throw ConfigError("traffic.distribution", "unknown named distribution (expected \"light\")");
  }
  if (!d.is_array()) throw ConfigError("traffic.distribution", "expected an array or \"light\"");
  std::vector<LambdaPoint> pts;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::string path = "traffic.distribution[" + std::to_string(i) + "]";
    allow_keys(d[i], path, {"lambda", "p"});
    pts.push_back({get_number(d[i], path, "lambda", std::nullopt), get_number(d[i], path, "p", std::nullopt)});
  }
  return in_block("traffic.distribution", [&] { return LambdaDistribution(pts); });
}

inline ServiceDistribution parse_service(const json& s) {
  const std::string kind = get_string(s, "service", "kind", std::nullopt);
  return in_block("service", [&] {
    if (kind == "deterministic") {
      allow_keys(s, "service", {"kind", "value"});
      return ServiceDistribution::deterministic(get_number(s, "service", "value", std::nullopt));
    }
    if (kind == "exponential") {
      allow_keys(s, "service", {"kind", "mean"});
      return ServiceDistribution::exponential(get_number(s, "service", "mean", std::nullopt));
    }
    if (kind == "erlang") {
      allow_keys(s, "service", {"kind", "k", "mean"});
      if (!s.contains("k")) throw ConfigError("service.k", "missing required field");
      return ServiceDistribution::erlang(static_cast<int>(get_integer(s, "service", "k", 1)),
                                         get_number(s, "service", "mean", std::nullopt));
    }
    if (kind == "hyperexp2") {
      allow_keys(s, "service", {"kind", "p", "mean1", "mean2"});
      return ServiceDistribution::hyperexp2(get_number(s, "service", "p", std::nullopt),
                                            get_number(s, "service", "mean1", std::nullopt),
                                            get_number(s, "service", "mean2", std::nullopt));
    }
    throw ConfigError("service.kind", "unknown kind '" + kind +
                                          "' (deterministic, exponential, erlang, hyperexp2)");
  });
}

inline std::optional<GridRange> parse_var(const json& vars, const char* key, GridRange fallback) {
  if (!vars.contains(key)) return std::nullopt;
  const json& v = vars.at(key);
  if (v.is_boolean()) return v.get<bool>() ? std::optional<GridRange>(fallback) : std::nullopt;
  return parse_range(v, std::string("optimize.vars.") + key);
}

}  // namespace detail

/// Default decision-variable grids: t_min 1..100 step 1, a 1..10 step 0.25, l 0..10.
inline GridRange default_range(const std::string& var) {
  if (var == "t_min") return {1.0, 100.0, 1.0};
  if (var == "a") return {1.0, 10.0, 0.25};
  if (var == "l") return {0.0, 10.0, 1.0};
  throw DomainError("no default range for '" + var + "'");
}

inline RunConfig parse_config(const json& root) {
  using namespace detail;
  allow_keys(root, "", {"traffic", "scenario", "service", "energy", "analyze", "simulate", "sweep", "optimize"});
  RunConfig cfg;

  if (root.contains("traffic")) cfg.traffic = parse_traffic(root.at("traffic"));

  if (root.contains("scenario")) {
    const json& s = root.at("scenario");
    allow_keys(s, "scenario", {"name", "t_min", "a", "l", "t_t", "t_w", "t_l"});
    ProtocolParams p;
    cfg.scenario_name = get_string(s, "scenario", "name", std::string("D-I"));
    p.t_min = get_number(s, "scenario", "t_min", p.t_min);
    p.a = get_number(s, "scenario", "a", p.a);
    p.l = static_cast<int>(get_integer(s, "scenario", "l", p.l));
    p.t_t = get_number(s, "scenario", "t_t", p.t_t, true);
    p.t_w = get_number(s, "scenario", "t_w", p.t_w);
    p.t_l = get_number(s, "scenario", "t_l", p.t_l);
    cfg.scenario = in_block("scenario", [&] { return make_scenario(cfg.scenario_name, p); });
  }

  if (root.contains("service")) cfg.service = parse_service(root.at("service"));

  if (root.contains("energy")) {
    const json& e = root.at("energy");
    allow_keys(e, "energy", {"c_high", "c_listen", "c_low", "c_sleep"});
    EnergyProfile& prof = cfg.energy;
    prof.c_high = get_number(e, "energy", "c_high", prof.c_high);
    prof.c_listen = get_number(e, "energy", "c_listen", prof.c_listen);
    prof.c_low = get_number(e, "energy", "c_low", prof.c_low);
    prof.c_sleep = get_number(e, "energy", "c_sleep", prof.c_sleep);
    in_block("energy", [&] { prof.validate(); return 0; });
  }

  if (root.contains("analyze")) {
    const json& a = root.at("analyze");
    allow_keys(a, "analyze", {"w"});
    cfg.analyze_w = get_number(a, "analyze", "w", cfg.analyze_w);
    if (!(cfg.analyze_w > 0.0)) throw ConfigError("analyze.w", "must be > 0");
  }

  if (root.contains("simulate")) {
    const json& s = root.at("simulate");
    allow_keys(s, "simulate", {"n_cycles", "seed", "batches", "wait_threshold"});
    cfg.n_cycles = get_integer(s, "simulate", "n_cycles", cfg.n_cycles);
    if (s.contains("seed")) {
      if (!s.at("seed").is_number_unsigned()) throw ConfigError("simulate.seed", "expected an unsigned integer");
      cfg.seed = s.at("seed").get<std::uint64_t>();
    }
    cfg.batches = static_cast<int>(get_integer(s, "simulate", "batches", cfg.batches));
    if (s.contains("wait_threshold"))
      cfg.wait_threshold = get_number(s, "simulate", "wait_threshold", std::nullopt);
    if (cfg.batches < 2) throw ConfigError("simulate.batches", "must be >= 2");
    if (cfg.n_cycles < cfg.batches) throw ConfigError("simulate.n_cycles", "must be >= batches");
  }

  if (root.contains("sweep")) {
    const json& s = root.at("sweep");
    allow_keys(s, "sweep", {"variables"});
    if (!s.contains("variables")) throw ConfigError("sweep.variables", "missing required field");
    const json& vars = s.at("variables");
    if (!vars.is_array() || vars.empty() || vars.size() > 2)
      throw ConfigError("sweep.variables", "expected one or two variables");
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const std::string path = "sweep.variables[" + std::to_string(i) + "]";
      allow_keys(vars[i], path, {"name", "lo", "hi", "step"});
      SweepVariable v;
      v.name = get_string(vars[i], path, "name", std::nullopt);
      if (v.name != "lambda" && v.name != "t_min" && v.name != "a" && v.name != "l" && v.name != "t_t")
        throw ConfigError(path + ".name", "unknown sweep variable '" + v.name + "'");
      json bounds = vars[i];
      bounds.erase("name");
      v.range = parse_range(bounds, path);
      cfg.sweep.push_back(v);
    }
    if (cfg.sweep.size() == 2 && cfg.sweep[0].name == cfg.sweep[1].name)
      throw ConfigError("sweep.variables", "the two sweep variables must differ");
    cfg.has_sweep = true;
  }

  if (root.contains("optimize")) {
    const json& o = root.at("optimize");
    allow_keys(o, "optimize", {"mode", "objective", "constraint", "t_qos", "vars", "threads"});
    OptimizationProblem pb;
    const std::string mode = get_string(o, "optimize", "mode", std::string("direct"));
    if (mode == "direct") pb.mode = OptMode::Direct;
    else if (mode == "expectation") pb.mode = OptMode::Expectation;
    else if (mode == "worstcase") pb.mode = OptMode::WorstCase;
    else throw ConfigError("optimize.mode", "expected direct, expectation or worstcase");
    const std::string obj = get_string(o, "optimize", "objective", std::string("gain"));
    if (obj == "gain") pb.objective = OptObjective::MaximizeGain;
    else if (obj == "energy") pb.objective = OptObjective::MinimizeEnergySleep;
    else throw ConfigError("optimize.objective", "expected gain or energy");
    const std::string con = get_string(o, "optimize", "constraint", std::string("hard"));
    if (con == "hard") pb.constraint = OptConstraint::Hard;
    else if (con == "soft") pb.constraint = OptConstraint::Soft;
    else throw ConfigError("optimize.constraint", "expected hard or soft");
    const double default_qos = cfg.scenario.law == WindowLaw::Deterministic ? 50.0 : 100.0;
    pb.t_qos = get_number(o, "optimize", "t_qos", default_qos, true);
    if (!(pb.t_qos > 0.0)) throw ConfigError("optimize.t_qos", "must be > 0");
    pb.threads = static_cast<unsigned>(get_integer(o, "optimize", "threads", 0));
    if (!o.contains("vars")) throw ConfigError("optimize.vars", "missing required field");
    const json& vars = o.at("vars");
    allow_keys(vars, "optimize.vars", {"t_min", "a", "l"});
    pb.t_min = parse_var(vars, "t_min", default_range("t_min"));
    pb.a = parse_var(vars, "a", default_range("a"));
    pb.l = parse_var(vars, "l", default_range("l"));
    if (!pb.t_min && !pb.a && !pb.l) throw ConfigError("optimize.vars", "no decision variable selected");
    if (cfg.scenario.params.type_two() && (pb.a || pb.l) && cfg.scenario_name.ends_with("-II"))
      throw ConfigError("optimize.vars", "a and l are fixed (a = 1, l = 0) in type II scenarios");
    pb.law = cfg.scenario.law;
    pb.fixed = cfg.scenario.params;
    pb.lambdas = cfg.traffic;
    pb.service = cfg.service;
    pb.profile = cfg.energy;
    if (pb.mode == OptMode::Direct && pb.lambdas.size() != 1)
      throw ConfigError("traffic", "direct optimization takes a single lambda");
    cfg.optimize = pb;
  }
  return cfg;
}

/// Sets a dotted key ("scenario.t_min=5"). The value is read as JSON when it
/// parses, otherwise as a plain string.
inline void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError(assignment, "override must look like key.path=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError(key, "empty path component in override");
    if (!node->is_object()) throw ConfigError(key, "override path crosses a non-object value");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

inline json load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  json root = json::parse(in, nullptr, false, true);
  if (root.is_discarded()) throw ConfigError("config", "'" + path + "' is not valid JSON");
  return root;
}

}  // namespace sleepq
