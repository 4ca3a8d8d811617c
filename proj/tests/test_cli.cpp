#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sleepq/config.hpp"

using namespace sleepq;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args) {
  const std::string cmd = std::string(SLEEPQ_CLI) + " " + args + " >cli_out.txt 2>cli_err.txt";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return {WEXITSTATUS(status), slurp("cli_out.txt"), slurp("cli_err.txt")};
}

std::string config(const char* name) { return std::string("--config ") + SLEEPQ_CONFIGS + "/" + name; }

std::vector<std::vector<std::string>> csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

// metric -> value from analyze output with a single lambda
std::map<std::string, double> analyze_values(const std::string& text) {
  std::map<std::string, double> m;
  const auto rows = csv(text);
  for (std::size_t i = 1; i < rows.size(); ++i) m[rows[i][2]] = std::stod(rows[i][3]);
  return m;
}

// column `col` of a sweep result
std::vector<double> column(const std::string& text, std::size_t col) {
  std::vector<double> v;
  const auto rows = csv(text);
  for (std::size_t i = 1; i < rows.size(); ++i) v.push_back(std::stod(rows[i][col]));
  return v;
}

}  // namespace

TEST_CASE("analyze without triggering is M/M/1") {
  const auto r = run("analyze --override scenario.t_t=inf --override traffic.lambda=0.5");
  REQUIRE(r.code == 0);
  const auto m = analyze_values(r.out);
  CHECK(m.at("e_t") == Catch::Approx(2.0).epsilon(1e-9));
  CHECK(m.at("gain") == Catch::Approx(0.0).margin(1e-12));
  CHECK(m.at("e_zeta") == 0.0);
}

TEST_CASE("exit codes") {
  auto r = run("analyze --override service.mean=1");
  CHECK(r.code == 1);
  CHECK(r.err.find("service.kind") != std::string::npos);
  r = run("analyze --override scenario.bogus=1");
  CHECK(r.code == 1);
  CHECK(r.err.find("scenario.bogus") != std::string::npos);
  CHECK(run("analyze --config /nonexistent.json").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("analyze --help").code == 0);

  r = run("analyze --override traffic.lambda=1.2");
  CHECK(r.code == 2);
  CHECK(r.err.find("rho") != std::string::npos);

  r = run("sweep --override 'sweep.variables=[{\"name\":\"t_min\",\"lo\":1,\"hi\":1e7,\"step\":1}]'");
  CHECK(r.code == 3);

  r = run("optimize " + config("optimize_p1.json") + " --override optimize.t_qos=0.5");
  CHECK(r.code == 4);
  const auto rows = csv(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][5] == "0");
}

TEST_CASE("simulate output is reproducible") {
  const auto a = run("simulate --override simulate.n_cycles=3000 --seed 5");
  const auto b = run("simulate --override simulate.n_cycles=3000 --seed 5");
  const auto c = run("simulate --override simulate.n_cycles=3000 --seed 6");
  REQUIRE(a.code == 0);
  CHECK(a.out.substr(0, a.out.find('\n')) ==
        "scenario,lambda,t_min,a,l,t_t,t_w,t_l,n_cycles,seed,metric,estimate,stderr");
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);

  REQUIRE(run("simulate --override simulate.n_cycles=3000 --seed 5 --out sim.csv").code == 0);
  CHECK(slurp("sim.csv") == a.out);
}

TEST_CASE("validate reports every metric") {
  const auto r = run("validate --override simulate.n_cycles=20000 --seed 3");
  REQUIRE(r.code == 0);
  const auto rows = csv(r.out);
  CHECK(rows[0].size() == 8);
  CHECK(rows.size() >= 10);
  CHECK(r.err.find("metrics within") != std::string::npos);
}

TEST_CASE("sweeps") {
  auto r = run("sweep " + config("sweep_lambda.json"));
  REQUIRE(r.code == 0);
  const auto g = column(r.out, 3);
  REQUIRE(g.size() == 9);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] < g[i - 1]);

  r = run("sweep --override 'sweep.variables=[{\"name\":\"t_min\",\"lo\":1,\"hi\":60,\"step\":1}]'");
  REQUIRE(r.code == 0);
  const auto et = column(r.out, 2);
  for (std::size_t i = 1; i < et.size(); ++i) CHECK(et[i] >= et[i - 1] - 1e-12);

  r = run("sweep --override 'sweep.variables=[{\"name\":\"t_t\",\"lo\":0,\"hi\":40,\"step\":2}]'");
  REQUIRE(r.code == 0);
  const auto gt = column(r.out, 3);
  for (std::size_t i = 1; i < gt.size(); ++i) CHECK(gt[i] <= gt[i - 1] + 1e-12);
  const auto inf = analyze_values(run("analyze --override scenario.t_t=inf").out);
  CHECK(inf.at("gain") == Catch::Approx(0.0).margin(1e-12));
  CHECK(inf.at("gain") <= gt.back());

  r = run("sweep --override 'sweep.variables=[{\"name\":\"lambda\",\"lo\":0.5,\"hi\":1.5,\"step\":0.5}]'");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("nan") != std::string::npos);
}

TEST_CASE("type II scenario at moderate load") {
  const auto r = run("analyze --override scenario.name=D-II --override traffic.lambda=0.2");
  REQUIRE(r.code == 0);
  const auto m = analyze_values(r.out);
  for (const auto& [k, v] : m) CHECK(std::isfinite(v));
  CHECK(m.at("gain") > 0.0);
  CHECK(m.at("gain") < 1.0);
}

TEST_CASE("direct optimization matches the library") {
  const std::string path = std::string(SLEEPQ_CONFIGS) + "/optimize_p1.json";
  const auto r = run("optimize " + config("optimize_p1.json"));
  REQUIRE(r.code == 0);
  const auto rows = csv(r.out);
  REQUIRE(rows.size() == 2);
  const auto cfg = parse_config(load_config_json(path));
  const auto res = solve(*cfg.optimize);
  REQUIRE(res.feasible);
  CHECK(std::stod(rows[1][6]) == res.theta.t_min);
  CHECK(std::stod(rows[1][9]) == Catch::Approx(res.objective).epsilon(1e-11));
}

TEST_CASE("every sample config runs") {
  for (const auto& entry : fs::directory_iterator(SLEEPQ_CONFIGS)) {
    if (entry.path().extension() != ".json") continue;
    const json root = load_config_json(entry.path().string());
    std::string cmd = "analyze";
    if (root.contains("optimize")) cmd = "optimize";
    else if (root.contains("sweep")) cmd = "sweep";
    INFO(entry.path().filename().string() << " via " << cmd);
    const auto r = run(cmd + " --config " + entry.path().string());
    CHECK(r.code == 0);
    CHECK(csv(r.out).size() >= 2);
  }
}
