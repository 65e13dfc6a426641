#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "funnelctl/commands.hpp"
#include "support.hpp"

using namespace fct;
namespace fs = std::filesystem;

namespace {

std::string scenario_path(const std::string& name) {
  return std::string(FUNNELCTL_SCENARIO_DIR) + "/" + name;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("funnelctl_test_" + std::to_string(::getpid()) + "_" + name);
}

std::string write_temp(const std::string& name, const std::string& content) {
  const fs::path p = temp_file(name);
  std::ofstream(p) << content;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(std::move(row));
  }
  return rows;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FUNNELCTL_CLI) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST(Scenario, BuiltinBoeing) {
  const Scenario s = boeing737();
  EXPECT_EQ(s.n(), 5);
  EXPECT_EQ(s.m(), 4);
  EXPECT_EQ(s.p(), 2);
  EXPECT_EQ(s.r, 2);
  EXPECT_EQ(s.funnels.size(), 2u);
  EXPECT_EQ(s.expectations.size(), 4u);
}

TEST(Scenario, FileMatchesBuiltin) {
  const Scenario f = load_scenario(scenario_path("boeing737.json"));
  EXPECT_EQ(to_json(f), to_json(boeing737()));
}

TEST(Scenario, RoundTrip) {
  for (const char* name : {"boeing737.json", "decaying_scalar.json", "uniqueness_2x2.json",
                           "no_weight_counterexample.json", "initial_violation.json"}) {
    const Scenario s = load_scenario(scenario_path(name));
    const json j = to_json(s);
    EXPECT_EQ(to_json(parse_scenario(j)), j) << name;
  }
}

TEST(Scenario, AutoDetectsRelativeDegree) {
  const json doc = json::parse(R"({
    "system": {"n": 1, "m": 1, "p": 1, "A": [[-1]], "B": [[2]], "C": [[1]]},
    "reference": {"kind": "sinusoid", "channels": [{"amplitude": 1}]},
    "funnels": [{"kind": "exp_plus_const", "a": 1, "b": 1, "c": 0.5}]
  })");
  const Scenario s = parse_scenario(doc);
  EXPECT_EQ(s.r, 1);
  EXPECT_FALSE(s.declared_r.has_value());
}

TEST(Scenario, ErrorsNameTheLocation) {
  json doc = to_json(boeing737());
  doc["funnels"].erase(1);
  const std::string path = write_temp("short_funnels.json", doc.dump());
  try {
    load_scenario(path);
    FAIL() << "expected ScenarioError";
  } catch (const ScenarioError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(path), std::string::npos) << msg;
    EXPECT_NE(msg.find("funnels"), std::string::npos) << msg;
  }
  fs::remove(path);

  json bad = to_json(boeing737());
  bad["system"]["A"][0].erase(0);
  try {
    parse_scenario(bad, "x");
    FAIL() << "expected ScenarioError";
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("x.system.A"), std::string::npos) << e.what();
  }

  json wide = to_json(boeing737());
  wide["system"]["p"] = 5;
  EXPECT_THROW(parse_scenario(wide), ScenarioError);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ScenarioError);
  const std::string junk = write_temp("junk.json", "{not json");
  EXPECT_THROW(load_scenario(junk), ScenarioError);
  fs::remove(junk);
}

TEST(Commands, CheckExitCodes) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_check(boeing737(), "", 0, out, err), kExitOk);
  const json rep = json::parse(out.str());
  EXPECT_TRUE(rep["all_pass"].get<bool>());
  std::ostringstream out2, err2;
  EXPECT_EQ(cmd_check(load_scenario(scenario_path("no_weight_counterexample.json")), "", 0, out2, err2),
            kExitCheckFailed);
  bool existence_failed = false;
  const json report = json::parse(out2.str());
  for (const auto& c : report["checks"])
    if (c["name"] == "weight_existence") existence_failed = !c["pass"].get<bool>();
  EXPECT_TRUE(existence_failed);
}

TEST(Commands, NormalFormReport) {
  const fs::path p = temp_file("nf.json");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_normalform(boeing737(), 0.0, p.string(), out, err), kExitOk);
  const json nf = json::parse(slurp(p.string()));
  EXPECT_EQ(nf["r"], 2);
  EXPECT_NEAR(nf["blocks"]["Q"][0][0].get<double>(), -0.1346, 5e-4);
  EXPECT_LT(nf["residuals"]["U_Uinv_minus_I"].get<double>(), 1e-10);
  EXPECT_TRUE(nf.contains("weight"));
  fs::remove(p);
}

TEST(Commands, SimulateCsvMatchesSummary) {
  Scenario s = boeing737();
  s.sim.t_end = 3.0;
  s.expectations.clear();
  const fs::path csv = temp_file("trace.csv");
  const fs::path sum = temp_file("summary.json");
  SimulateOptions opt;
  opt.csv_path = csv.string();
  opt.summary_path = sum.string();
  std::ostringstream out, err;
  ASSERT_EQ(cmd_simulate(s, opt, out, err), kExitOk) << err.str();
  const auto rows = parse_csv(slurp(csv.string()));
  const json sm = json::parse(slurp(sum.string()));
  ASSERT_EQ(rows.size(), 302u);
  const auto& hdr = rows[0];
  EXPECT_EQ(hdr[0], "t");
  auto col = [&](const std::string& name) {
    const auto it = std::find(hdr.begin(), hdr.end(), name);
    EXPECT_NE(it, hdr.end()) << name;
    return static_cast<std::size_t>(it - hdr.begin());
  };
  for (int i = 0; i < 2; ++i) {
    const std::size_t cm = col("margin_" + std::to_string(i));
    const std::size_t ck = col("k_" + std::to_string(i));
    double mm = 0.0, mk = 0.0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      ASSERT_EQ(rows[r].size(), hdr.size());
      mm = std::max(mm, std::stod(rows[r][cm]));
      mk = std::max(mk, std::stod(rows[r][ck]));
    }
    EXPECT_NEAR(mm, sm["summary"]["max_margin"][i].get<double>(), 1e-12);
    EXPECT_NEAR(mk, sm["summary"]["max_gain"][i].get<double>(), 1e-12 * mk);
  }
  double mu = 0.0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    double n2 = 0.0;
    for (int a = 1; a <= 4; ++a) n2 += std::pow(std::stod(rows[r][col("u_" + std::to_string(a))]), 2);
    mu = std::max(mu, std::sqrt(n2));
  }
  EXPECT_NEAR(mu, sm["summary"]["max_norm_u"].get<double>(), 1e-12 * mu);
  EXPECT_EQ(sm["status"], "ok");
  fs::remove(csv);
  fs::remove(sum);
}

TEST(Commands, SimulateViolationAndCheckGate) {
  SimulateOptions opt;
  opt.csv_path = temp_file("v.csv").string();
  opt.summary_path = temp_file("v.json").string();
  std::ostringstream out, err;
  EXPECT_EQ(cmd_simulate(load_scenario(scenario_path("initial_violation.json")), opt, out, err),
            kExitFunnelViolation);
  const json sm = json::parse(slurp(opt.summary_path));
  EXPECT_EQ(sm["violation"]["level"], 0);
  EXPECT_EQ(sm["violation"]["time"], 0.0);

  Scenario decaying = load_scenario(scenario_path("decaying_scalar.json"));
  const SimulateOutcome oc = run_simulation(decaying, SimulateOptions{});
  EXPECT_EQ(oc.exit_code, kExitCheckFailed);
  EXPECT_EQ(oc.status, "check_failed");
  EXPECT_TRUE(oc.trace.samples.empty());
  fs::remove(opt.csv_path);
  fs::remove(opt.summary_path);
}

TEST(Commands, AtomicWriteLeavesNoTemp) {
  const fs::path p = temp_file("atomic.txt");
  write_atomic(p.string(), "hello\n");
  EXPECT_EQ(slurp(p.string()), "hello\n");
  for (const auto& e : fs::directory_iterator(p.parent_path()))
    EXPECT_EQ(e.path().string().find(p.filename().string() + ".tmp"), std::string::npos);
  fs::remove(p);
  EXPECT_THROW(write_atomic("/nonexistent/dir/file.txt", "x"), Error);
}

TEST(Binary, ExitCodes) {
  EXPECT_EQ(run_cli("check boeing737"), 0);
  EXPECT_EQ(run_cli("check " + scenario_path("no_weight_counterexample.json")), 1);
  EXPECT_EQ(run_cli("simulate " + scenario_path("initial_violation.json")), 2);
  EXPECT_EQ(run_cli("check /nonexistent.json"), 4);
  EXPECT_EQ(run_cli("frobnicate"), 4);
  EXPECT_EQ(run_cli("normalform " + scenario_path("uniqueness_2x2.json") + " --time 0"), 0);
}
