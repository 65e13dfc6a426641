#pragma once

// Subcommands behind the funnelctl executable. Each returns a process exit
// code: 0 ok, 1 check or expectation failure, 2 funnel violation,
// 3 numerical stall, 4 input error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <unistd.h>

#include "funnelctl/assumptions.hpp"
#include "funnelctl/errors.hpp"
#include "funnelctl/normalform.hpp"
#include "funnelctl/scenario.hpp"
#include "funnelctl/simulator.hpp"

namespace funnelctl {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitFunnelViolation = 2,
  kExitStalled = 3,
  kExitInputError = 4,
};

/// Writes through a temporary file in the target directory, then renames.
inline void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
  }
}

inline void emit(const std::string& content, const std::string& path, std::ostream& fallback) {
  if (path.empty())
    fallback << content;
  else
    write_atomic(path, content);
}

inline json report_json(const AssumptionReport& rep) {
  json checks = json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name},
                      {"grid",
                       {{"start", c.grid.start},
                        {"end", c.grid.end},
                        {"points", c.grid.points},
                        {"spacing", c.grid.spacing}}},
                      {"worst", c.worst},
                      {"worst_time", c.worst_time},
                      {"threshold", c.threshold},
                      {"pass", c.pass},
                      {"heuristic", c.heuristic},
                      {"detail", c.detail}});
  return {{"r", rep.r},
          {"q", rep.q},
          {"q_equals_p", rep.q_equals_p},
          {"all_pass", rep.all_pass()},
          {"checks", checks}};
}

inline AssumptionReport run_check(const Scenario& s, int grid_points = 0) {
  const auto grid = s.check_grid(grid_points);
  return check_assumptions(s.plant(), s.r, grid, s.check);
}

inline int cmd_check(const Scenario& s, const std::string& out_path, int grid_points,
                     std::ostream& out, std::ostream& err) {
  try {
    const AssumptionReport rep = run_check(s, grid_points);
    emit(report_json(rep).dump(2) + "\n", out_path, out);
    for (const auto& c : rep.checks)
      if (!c.pass) err << "check failed: " << c.name << " (" << c.detail << ")\n";
    return rep.all_pass() ? kExitOk : kExitCheckFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

inline json normal_form_json(const NormalForm& nf) {
  using scenario_detail::to_json;
  json r = json::array(), p = json::array();
  for (const auto& m : nf.R) r.push_back(to_json(m));
  for (const auto& m : nf.P) p.push_back(to_json(m));
  return {{"t", nf.t},
          {"r", nf.r},
          {"U", to_json(nf.U)},
          {"Udot", to_json(nf.Udot)},
          {"Uinv", to_json(nf.Uinv)},
          {"Gamma", to_json(nf.gamma)},
          {"GammaL", to_json(nf.gamma_L)},
          {"blocks",
           {{"R", r},
            {"S", to_json(nf.S)},
            {"P", p},
            {"Q", to_json(nf.Q)},
            {"N", to_json(nf.N)},
            {"A_hat", to_json(nf.A_hat)},
            {"B_hat", to_json(nf.B_hat)},
            {"C_hat", to_json(nf.C_hat)}}},
          {"residuals",
           {{"U_Uinv_minus_I", nf.inverse_residual}, {"structure", nf.structure_residual}}}};
}

inline int cmd_normalform(const Scenario& s, double t, const std::string& out_path,
                          std::ostream& out, std::ostream& err) {
  json doc;
  try {
    const NormalFormBuilder builder(s.plant(), s.r, s.check.tol);
    const NormalForm nf = builder.blocks(t);
    doc = normal_form_json(nf);
    json w = {{"method", to_string(s.method)}};
    try {
      const WeightResult wr =
          builder.weight_from(nf, t, s.method, s.explicit_k, s.check.alpha_weight);
      w["K"] = scenario_detail::to_json(wr.K);
      w["min_sym_eig"] = wr.min_sym_eig;
      w["nk_residual"] = wr.nk_residual;
      w["identity_residual"] = wr.identity_residual;
      w["definite"] = wr.definite;
      w["warnings"] = wr.warnings;
    } catch (const StructureError& e) {
      w["error"] = e.what();
    }
    doc["weight"] = w;
    doc["checks"] = report_json(run_check(s));
  } catch (const StructureError& e) {
    err << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  try {
    emit(doc.dump(2) + "\n", out_path, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitOk;
}

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trace_csv(const Trace& tr) {
  std::ostringstream os;
  os << "t";
  for (int i = 1; i <= tr.p; ++i) os << ",y_" << i;
  for (int i = 1; i <= tr.p; ++i) os << ",yref_" << i;
  for (int i = 0; i < tr.r; ++i) os << ",enorm_" << i << ",margin_" << i << ",k_" << i;
  for (int i = 1; i <= tr.m; ++i) os << ",u_" << i;
  for (int i = 1; i <= tr.m; ++i) os << ",ueff_" << i;
  for (int i = 1; i <= tr.n; ++i) os << ",x_" << i;
  os << "\n";
  for (const auto& s : tr.samples) {
    os << format_g17(s.t);
    auto vec = [&](const Vec& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << format_g17(v(i));
    };
    vec(s.y);
    vec(s.yref);
    for (int i = 0; i < tr.r; ++i)
      os << ',' << format_g17(s.enorm[i]) << ',' << format_g17(s.margin[i]) << ','
         << format_g17(s.gain[i]);
    vec(s.u);
    vec(s.ueff);
    vec(s.x);
    os << "\n";
  }
  return os.str();
}

struct Window {
  double start = 0.0;
  double end = 0.0;
};

struct ExpectationResult {
  Expectation spec;
  double observed = 0.0;
  bool pass = false;
};

struct Summary {
  std::size_t samples = 0;
  std::vector<double> max_margin;   // per level
  std::vector<double> min_epsilon;  // 1 - max_margin
  std::vector<double> max_gain;
  double max_norm_u = 0.0;
  double max_norm_x = 0.0;
  std::vector<std::pair<int, std::vector<Window>>> saturation;
  std::vector<ExpectationResult> expectations;
  bool expectations_pass = true;
};

/// Intervals of consecutive samples on which a saturating actuator operates
/// beyond its threshold while its saturation is engaged.
inline std::vector<Window> saturation_windows(const Trace& tr, const ActuatorNonlinearity& g,
                                              int actuator) {
  std::vector<Window> out;
  bool open = false;
  for (const auto& s : tr.samples) {
    const bool engaged = g.kind != ActuatorNonlinearity::Kind::gated_saturation ||
                         g.gate.value(s.t) > 1e-6;
    const bool active = engaged && std::abs(s.u(actuator)) > g.threshold;
    if (active && !open) {
      out.push_back({s.t, s.t});
      open = true;
    } else if (active) {
      out.back().end = s.t;
    } else {
      open = false;
    }
  }
  return out;
}

inline ExpectationResult evaluate(const Expectation& e, const Trace& tr) {
  ExpectationResult res;
  res.spec = e;
  constexpr double slack = 1e-12;
  if (e.kind == "margin_below") {
    double worst = 0.0;
    for (const auto& s : tr.samples)
      for (double m : s.margin) worst = std::max(worst, m);
    res.observed = worst;
    res.pass = !tr.samples.empty() && worst < e.value;
    return res;
  }
  double peak = 0.0;
  bool any = false;
  for (const auto& s : tr.samples) {
    if (s.t < e.t_from - slack || s.t > e.t_to + slack) continue;
    any = true;
    peak = std::max(peak, std::abs(s.ueff(e.actuator)));
  }
  res.observed = peak;
  if (e.kind == "ueff_bound")
    res.pass = any && peak <= e.value;
  else if (e.kind == "ueff_reaches")
    res.pass = any && peak >= e.value;
  else if (e.kind == "ueff_vanishes")
    res.pass = any && peak < e.value;
  return res;
}

inline Summary summarize(const Trace& tr, const Scenario& s) {
  Summary sm;
  sm.samples = tr.samples.size();
  sm.max_margin.assign(tr.r, 0.0);
  sm.max_gain.assign(tr.r, 0.0);
  for (const auto& x : tr.samples) {
    for (int i = 0; i < tr.r; ++i) {
      sm.max_margin[i] = std::max(sm.max_margin[i], x.margin[i]);
      sm.max_gain[i] = std::max(sm.max_gain[i], x.gain[i]);
    }
    sm.max_norm_u = std::max(sm.max_norm_u, x.u.norm());
    sm.max_norm_x = std::max(sm.max_norm_x, x.x.norm());
  }
  for (double m : sm.max_margin) sm.min_epsilon.push_back(1.0 - m);
  for (int a = 0; a < s.m(); ++a)
    if (s.nonlinearity[a].is_saturating())
      sm.saturation.emplace_back(a, saturation_windows(tr, s.nonlinearity[a], a));
  for (const auto& e : s.expectations) {
    sm.expectations.push_back(evaluate(e, tr));
    sm.expectations_pass = sm.expectations_pass && sm.expectations.back().pass;
  }
  return sm;
}

inline json summary_json(const Summary& sm) {
  json sat = json::array();
  for (const auto& [a, ws] : sm.saturation) {
    json arr = json::array();
    for (const auto& w : ws) arr.push_back({w.start, w.end});
    sat.push_back({{"actuator", a}, {"windows", arr}});
  }
  json ex = json::array();
  for (const auto& r : sm.expectations) {
    json j = {{"kind", r.spec.kind}, {"value", r.spec.value}, {"observed", r.observed},
              {"pass", r.pass}};
    if (r.spec.kind != "margin_below") {
      j["actuator"] = r.spec.actuator;
      j["t_from"] = r.spec.t_from;
      j["t_to"] = r.spec.t_to;
    }
    ex.push_back(std::move(j));
  }
  return {{"samples", sm.samples},
          {"max_margin", sm.max_margin},
          {"min_epsilon", sm.min_epsilon},
          {"max_gain", sm.max_gain},
          {"max_norm_u", sm.max_norm_u},
          {"max_norm_x", sm.max_norm_x},
          {"saturation_windows", sat},
          {"expectations", ex},
          {"expectations_pass", sm.expectations_pass}};
}

struct SimulateOptions {
  std::string csv_path;      // empty: stdout
  std::string summary_path;  // empty: stderr
  std::optional<double> rtol, atol;
  bool allow_failed_check = false;
};

struct SimulateOutcome {
  int exit_code = kExitOk;
  std::string status;
  Trace trace;
  json summary;
};

/// Runs the assumption check and the closed-loop simulation; never throws.
inline SimulateOutcome run_simulation(const Scenario& s, const SimulateOptions& opt) {
  SimulateOutcome oc;
  json doc = {{"scenario", s.name}};
  AssumptionReport rep;
  try {
    rep = run_check(s);
  } catch (const Error& e) {
    oc.exit_code = kExitInputError;
    oc.status = "input_error";
    doc["status"] = oc.status;
    doc["error"] = e.what();
    doc["exit_code"] = oc.exit_code;
    oc.summary = doc;
    return oc;
  }
  doc["checks"] = report_json(rep);
  if (!rep.all_pass() && !(opt.allow_failed_check || s.allow_failed_check)) {
    oc.exit_code = kExitCheckFailed;
    oc.status = "check_failed";
  } else {
    IntegratorOptions io = s.integrator();
    if (opt.rtol) io.rtol = *opt.rtol;
    if (opt.atol) io.atol = *opt.atol;
    doc["integrator"] = {{"method", "dopri45"}, {"rtol", io.rtol}, {"atol", io.atol},
                         {"output_dt", io.output_dt}, {"t_end", io.t_end}};
    try {
      const ClosedLoop sys = s.closed_loop();
      try {
        integrate_into(sys, io, oc.trace);
        oc.status = "ok";
      } catch (const FunnelViolation& v) {
        oc.exit_code = kExitFunnelViolation;
        oc.status = "funnel_violation";
        doc["violation"] = {{"level", v.index()},
                            {"time", v.time()},
                            {"margin", v.margin()},
                            {"last_time", v.last_time},
                            {"last_state", scenario_detail::to_json(v.last_state)}};
      } catch (const IntegrationStalled& e) {
        oc.exit_code = kExitStalled;
        oc.status = "stalled";
        doc["stall"] = {{"time", e.time()}, {"step", e.step()},
                        {"state", scenario_detail::to_json(e.state())}};
      } catch (const StructureError& e) {
        oc.exit_code = kExitCheckFailed;
        oc.status = "structure_error";
        doc["error"] = e.what();
      } catch (const Error& e) {
        oc.exit_code = kExitStalled;
        oc.status = "numerical_error";
        doc["error"] = e.what();
      }
    } catch (const Error& e) {
      oc.exit_code = kExitInputError;
      oc.status = "input_error";
      doc["error"] = e.what();
    }
    const Summary sm = summarize(oc.trace, s);
    doc["summary"] = summary_json(sm);
    doc["stats"] = {{"accepted", oc.trace.stats.accepted},
                    {"rejected", oc.trace.stats.rejected},
                    {"domain_rejections", oc.trace.stats.domain_rejections},
                    {"rhs_evals", oc.trace.stats.rhs_evals}};
    if (oc.exit_code == kExitOk && !sm.expectations_pass) {
      oc.exit_code = kExitCheckFailed;
      oc.status = "expectation_failed";
    }
  }
  doc["status"] = oc.status;
  doc["exit_code"] = oc.exit_code;
  oc.summary = std::move(doc);
  return oc;
}

inline int cmd_simulate(const Scenario& s, const SimulateOptions& opt, std::ostream& out,
                        std::ostream& err) {
  const SimulateOutcome oc = run_simulation(s, opt);
  try {
    if (!oc.trace.samples.empty() || oc.status != "check_failed")
      emit(trace_csv(oc.trace), opt.csv_path, out);
    emit(oc.summary.dump(2) + "\n", opt.summary_path, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  if (oc.exit_code != kExitOk) err << "simulate: " << oc.status << "\n";
  return oc.exit_code;
}

}  // namespace funnelctl
