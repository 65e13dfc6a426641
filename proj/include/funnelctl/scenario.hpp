#pragma once

// Declarative closed-loop experiments stored as JSON (schema in
// docs/scenario.md). "boeing737" names the built-in lateral-motion case study.

#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "funnelctl/assumptions.hpp"
#include "funnelctl/controller.hpp"
#include "funnelctl/errors.hpp"
#include "funnelctl/linalg.hpp"
#include "funnelctl/normalform.hpp"
#include "funnelctl/plant.hpp"
#include "funnelctl/reference.hpp"
#include "funnelctl/simulator.hpp"

namespace funnelctl {

using json = nlohmann::json;

// Declared outcome of a simulation, checked against the trace.
//   ueff_bound:    |ueff_actuator| <= value on [t_from, t_to]
//   ueff_reaches:  |ueff_actuator| >= value somewhere in [t_from, t_to]
//   ueff_vanishes: |ueff_actuator| <  value on [t_from, t_to]
//   margin_below:  every margin <= value over the run
struct Expectation {
  std::string kind;
  int actuator = 0;
  double t_from = 0.0;
  double t_to = 0.0;
  double value = 0.0;
};

struct SimSettings {
  double t_end = 10.0;
  double rtol = 1e-10;
  double atol = 1e-12;
  double output_dt = 0.01;
  int check_grid_points = 201;
};

struct Scenario {
  std::string name;
  Mat A, B, C;
  Vec x0;
  std::optional<int> declared_r;
  int r = 0;
  std::vector<FaultProfile> reliability;           // one per actuator
  std::vector<ActuatorNonlinearity> nonlinearity;  // one per actuator
  Reference reference;
  std::vector<FunnelSpec> funnels;
  WeightMethod method = WeightMethod::gamma_transpose;
  Mat explicit_k;
  SimSettings sim;
  CheckOptions check;
  bool allow_failed_check = false;
  std::vector<Expectation> expectations;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int p() const { return static_cast<int>(C.rows()); }

  Plant plant() const { return Plant(A, B, C, x0, reliability, nonlinearity); }
  std::vector<double> check_grid(int points = 0) const {
    return uniform_grid(0.0, sim.t_end, points > 0 ? points : sim.check_grid_points);
  }
  ClosedLoop closed_loop() const { return ClosedLoop(plant(), funnels, reference, method, explicit_k); }
  IntegratorOptions integrator() const {
    IntegratorOptions o;
    o.t_end = sim.t_end;
    o.rtol = sim.rtol;
    o.atol = sim.atol;
    o.output_dt = sim.output_dt;
    return o;
  }
};

namespace scenario_detail {

inline const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ScenarioError(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ScenarioError(path + "." + key, "missing required field");
  return *it;
}

inline double num(const json& j, const std::string& path) {
  if (!j.is_number()) throw ScenarioError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ScenarioError(path, "non-finite number");
  return v;
}

inline double num(const json& j, const std::string& key, const std::string& path) {
  return num(field(j, key, path), path + "." + key);
}

inline double num_or(const json& j, const std::string& key, const std::string& path, double dflt) {
  return j.contains(key) ? num(j[key], path + "." + key) : dflt;
}

inline int count(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ScenarioError(path, "expected an integer");
  return j.get<int>();
}

inline std::string str(const json& j, const std::string& key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_string()) throw ScenarioError(path + "." + key, "expected a string");
  return v.get<std::string>();
}

inline Mat matrix(const json& j, const std::string& path, int rows, int cols) {
  if (!j.is_array()) throw ScenarioError(path, "expected a nested array");
  if (static_cast<int>(j.size()) != rows)
    throw ScenarioError(path, "expected " + std::to_string(rows) + " rows, got " +
                                  std::to_string(j.size()));
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const std::string rp = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
      throw ScenarioError(rp, "expected " + std::to_string(cols) + " columns, got " +
                                  (j[i].is_array() ? std::to_string(j[i].size()) : "non-array"));
    for (int k = 0; k < cols; ++k) m(i, k) = num(j[i][k], rp + "[" + std::to_string(k) + "]");
  }
  return m;
}

inline Vec vector(const json& j, const std::string& path, int size) {
  if (!j.is_array()) throw ScenarioError(path, "expected an array");
  if (static_cast<int>(j.size()) != size)
    throw ScenarioError(path, "expected " + std::to_string(size) + " entries, got " +
                                  std::to_string(j.size()));
  Vec v(size);
  for (int i = 0; i < size; ++i) v(i) = num(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

inline json to_json(const Mat& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    a.push_back(std::move(row));
  }
  return a;
}

inline json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline FaultProfile parse_profile(const json& j, const std::string& path) {
  const std::string kind = str(j, "kind", path);
  try {
    if (kind == "constant") return FaultProfile::constant(num(j, "value", path));
    if (kind == "erfc_cutoff")
      return FaultProfile::erfc_cutoff(num(j, "level", path), num(j, "center", path),
                                       num(j, "slope", path));
    if (kind == "erfc_decay")
      return FaultProfile::erfc_decay(num(j, "from", path), num(j, "to", path),
                                      num(j, "center", path), num(j, "slope", path));
    if (kind == "lorentzian")
      return FaultProfile::lorentzian(num(j, "center", path), num(j, "width", path));
    if (kind == "sum" || kind == "product") {
      const std::string key = kind == "sum" ? "terms" : "factors";
      const json& arr = field(j, key, path);
      if (!arr.is_array()) throw ScenarioError(path + "." + key, "expected an array");
      std::vector<FaultProfile> parts;
      for (std::size_t i = 0; i < arr.size(); ++i)
        parts.push_back(parse_profile(arr[i], path + "." + key + "[" + std::to_string(i) + "]"));
      return kind == "sum" ? FaultProfile::sum(std::move(parts))
                           : FaultProfile::product(std::move(parts));
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const Error& e) {
    throw ScenarioError(path, e.what());
  }
  throw ScenarioError(path + ".kind", "unknown profile kind '" + kind + "'");
}

inline json profile_json(const FaultProfile& f) {
  using K = FaultProfile::Kind;
  switch (f.kind()) {
    case K::constant:
      return {{"kind", "constant"}, {"value", f.level()}};
    case K::erfc_cutoff:
      return {{"kind", "erfc_cutoff"}, {"level", f.level()}, {"center", f.center()},
              {"slope", f.slope()}};
    case K::erfc_decay:
      return {{"kind", "erfc_decay"}, {"from", f.level()}, {"to", f.to()},
              {"center", f.center()}, {"slope", f.slope()}};
    case K::lorentzian:
      return {{"kind", "lorentzian"}, {"center", f.center()}, {"width", f.slope()}};
    case K::sum:
    case K::product: {
      json parts = json::array();
      for (const auto& c : f.children()) parts.push_back(profile_json(c));
      const bool sum = f.kind() == K::sum;
      return {{"kind", sum ? "sum" : "product"}, {sum ? "terms" : "factors", parts}};
    }
  }
  return {};
}

inline int actuator_index(const json& j, const std::string& path, int m) {
  const int a = count(field(j, "actuator", path), path + ".actuator");
  if (a < 0 || a >= m)
    throw ScenarioError(path + ".actuator",
                        "index " + std::to_string(a) + " outside [0, " + std::to_string(m) + ")");
  return a;
}

inline ActuatorNonlinearity parse_nonlinearity(const json& j, const std::string& path) {
  const std::string kind = str(j, "kind", path);
  if (kind == "none") return ActuatorNonlinearity::none();
  if (kind == "saturation")
    return ActuatorNonlinearity::saturation(num(j, "threshold", path),
                                            num_or(j, "bias", path, 0.0));
  if (kind == "bias") return ActuatorNonlinearity::constant_bias(num(j, "bias", path));
  if (kind == "stuck") return ActuatorNonlinearity::stuck(num(j, "output", path));
  if (kind == "gated_saturation")
    return ActuatorNonlinearity::gated_saturation(
        num(j, "threshold", path), parse_profile(field(j, "gate", path), path + ".gate"));
  throw ScenarioError(path + ".kind", "unknown nonlinearity kind '" + kind + "'");
}

inline json nonlinearity_json(const ActuatorNonlinearity& g) {
  using K = ActuatorNonlinearity::Kind;
  switch (g.kind) {
    case K::none:
      return {{"kind", "none"}};
    case K::saturation:
      return {{"kind", "saturation"}, {"threshold", g.threshold}, {"bias", g.bias}};
    case K::bias:
      return {{"kind", "bias"}, {"bias", g.bias}};
    case K::stuck:
      return {{"kind", "stuck"}, {"output", g.bias}};
    case K::gated_saturation:
      return {{"kind", "gated_saturation"}, {"threshold", g.threshold},
              {"gate", profile_json(g.gate)}};
  }
  return {};
}

inline Reference parse_reference(const json& j, const std::string& path, int p) {
  const std::string kind = str(j, "kind", path);
  try {
    if (kind == "sinusoid") {
      const json& ch = field(j, "channels", path);
      if (!ch.is_array() || static_cast<int>(ch.size()) != p)
        throw ScenarioError(path + ".channels", "expected " + std::to_string(p) + " channels");
      std::vector<SinusoidChannel> cs;
      for (int i = 0; i < p; ++i) {
        const std::string cp = path + ".channels[" + std::to_string(i) + "]";
        SinusoidChannel c;
        c.amplitude = num(ch[i], "amplitude", cp);
        c.omega = num_or(ch[i], "omega", cp, 1.0);
        c.phase = num_or(ch[i], "phase", cp, 0.0);
        c.offset = num_or(ch[i], "offset", cp, 0.0);
        cs.push_back(c);
      }
      return Reference::sinusoid(std::move(cs));
    }
    if (kind == "sampled") {
      const json& ss = field(j, "samples", path);
      if (!ss.is_array()) throw ScenarioError(path + ".samples", "expected an array");
      std::vector<ReferenceSample> samples;
      for (std::size_t i = 0; i < ss.size(); ++i) {
        const std::string sp = path + ".samples[" + std::to_string(i) + "]";
        ReferenceSample s;
        s.t = num(ss[i], "t", sp);
        const json& d = field(ss[i], "derivs", sp);
        if (!d.is_array() || d.empty()) throw ScenarioError(sp + ".derivs", "expected a non-empty array");
        for (std::size_t k = 0; k < d.size(); ++k) {
          const Vec row = vector(d[k], sp + ".derivs[" + std::to_string(k) + "]", p);
          s.derivs.emplace_back(row.data(), row.data() + row.size());
        }
        samples.push_back(std::move(s));
      }
      return Reference::sampled(std::move(samples));
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const Error& e) {
    throw ScenarioError(path, e.what());
  }
  throw ScenarioError(path + ".kind", "unknown reference kind '" + kind + "'");
}

inline json reference_json(const Reference& ref) {
  if (ref.kind() == Reference::Kind::sinusoid) {
    json ch = json::array();
    for (const auto& c : ref.channels())
      ch.push_back({{"amplitude", c.amplitude}, {"omega", c.omega}, {"phase", c.phase},
                    {"offset", c.offset}});
    return {{"kind", "sinusoid"}, {"channels", ch}};
  }
  json ss = json::array();
  for (const auto& s : ref.samples()) ss.push_back({{"t", s.t}, {"derivs", s.derivs}});
  return {{"kind", "sampled"}, {"samples", ss}};
}

inline FunnelSpec parse_funnel(const json& j, const std::string& path) {
  const std::string kind = str(j, "kind", path);
  if (kind != "exp_plus_const")
    throw ScenarioError(path + ".kind", "unknown funnel kind '" + kind + "'");
  try {
    return FunnelSpec::exp_plus_const(num(j, "a", path), num(j, "b", path), num(j, "c", path));
  } catch (const Error& e) {
    throw ScenarioError(path, e.what());
  }
}

inline WeightMethod parse_method(const std::string& s, const std::string& path) {
  if (s == "gamma_transpose") return WeightMethod::gamma_transpose;
  if (s == "pinv_formula") return WeightMethod::pinv_formula;
  if (s == "explicit") return WeightMethod::explicit_matrix;
  throw ScenarioError(path, "unknown weight method '" + s + "'");
}

}  // namespace scenario_detail

/// Validates and converts a parsed JSON document. `origin` prefixes field
/// paths in error messages.
inline Scenario parse_scenario(const json& doc, const std::string& origin = "$") {
  using namespace scenario_detail;
  Scenario s;
  if (!doc.is_object()) throw ScenarioError(origin, "scenario must be a JSON object");
  s.name = doc.contains("name") && doc["name"].is_string() ? doc["name"].get<std::string>() : "";

  const std::string sp = origin + ".system";
  const json& sys = field(doc, "system", origin);
  const int n = count(field(sys, "n", sp), sp + ".n");
  const int m = count(field(sys, "m", sp), sp + ".m");
  const int p = count(field(sys, "p", sp), sp + ".p");
  if (n < 1 || m < 1 || p < 1) throw ScenarioError(sp, "dimensions must be positive");
  if (m < p) throw ScenarioError(sp, "need m >= p (got m=" + std::to_string(m) + ", p=" +
                                         std::to_string(p) + ")");
  s.A = matrix(field(sys, "A", sp), sp + ".A", n, n);
  s.B = matrix(field(sys, "B", sp), sp + ".B", n, m);
  s.C = matrix(field(sys, "C", sp), sp + ".C", p, n);
  s.x0 = doc.contains("x0") ? vector(doc["x0"], origin + ".x0", n) : Vec::Zero(n);

  s.reliability.assign(m, FaultProfile::constant(1.0));
  if (doc.contains("reliability")) {
    const json& arr = doc["reliability"];
    if (!arr.is_array()) throw ScenarioError(origin + ".reliability", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ip = origin + ".reliability[" + std::to_string(i) + "]";
      const int a = actuator_index(arr[i], ip, m);
      s.reliability[a] = parse_profile(field(arr[i], "profile", ip), ip + ".profile");
    }
  }
  s.nonlinearity.assign(m, ActuatorNonlinearity::none());
  if (doc.contains("nonlinearity")) {
    const json& arr = doc["nonlinearity"];
    if (!arr.is_array()) throw ScenarioError(origin + ".nonlinearity", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ip = origin + ".nonlinearity[" + std::to_string(i) + "]";
      const int a = actuator_index(arr[i], ip, m);
      s.nonlinearity[a] = parse_nonlinearity(arr[i], ip);
    }
  }

  if (doc.contains("sim")) {
    const json& sim = doc["sim"];
    const std::string mp = origin + ".sim";
    s.sim.t_end = num_or(sim, "t_end", mp, s.sim.t_end);
    s.sim.rtol = num_or(sim, "rtol", mp, s.sim.rtol);
    s.sim.atol = num_or(sim, "atol", mp, s.sim.atol);
    s.sim.output_dt = num_or(sim, "output_dt", mp, s.sim.output_dt);
    if (sim.contains("check_grid_points"))
      s.sim.check_grid_points = count(sim["check_grid_points"], mp + ".check_grid_points");
    if (!(s.sim.t_end > 0.0)) throw ScenarioError(mp + ".t_end", "must be positive");
    if (!(s.sim.output_dt > 0.0)) throw ScenarioError(mp + ".output_dt", "must be positive");
    if (!(s.sim.rtol > 0.0) || !(s.sim.atol > 0.0)) throw ScenarioError(mp, "tolerances must be positive");
    if (s.sim.check_grid_points < 1) throw ScenarioError(mp + ".check_grid_points", "must be >= 1");
  }
  if (doc.contains("check")) {
    const json& c = doc["check"];
    const std::string cp = origin + ".check";
    s.check.tol = num_or(c, "tol", cp, s.check.tol);
    s.check.alpha_lyapunov = num_or(c, "alpha_lyapunov", cp, s.check.alpha_lyapunov);
    s.check.alpha_weight = num_or(c, "alpha_weight", cp, s.check.alpha_weight);
    if (!(s.check.tol > 0.0 && s.check.tol < 1.0)) throw ScenarioError(cp + ".tol", "must lie in (0, 1)");
  }

  const Plant plant = [&] {
    try {
      return s.plant();
    } catch (const Error& e) {
      throw ScenarioError(origin, e.what());
    }
  }();

  if (doc.contains("relative_degree")) {
    s.declared_r = count(doc["relative_degree"], origin + ".relative_degree");
    if (*s.declared_r < 1 || *s.declared_r > n)
      throw ScenarioError(origin + ".relative_degree", "must lie in [1, n]");
    s.r = *s.declared_r;
  } else {
    try {
      const auto grid = s.check_grid();
      s.r = detect_relative_degree(plant, grid, s.check.tol).r;
    } catch (const Error& e) {
      throw ScenarioError(origin + ".relative_degree", std::string("auto-detection failed: ") + e.what());
    }
  }

  s.reference = parse_reference(field(doc, "reference", origin), origin + ".reference", p);
  if (s.reference.smoothness() < s.r)
    throw ScenarioError(origin + ".reference", "needs derivatives up to order r=" + std::to_string(s.r));

  const json& fs = field(doc, "funnels", origin);
  if (!fs.is_array()) throw ScenarioError(origin + ".funnels", "expected an array");
  if (static_cast<int>(fs.size()) != s.r)
    throw ScenarioError(origin + ".funnels", "expected " + std::to_string(s.r) +
                                                 " funnels (one per relative-degree level), got " +
                                                 std::to_string(fs.size()));
  for (std::size_t i = 0; i < fs.size(); ++i)
    s.funnels.push_back(parse_funnel(fs[i], origin + ".funnels[" + std::to_string(i) + "]"));

  if (doc.contains("weight")) {
    const json& w = doc["weight"];
    const std::string wp = origin + ".weight";
    s.method = parse_method(str(w, "method", wp), wp + ".method");
    if (s.method == WeightMethod::explicit_matrix)
      s.explicit_k = matrix(field(w, "matrix", wp), wp + ".matrix", m, p);
  }
  s.check.method = s.method;
  s.check.explicit_k = s.explicit_k;

  if (doc.contains("allow_failed_check")) {
    if (!doc["allow_failed_check"].is_boolean())
      throw ScenarioError(origin + ".allow_failed_check", "expected a boolean");
    s.allow_failed_check = doc["allow_failed_check"].get<bool>();
  }

  if (doc.contains("expectations")) {
    const json& arr = doc["expectations"];
    if (!arr.is_array()) throw ScenarioError(origin + ".expectations", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ep = origin + ".expectations[" + std::to_string(i) + "]";
      Expectation e;
      e.kind = str(arr[i], "kind", ep);
      if (e.kind != "ueff_bound" && e.kind != "ueff_reaches" && e.kind != "ueff_vanishes" &&
          e.kind != "margin_below")
        throw ScenarioError(ep + ".kind", "unknown expectation kind '" + e.kind + "'");
      if (e.kind != "margin_below") {
        e.actuator = actuator_index(arr[i], ep, m);
        e.t_from = num(arr[i], "t_from", ep);
        e.t_to = num(arr[i], "t_to", ep);
      }
      e.value = num(arr[i], "value", ep);
      s.expectations.push_back(e);
    }
  }
  return s;
}

inline json to_json(const Scenario& s) {
  using namespace scenario_detail;
  json doc;
  doc["name"] = s.name;
  doc["system"] = {{"n", s.n()}, {"m", s.m()}, {"p", s.p()},
                   {"A", to_json(s.A)}, {"B", to_json(s.B)}, {"C", to_json(s.C)}};
  doc["x0"] = to_json(s.x0);
  if (s.declared_r) doc["relative_degree"] = *s.declared_r;
  json rel = json::array(), nl = json::array();
  for (int i = 0; i < s.m(); ++i) {
    rel.push_back({{"actuator", i}, {"profile", profile_json(s.reliability[i])}});
    json g = nonlinearity_json(s.nonlinearity[i]);
    g["actuator"] = i;
    nl.push_back(std::move(g));
  }
  doc["reliability"] = rel;
  doc["nonlinearity"] = nl;
  doc["reference"] = reference_json(s.reference);
  json fs = json::array();
  for (const auto& f : s.funnels) fs.push_back({{"kind", "exp_plus_const"}, {"a", f.a()}, {"b", f.b()}, {"c", f.c()}});
  doc["funnels"] = fs;
  doc["weight"] = {{"method", to_string(s.method)}};
  if (s.method == WeightMethod::explicit_matrix) doc["weight"]["matrix"] = to_json(s.explicit_k);
  doc["sim"] = {{"t_end", s.sim.t_end}, {"rtol", s.sim.rtol}, {"atol", s.sim.atol},
                {"output_dt", s.sim.output_dt}, {"check_grid_points", s.sim.check_grid_points}};
  doc["check"] = {{"tol", s.check.tol}, {"alpha_lyapunov", s.check.alpha_lyapunov},
                  {"alpha_weight", s.check.alpha_weight}};
  doc["allow_failed_check"] = s.allow_failed_check;
  json ex = json::array();
  for (const auto& e : s.expectations) {
    json j = {{"kind", e.kind}, {"value", e.value}};
    if (e.kind != "margin_below") {
      j["actuator"] = e.actuator;
      j["t_from"] = e.t_from;
      j["t_to"] = e.t_to;
    }
    ex.push_back(std::move(j));
  }
  doc["expectations"] = ex;
  return doc;
}

/// The lateral-motion model with the degrading rudder and the failing aileron
/// actuator, tracked by funnel control with K = Gamma^T. Actuators are indexed
/// from 0: (d_r1, d_r2, d_a1, d_a2).
inline json boeing737_json() {
  const double pi = std::numbers::pi;
  json doc;
  doc["name"] = "boeing737";
  doc["system"] = {
      {"n", 5},
      {"m", 4},
      {"p", 2},
      {"A",
       {{-0.13858, 14.326, -219.04, 32.167, 0.0},
        {-0.02073, -2.1692, 0.91315, 0.000256, 0.0},
        {0.00289, -0.16444, -0.15768, -0.00489, 0.0},
        {0.0, 1.0, 0.00618, 0.0, 0.0},
        {0.0, 0.0, 1.0, 0.0, 0.0}}},
      {"B",
       {{0.15935, 0.15935, 0.00211, 0.00211},
        {0.01264, 0.01264, 0.21326, 0.21326},
        {-0.12879, -0.12879, 0.00171, 0.00171},
        {0.0, 0.0, 0.0, 0.0},
        {0.0, 0.0, 0.0, 0.0}}},
      {"C", {{0.0, 0.0, 0.0, 1.0, 0.0}, {0.0, 0.0, 0.0, 0.0, 1.0}}}};
  doc["x0"] = {0.0, 0.0, 0.0, 0.0, 0.0};
  doc["reliability"] = {
      {{"actuator", 1},
       {"profile",
        {{"kind", "sum"},
         {"terms",
          {{{"kind", "erfc_cutoff"}, {"level", 0.5}, {"center", 3.0}, {"slope", 1.0}},
           {{"kind", "erfc_cutoff"}, {"level", 0.5}, {"center", 6.0}, {"slope", 100.0}}}}}}},
      {{"actuator", 3},
       {"profile", {{"kind", "erfc_cutoff"}, {"level", 1.0}, {"center", 7.0}, {"slope", 20.0}}}}};
  doc["nonlinearity"] = {
      {{"actuator", 1},
       {"kind", "gated_saturation"},
       {"threshold", 1.0},
       {"gate",
        {{"kind", "erfc_decay"}, {"from", 0.0}, {"to", 0.5}, {"center", 6.0}, {"slope", 100.0}}}}};
  doc["reference"] = {
      {"kind", "sinusoid"},
      {"channels",
       {{{"amplitude", 2.0}, {"omega", 1.0}, {"phase", 0.0}, {"offset", 0.0}},
        {{"amplitude", 1.0}, {"omega", 1.0}, {"phase", pi / 2}, {"offset", 0.0}}}}};
  doc["funnels"] = {{{"kind", "exp_plus_const"}, {"a", 5.0}, {"b", 1.0}, {"c", 0.1}},
                    {{"kind", "exp_plus_const"}, {"a", 2.5}, {"b", 0.5}, {"c", 0.1}}};
  doc["weight"] = {{"method", "gamma_transpose"}};
  doc["sim"] = {{"t_end", 10.0}, {"rtol", 1e-10}, {"atol", 1e-12}, {"output_dt", 0.01},
                {"check_grid_points", 201}};
  doc["check"] = {{"tol", 1e-9}, {"alpha_lyapunov", 1e-7}, {"alpha_weight", 1e-6}};
  doc["expectations"] = {
      {{"kind", "ueff_bound"}, {"actuator", 1}, {"t_from", 6.05}, {"t_to", 10.0}, {"value", 0.501}},
      {{"kind", "ueff_reaches"}, {"actuator", 1}, {"t_from", 7.0}, {"t_to", 9.0}, {"value", 0.499}},
      {{"kind", "ueff_vanishes"}, {"actuator", 3}, {"t_from", 7.2}, {"t_to", 10.0}, {"value", 1e-3}},
      {{"kind", "margin_below"}, {"value", 1.0}}};
  return doc;
}

inline Scenario boeing737() { return parse_scenario(boeing737_json(), "boeing737"); }

/// Loads a scenario file, or the built-in case study for "boeing737".
inline Scenario load_scenario(const std::string& path) {
  if (path == "boeing737") return boeing737();
  std::ifstream in(path);
  if (!in) throw ScenarioError(path, "cannot open file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError(path, std::string("invalid JSON: ") + e.what());
  }
  try {
    return parse_scenario(doc, "$");
  } catch (const ScenarioError& e) {
    throw ScenarioError(path, e.what());
  } catch (const Error& e) {
    throw ScenarioError(path, e.what());
  }
}

}  // namespace funnelctl
