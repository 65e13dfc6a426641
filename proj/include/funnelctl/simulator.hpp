#pragma once

// Closed loop of the plant with the funnel controller, integrated in original
// state coordinates. Output derivatives are y^(k) = C A^k x for k < r.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "funnelctl/controller.hpp"
#include "funnelctl/errors.hpp"
#include "funnelctl/jet.hpp"
#include "funnelctl/linalg.hpp"
#include "funnelctl/normalform.hpp"
#include "funnelctl/ode.hpp"
#include "funnelctl/plant.hpp"
#include "funnelctl/reference.hpp"

namespace funnelctl {

/// e_0 jet of order r-1: coefficient k is C A^k x - y_ref^(k).
inline Jet<Vec> output_jet(std::span<const Mat> cak, const Vec& x, const Jet<Vec>& yref) {
  const int r = static_cast<int>(cak.size());
  if (yref.order() < r - 1) throw NumericError("reference jet too short for relative degree");
  std::vector<Vec> c(r);
  for (int k = 0; k < r; ++k) c[k] = cak[k] * x - yref[k];
  return Jet<Vec>(std::move(c));
}

inline std::vector<Mat> output_maps(const Plant& plant, int r) {
  std::vector<Mat> cak;
  Mat row = plant.C();
  for (int k = 0; k < r; ++k) {
    cak.push_back(row);
    row = row * plant.A();
  }
  return cak;
}

inline Jet<Vec> output_jet(const Plant& plant, int r, const Vec& x, const Jet<Vec>& yref) {
  const auto cak = output_maps(plant, r);
  return output_jet(cak, x, yref);
}

class ClosedLoop {
 public:
  ClosedLoop(Plant plant, std::vector<FunnelSpec> funnels, Reference ref,
             WeightMethod method = WeightMethod::gamma_transpose, Mat explicit_k = Mat())
      : plant_(std::move(plant)),
        funnels_(std::move(funnels)),
        ref_(std::move(ref)),
        method_(method) {
    r_ = static_cast<int>(funnels_.size());
    if (r_ < 1) throw DimensionError("closed loop needs at least one funnel");
    if (ref_.p() != plant_.p())
      throw DimensionError("reference has " + std::to_string(ref_.p()) + " channels, plant has p=" +
                           std::to_string(plant_.p()));
    if (ref_.smoothness() < r_ - 1)
      throw DimensionError("reference is not smooth enough for relative degree " +
                           std::to_string(r_));
    cak_ = output_maps(plant_, r_);
    switch (method_) {
      case WeightMethod::gamma_transpose:
        k_ = high_frequency_gain(plant_, r_).transpose();
        break;
      case WeightMethod::explicit_matrix:
        if (explicit_k.rows() != plant_.m() || explicit_k.cols() != plant_.p())
          throw DimensionError("explicit weight must be " + std::to_string(plant_.m()) + "x" +
                               std::to_string(plant_.p()));
        k_ = std::move(explicit_k);
        break;
      case WeightMethod::pinv_formula:
        builder_.emplace(plant_, r_);
        break;
    }
  }

  const Plant& plant() const { return plant_; }
  int r() const { return r_; }
  const std::vector<FunnelSpec>& funnels() const { return funnels_; }
  const Reference& reference() const { return ref_; }
  WeightMethod method() const { return method_; }

  Mat weight(double t) const {
    if (!builder_) return k_;
    const Mat bl = plant_.B() * plant_.reliability(t);
    const Mat target = builder_->pinv_target(t);
    if (!builder_->image_contained(target, bl))
      throw StructureError("no feasible weight: target image not contained in im B L at t=" + std::to_string(t),
                           t);
    return pinv(bl, builder_->tol()) * target;
  }

  /// Controller internals at (t, x) without the plant derivative.
  CascadeState control(double t, const Vec& x) const {
    const Jet<Vec> e0 = output_jet(cak_, x, ref_.jet(t, r_ - 1));
    CascadeState st = cascade(e0, funnels_, t);
    feedback(weight(t), st);
    return st;
  }

  std::pair<Vec, CascadeState> rhs(double t, const Vec& x) const {
    CascadeState st = control(t, x);
    Vec xdot = plant_.rhs(t, x, st.u);
    return {std::move(xdot), std::move(st)};
  }

 private:
  Plant plant_;
  std::vector<FunnelSpec> funnels_;
  Reference ref_;
  WeightMethod method_;
  int r_ = 0;
  std::vector<Mat> cak_;
  Mat k_;
  std::optional<NormalFormBuilder> builder_;
};

inline std::pair<Vec, CascadeState> closed_loop_rhs(const ClosedLoop& sys, double t, const Vec& x) {
  return sys.rhs(t, x);
}

struct IntegratorOptions {
  double t_end = 10.0;
  double rtol = 1e-10;
  double atol = 1e-12;
  double output_dt = 0.01;
  double min_step = 1e-12;
};

struct TraceSample {
  double t = 0.0;
  Vec y, yref;
  std::vector<double> enorm, margin, gain;
  Vec u, ueff, x;
};

struct Trace {
  int n = 0, m = 0, p = 0, r = 0;
  std::vector<TraceSample> samples;
  OdeStats stats;
};

inline std::vector<double> output_times(double t_end, double dt) {
  if (!(t_end > 0.0) || !(dt > 0.0)) throw NumericError("t_end and output_dt must be positive");
  const long steps = std::lround(std::ceil(t_end / dt - 1e-9));
  std::vector<double> ts;
  ts.reserve(steps + 1);
  for (long k = 0; k < steps; ++k) ts.push_back(static_cast<double>(k) * dt);
  ts.push_back(t_end);
  return ts;
}

inline TraceSample sample_at(const ClosedLoop& sys, double t, const Vec& x) {
  const CascadeState st = sys.control(t, x);
  TraceSample s;
  s.t = t;
  s.x = x;
  s.y = sys.plant().C() * x;
  s.yref = sys.reference().value(t);
  for (const Vec& e : st.e) s.enorm.push_back(e.norm());
  s.margin = st.margins;
  s.gain = st.gains;
  s.u = st.u;
  s.ueff = sys.plant().effective_action(t, st.u);
  return s;
}

/// Integrates from x0 at t = 0, appending samples to trace as they are
/// produced so a partial trace survives a thrown FunnelViolation or
/// IntegrationStalled.
inline void integrate_into(const ClosedLoop& sys, const IntegratorOptions& opt, Trace& trace) {
  const Plant& plant = sys.plant();
  trace.n = plant.n();
  trace.m = plant.m();
  trace.p = plant.p();
  trace.r = sys.r();
  trace.samples.clear();
  const Vec x0 = plant.x0();
  try {
    (void)sys.control(0.0, x0);
  } catch (FunnelViolation& v) {
    v.last_state = x0;
    v.last_time = 0.0;
    throw;
  }
  const std::vector<double> ts = output_times(opt.t_end, opt.output_dt);
  OdeOptions oo;
  oo.rtol = opt.rtol;
  oo.atol = opt.atol;
  oo.min_step = opt.min_step;
  oo.max_step = opt.output_dt;
  auto f = [&](double t, const Vec& x) { return sys.rhs(t, x).first; };
  Vec last_x = x0;
  double last_t = 0.0;
  auto sink = [&](double t, const Vec& x) {
    try {
      trace.samples.push_back(sample_at(sys, t, x));
    } catch (FunnelViolation& v) {
      v.last_state = last_x;
      v.last_time = last_t;
      throw;
    }
    last_x = x;
    last_t = t;
  };
  dopri45(f, 0.0, x0, ts, oo, sink, &trace.stats);
}

inline Trace integrate(const ClosedLoop& sys, const IntegratorOptions& opt) {
  Trace trace;
  integrate_into(sys, opt, trace);
  return trace;
}

}  // namespace funnelctl
