#pragma once

// Funnel controller for relative degree r:
//
//   e_0 = y - y_ref,   e_{i+1} = e_i' + k_i e_i,
//   k_i = 1 / (1 - phi_i^2 |e_i|^2),
//   u   = -k_{r-1} K(t) e_{r-1}.
//
// The derivatives e_i' are resolved with truncated jets: e_0 is supplied as a
// jet of order r-1 and every level of the recursion consumes one order.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "funnelctl/errors.hpp"
#include "funnelctl/jet.hpp"
#include "funnelctl/linalg.hpp"

namespace funnelctl {

inline constexpr double kFunnelGuard = 1e-12;

/// A funnel function phi; the funnel is {(t, e) : phi(t) |e| < 1}.
class FunnelSpec {
 public:
  enum class Kind { exp_plus_const, custom };
  using JetFn = std::function<Jet<double>(double t, int order)>;

  FunnelSpec() = default;

  /// phi(t) = 1 / (a exp(-b t) + c), with a, b >= 0 and c > 0.
  static FunnelSpec exp_plus_const(double a, double b, double c) {
    if (!(a >= 0.0) || !(b >= 0.0) || !(c > 0.0))
      throw NumericError("exp_plus_const funnel needs a >= 0, b >= 0, c > 0");
    FunnelSpec f;
    f.kind_ = Kind::exp_plus_const;
    f.a_ = a;
    f.b_ = b;
    f.c_ = c;
    return f;
  }

  /// Any jet-evaluable phi. Values must stay positive for t > 0; phi(0) = 0
  /// (no restriction on the initial error) is allowed.
  static FunnelSpec custom(JetFn fn, int smoothness, std::string label = "custom") {
    FunnelSpec f;
    f.kind_ = Kind::custom;
    f.fn_ = std::move(fn);
    f.smoothness_ = smoothness;
    f.label_ = std::move(label);
    return f;
  }

  Kind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }
  int smoothness() const { return smoothness_; }
  const std::string& label() const { return label_; }

  Jet<double> jet(double t, int order) const {
    if (order > smoothness_)
      throw NumericError("funnel jet of order " + std::to_string(order) +
                         " exceeds declared smoothness " + std::to_string(smoothness_));
    Jet<double> phi;
    if (kind_ == Kind::exp_plus_const) {
      const double ex = a_ * std::exp(-b_ * t);
      std::vector<double> g(order + 1);
      g[0] = ex + c_;
      double s = 1.0;
      for (int j = 1; j <= order; ++j) {
        s *= -b_;
        g[j] = s * ex;
      }
      phi = jet_recip(Jet<double>(std::move(g)));
    } else {
      phi = fn_(t, order);
      if (phi.order() < order) throw NumericError("custom funnel returned a jet of too low order");
      phi = phi.truncated(order);
    }
    if (!phi.all_finite() || phi[0] < 0.0 || (phi[0] == 0.0 && t > 0.0))
      throw NumericError("funnel function is not positive at t=" + std::to_string(t));
    return phi;
  }

  double value(double t) const { return jet(t, 0)[0]; }

 private:
  Kind kind_ = Kind::exp_plus_const;
  double a_ = 0.0, b_ = 0.0, c_ = 1.0;
  int smoothness_ = 16;
  std::string label_;
  JetFn fn_;
};

inline Jet<double> funnel_jet(const FunnelSpec& spec, double t, int order) {
  return spec.jet(t, order);
}

struct CascadeState {
  double t = 0.0;
  std::vector<Vec> e;          // e_0..e_{r-1}
  std::vector<double> phi;     // phi_i(t)
  std::vector<double> margins; // phi_i |e_i| in [0, 1)
  std::vector<double> gains;   // k_i >= 1
  Vec u;
};

/// Runs the error/gain recursion at t. Throws FunnelViolation when some
/// margin phi_i |e_i| reaches 1 - kFunnelGuard.
inline CascadeState cascade(const Jet<Vec>& e0, std::span<const FunnelSpec> funnels, double t) {
  const int r = static_cast<int>(funnels.size());
  if (r < 1) throw DimensionError("cascade: need at least one funnel");
  if (e0.order() < r - 1)
    throw NumericError("cascade: error jet of order " + std::to_string(e0.order()) +
                       " is too short for relative degree " + std::to_string(r));
  CascadeState st;
  st.t = t;
  Jet<Vec> ei = e0.truncated(r - 1);
  for (int i = 0; i < r; ++i) {
    const int ord = r - 1 - i;
    const Jet<double> phi = funnels[i].jet(t, ord);
    const Jet<double> phi2 = jet_mul(phi, phi);
    const Jet<double> norm2 = jet_dot(ei, ei);
    const double margin = phi[0] * ei.value().norm();
    st.e.push_back(ei.value());
    st.phi.push_back(phi[0]);
    st.margins.push_back(margin);
    if (!(margin < 1.0 - kFunnelGuard)) throw FunnelViolation(i, t, margin);
    Jet<double> denom = -jet_mul(phi2, norm2);
    denom[0] += 1.0;
    const Jet<double> k = jet_recip(denom);
    st.gains.push_back(k[0]);
    if (i + 1 < r) ei = ei.derivative() + jet_scale(k, ei).truncated(ord - 1);
  }
  return st;
}

/// u = -k_{r-1} K e_{r-1}; also stored in state.u.
inline Vec feedback(const Mat& k, CascadeState& state) {
  if (k.cols() != state.e.back().size())
    throw DimensionError("feedback: weight has " + std::to_string(k.cols()) +
                         " columns, error has " + std::to_string(state.e.back().size()) +
                         " entries");
  state.u = -state.gains.back() * (k * state.e.back());
  return state.u;
}

}  // namespace funnelctl
