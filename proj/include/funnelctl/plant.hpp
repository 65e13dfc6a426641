#pragma once

// Uncertain linear plant with actuator reliability and bounded actuator
// nonlinearities:
//
//   x' = A x + B L(t) u + f(t, x, u),   y = C x,
//
// where L(t) is the reliability matrix (diagonal when built from per-actuator
// profiles) and f = B g(t, u) with one bounded nonlinearity g_i per actuator.

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "funnelctl/errors.hpp"
#include "funnelctl/jet.hpp"
#include "funnelctl/linalg.hpp"
#include "funnelctl/special.hpp"

namespace funnelctl {

/// Smooth scalar signal describing how much of an actuator's authority is left.
///
/// Composable from a few primitives:
///   constant      value
///   erfc_cutoff   level/2 * erfc(slope (t - center))          level -> 0
///   erfc_decay    to + (from - to)/2 * erfc(slope (t - center)) from -> to
///   lorentzian    1 / (1 + ((t - center)/width)^2)
///   sum, product  of other profiles
class FaultProfile {
 public:
  enum class Kind { constant, erfc_cutoff, erfc_decay, lorentzian, sum, product };

  FaultProfile() = default;

  static FaultProfile constant(double value) {
    FaultProfile f;
    f.kind_ = Kind::constant;
    f.level_ = value;
    return f;
  }
  static FaultProfile erfc_cutoff(double level, double center, double slope) {
    FaultProfile f;
    f.kind_ = Kind::erfc_cutoff;
    f.level_ = level;
    f.center_ = center;
    f.slope_ = slope;
    return f;
  }
  static FaultProfile erfc_decay(double from, double to, double center, double slope) {
    FaultProfile f;
    f.kind_ = Kind::erfc_decay;
    f.level_ = from;
    f.to_ = to;
    f.center_ = center;
    f.slope_ = slope;
    return f;
  }
  static FaultProfile lorentzian(double center, double width) {
    if (!(width > 0.0)) throw NumericError("lorentzian profile: width must be positive");
    FaultProfile f;
    f.kind_ = Kind::lorentzian;
    f.center_ = center;
    f.slope_ = width;
    return f;
  }
  static FaultProfile sum(std::vector<FaultProfile> terms) {
    if (terms.empty()) throw NumericError("sum profile: no terms");
    FaultProfile f;
    f.kind_ = Kind::sum;
    f.children_ = std::move(terms);
    return f;
  }
  static FaultProfile product(std::vector<FaultProfile> factors) {
    if (factors.empty()) throw NumericError("product profile: no factors");
    FaultProfile f;
    f.kind_ = Kind::product;
    f.children_ = std::move(factors);
    return f;
  }

  Kind kind() const { return kind_; }
  double level() const { return level_; }  // value / level / from
  double to() const { return to_; }
  double center() const { return center_; }
  double slope() const { return slope_; }  // slope, or width for lorentzian
  const std::vector<FaultProfile>& children() const { return children_; }

  bool is_constant() const {
    if (kind_ == Kind::constant) return true;
    if (kind_ == Kind::sum || kind_ == Kind::product) {
      for (const auto& c : children_)
        if (!c.is_constant()) return false;
      return true;
    }
    return false;
  }

  double value(double t) const { return jet(t, 0)[0]; }

  Jet<double> jet(double t, int order) const {
    switch (kind_) {
      case Kind::constant:
        return Jet<double>::constant(level_, order);
      case Kind::erfc_cutoff:
        return (0.5 * level_) * scaled_erfc_jet(t, center_, slope_, order);
      case Kind::erfc_decay: {
        Jet<double> j = (0.5 * (level_ - to_)) * scaled_erfc_jet(t, center_, slope_, order);
        j[0] += to_;
        return j;
      }
      case Kind::lorentzian: {
        const double s = (t - center_) / slope_;
        std::vector<double> q(order + 1, 0.0);
        q[0] = 1.0 + s * s;
        if (order >= 1) q[1] = 2.0 * s / slope_;
        if (order >= 2) q[2] = 2.0 / (slope_ * slope_);
        return jet_recip(Jet<double>(std::move(q)));
      }
      case Kind::sum: {
        Jet<double> acc = children_.front().jet(t, order);
        for (std::size_t i = 1; i < children_.size(); ++i) acc += children_[i].jet(t, order);
        return acc;
      }
      case Kind::product: {
        Jet<double> acc = children_.front().jet(t, order);
        for (std::size_t i = 1; i < children_.size(); ++i)
          acc = jet_mul(acc, children_[i].jet(t, order));
        return acc;
      }
    }
    throw NumericError("FaultProfile: unknown kind");
  }

 private:
  Kind kind_ = Kind::constant;
  double level_ = 1.0;
  double to_ = 0.0;
  double center_ = 0.0;
  double slope_ = 1.0;
  std::vector<FaultProfile> children_;
};

inline double saturate(double u, double threshold) {
  return std::abs(u) >= threshold ? std::copysign(threshold, u) : u;
}

/// Bounded per-actuator nonlinearity g_i(t, u_i); enters the plant as B g.
struct ActuatorNonlinearity {
  enum class Kind { none, saturation, bias, stuck, gated_saturation };

  Kind kind = Kind::none;
  double threshold = 1.0;  // saturation level (saturation, gated_saturation)
  double bias = 0.0;       // additive bias (saturation, bias) or stuck output (stuck)
  FaultProfile gate = FaultProfile::constant(1.0);

  static ActuatorNonlinearity none() { return {}; }
  static ActuatorNonlinearity saturation(double threshold, double bias = 0.0) {
    return {Kind::saturation, threshold, bias, FaultProfile::constant(1.0)};
  }
  static ActuatorNonlinearity constant_bias(double b) {
    return {Kind::bias, 1.0, b, FaultProfile::constant(1.0)};
  }
  static ActuatorNonlinearity stuck(double output) {
    return {Kind::stuck, 1.0, output, FaultProfile::constant(1.0)};
  }
  static ActuatorNonlinearity gated_saturation(double threshold, FaultProfile gate) {
    return {Kind::gated_saturation, threshold, 0.0, std::move(gate)};
  }

  double eval(double t, double u) const {
    switch (kind) {
      case Kind::none:
        return 0.0;
      case Kind::saturation:
        return saturate(u, threshold) + bias;
      case Kind::bias:
      case Kind::stuck:
        return bias;
      case Kind::gated_saturation:
        return gate.value(t) * saturate(u, threshold);
    }
    return 0.0;
  }

  bool is_saturating() const {
    return kind == Kind::saturation || kind == Kind::gated_saturation;
  }
};

class Plant {
 public:
  // Full (not necessarily diagonal) reliability signal: returns the jet of
  // L at t up to the requested order.
  using ReliabilitySignal = std::function<Jet<Mat>(double t, int order)>;

  Plant(Mat a, Mat b, Mat c, Vec x0 = Vec(), std::vector<FaultProfile> reliability = {},
        std::vector<ActuatorNonlinearity> nonlinearity = {})
      : a_(std::move(a)),
        b_(std::move(b)),
        c_(std::move(c)),
        x0_(std::move(x0)),
        profiles_(std::move(reliability)),
        nonlin_(std::move(nonlinearity)) {
    validate();
  }

  static Plant with_reliability_signal(Mat a, Mat b, Mat c, Vec x0, ReliabilitySignal signal,
                                       std::vector<ActuatorNonlinearity> nonlinearity = {}) {
    Plant plant(std::move(a), std::move(b), std::move(c), std::move(x0), {},
                std::move(nonlinearity));
    plant.signal_ = std::move(signal);
    return plant;
  }

  int n() const { return static_cast<int>(a_.rows()); }
  int m() const { return static_cast<int>(b_.cols()); }
  int p() const { return static_cast<int>(c_.rows()); }
  const Mat& A() const { return a_; }
  const Mat& B() const { return b_; }
  const Mat& C() const { return c_; }
  const Vec& x0() const { return x0_; }
  const std::vector<FaultProfile>& reliability_profiles() const { return profiles_; }
  const std::vector<ActuatorNonlinearity>& nonlinearities() const { return nonlin_; }
  bool has_reliability_signal() const { return static_cast<bool>(signal_); }

  bool nonlinearity_is_zero() const {
    for (const auto& g : nonlin_)
      if (g.kind != ActuatorNonlinearity::Kind::none) return false;
    return true;
  }

  bool reliability_is_constant() const {
    if (signal_) return false;
    for (const auto& l : profiles_)
      if (!l.is_constant()) return false;
    return true;
  }

  Jet<Mat> reliability_jet(double t, int order) const {
    if (signal_) {
      Jet<Mat> j = signal_(t, order);
      if (j.order() < order || j.value().rows() != m() || j.value().cols() != m())
        throw DimensionError("reliability signal returned a jet of the wrong shape or order");
      return j.truncated(order);
    }
    std::vector<Mat> c(order + 1, Mat::Zero(m(), m()));
    for (int i = 0; i < m(); ++i) {
      if (profiles_.empty()) {
        c[0](i, i) = 1.0;
        continue;
      }
      const Jet<double> li = profiles_[i].jet(t, order);
      for (int j = 0; j <= order; ++j) c[j](i, i) = li[j];
    }
    return Jet<Mat>(std::move(c));
  }

  Mat reliability(double t) const { return reliability_jet(t, 0).value(); }

  // Per-actuator g(t, u) (zero vector when no nonlinearity is configured).
  Vec actuator_nonlinearity(double t, const Vec& u) const {
    Vec g = Vec::Zero(m());
    for (std::size_t i = 0; i < nonlin_.size(); ++i) g(i) = nonlin_[i].eval(t, u(i));
    return g;
  }

  Vec nonlinearity_eval(double t, const Vec& x, const Vec& u) const {
    check_dims(x, u);
    return b_ * actuator_nonlinearity(t, u);
  }

  Vec rhs(double t, const Vec& x, const Vec& u) const {
    check_dims(x, u);
    Vec dx = a_ * x + b_ * (reliability(t) * u);
    if (!nonlinearity_is_zero()) dx += b_ * actuator_nonlinearity(t, u);
    return dx;
  }

  // Action delivered by each actuator: (L(t) u)_i + g_i(t, u_i).
  Vec effective_action(double t, const Vec& u) const {
    return reliability(t) * u + actuator_nonlinearity(t, u);
  }

 private:
  void validate() const {
    if (a_.rows() < 1 || a_.rows() != a_.cols())
      throw DimensionError("A must be square and non-empty, got " + shape(a_));
    if (b_.rows() != a_.rows() || b_.cols() < 1)
      throw DimensionError("B must have n=" + std::to_string(a_.rows()) + " rows, got " + shape(b_));
    if (c_.cols() != a_.rows() || c_.rows() < 1)
      throw DimensionError("C must have n=" + std::to_string(a_.rows()) + " columns, got " +
                           shape(c_));
    if (b_.cols() < c_.rows())
      throw DimensionError("need at least as many inputs as outputs (m >= p)");
    if (x0_.size() != 0 && x0_.size() != a_.rows())
      throw DimensionError("x0 has " + std::to_string(x0_.size()) + " entries, expected " +
                           std::to_string(a_.rows()));
    if (!profiles_.empty() && static_cast<int>(profiles_.size()) != b_.cols())
      throw DimensionError("reliability needs one profile per actuator");
    if (!nonlin_.empty() && static_cast<int>(nonlin_.size()) != b_.cols())
      throw DimensionError("nonlinearity needs one entry per actuator");
    if (!a_.allFinite() || !b_.allFinite() || !c_.allFinite())
      throw NumericError("plant matrices contain non-finite entries");
  }

  void check_dims(const Vec& x, const Vec& u) const {
    if (x.size() != n() || u.size() != m())
      throw DimensionError("plant evaluation: expected x in R^" + std::to_string(n()) +
                           " and u in R^" + std::to_string(m()));
  }

  static std::string shape(const Mat& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
  }

  Mat a_, b_, c_;
  Vec x0_;
  std::vector<FaultProfile> profiles_;
  std::vector<ActuatorNonlinearity> nonlin_;
  ReliabilitySignal signal_;
};

}  // namespace funnelctl
