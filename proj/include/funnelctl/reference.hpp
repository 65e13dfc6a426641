#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "funnelctl/errors.hpp"
#include "funnelctl/jet.hpp"
#include "funnelctl/linalg.hpp"

namespace funnelctl {

struct SinusoidChannel {
  double amplitude = 0.0;
  double omega = 1.0;
  double phase = 0.0;
  double offset = 0.0;
};

// One sample of a reference given with derivatives: derivs[k][j] is the k-th
// derivative of channel j at time t.
struct ReferenceSample {
  double t = 0.0;
  std::vector<std::vector<double>> derivs;
};

/// Reference trajectory y_ref with derivatives of any order.
///
/// sinusoid: channel j is amplitude sin(omega t + phase) + offset.
/// sampled:  two-point Hermite interpolation between consecutive samples,
///           matching all supplied derivatives at both ends; the first and
///           last interpolants are extended beyond the sampled range.
class Reference {
 public:
  enum class Kind { sinusoid, sampled };

  Reference() = default;

  static Reference sinusoid(std::vector<SinusoidChannel> channels) {
    if (channels.empty()) throw DimensionError("reference needs at least one channel");
    Reference r;
    r.kind_ = Kind::sinusoid;
    r.channels_ = std::move(channels);
    return r;
  }

  static Reference sampled(std::vector<ReferenceSample> samples) {
    if (samples.size() < 2) throw DimensionError("sampled reference needs at least two samples");
    const std::size_t d = samples.front().derivs.size();
    if (d == 0) throw DimensionError("sampled reference: empty derivative table");
    const std::size_t p = samples.front().derivs.front().size();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (i > 0 && !(samples[i].t > samples[i - 1].t))
        throw DimensionError("sampled reference: times must increase strictly");
      if (samples[i].derivs.size() != d)
        throw DimensionError("sampled reference: inconsistent derivative counts");
      for (const auto& row : samples[i].derivs)
        if (row.size() != p) throw DimensionError("sampled reference: inconsistent channel counts");
    }
    Reference r;
    r.kind_ = Kind::sampled;
    r.samples_ = std::move(samples);
    r.build_hermite();
    return r;
  }

  Kind kind() const { return kind_; }
  const std::vector<SinusoidChannel>& channels() const { return channels_; }
  const std::vector<ReferenceSample>& samples() const { return samples_; }

  int p() const {
    return kind_ == Kind::sinusoid ? static_cast<int>(channels_.size())
                                   : static_cast<int>(samples_.front().derivs.front().size());
  }

  // Number of continuous derivatives (sinusoids are smooth).
  int smoothness() const {
    return kind_ == Kind::sinusoid ? 1 << 20 : static_cast<int>(samples_.front().derivs.size()) - 1;
  }

  Jet<Vec> jet(double t, int order) const {
    std::vector<Vec> c(order + 1, Vec::Zero(p()));
    if (kind_ == Kind::sinusoid) {
      for (int j = 0; j < p(); ++j) {
        const auto& ch = channels_[j];
        const double arg = ch.omega * t + ch.phase;
        const double s = std::sin(arg), co = std::cos(arg);
        double w = 1.0;
        for (int k = 0; k <= order; ++k) {
          // d^k/dt^k sin(arg) cycles through sin, cos, -sin, -cos
          const double base = (k % 4 == 0) ? s : (k % 4 == 1) ? co : (k % 4 == 2) ? -s : -co;
          c[k](j) = ch.amplitude * w * base;
          w *= ch.omega;
        }
        c[0](j) += ch.offset;
      }
    } else {
      eval_sampled(t, c);
    }
    return Jet<Vec>(std::move(c));
  }

  Vec value(double t) const { return jet(t, 0).value(); }

 private:
  // coeffs_[i][j] holds the monomial coefficients in s = t - t_i of channel j
  // on interval i.
  void build_hermite() {
    const int d = static_cast<int>(samples_.front().derivs.size());  // derivatives 0..d-1
    const int deg = 2 * d - 1;
    coeffs_.clear();
    for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
      const double h = samples_[i + 1].t - samples_[i].t;
      Mat m = Mat::Zero(2 * d, deg + 1);
      for (int k = 0; k < d; ++k) {
        // k-th derivative of s^n at s = 0 and s = h
        for (int nn = k; nn <= deg; ++nn) {
          double f = 1.0;
          for (int q = 0; q < k; ++q) f *= nn - q;
          if (nn == k) m(k, nn) = f;
          m(d + k, nn) = f * std::pow(h, nn - k);
        }
      }
      const Eigen::FullPivLU<Mat> lu(m);
      std::vector<Vec> per_channel;
      for (int j = 0; j < p(); ++j) {
        Vec rhs(2 * d);
        for (int k = 0; k < d; ++k) {
          rhs(k) = samples_[i].derivs[k][j];
          rhs(d + k) = samples_[i + 1].derivs[k][j];
        }
        per_channel.push_back(lu.solve(rhs));
      }
      coeffs_.push_back(std::move(per_channel));
    }
  }

  void eval_sampled(double t, std::vector<Vec>& c) const {
    const int order = static_cast<int>(c.size()) - 1;
    const auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                                     [](double v, const ReferenceSample& s) { return v < s.t; });
    std::size_t i = it == samples_.begin() ? 0 : static_cast<std::size_t>(it - samples_.begin()) - 1;
    i = std::min(i, coeffs_.size() - 1);
    const double s = t - samples_[i].t;
    for (int j = 0; j < p(); ++j) {
      const Vec& a = coeffs_[i][j];
      for (int k = 0; k <= order; ++k) {
        double acc = 0.0;
        for (int nn = static_cast<int>(a.size()) - 1; nn >= k; --nn) {
          double f = 1.0;
          for (int q = 0; q < k; ++q) f *= nn - q;
          acc += a(nn) * f * std::pow(s, nn - k);
        }
        c[k](j) = acc;
      }
    }
  }

  Kind kind_ = Kind::sinusoid;
  std::vector<SinusoidChannel> channels_;
  std::vector<ReferenceSample> samples_;
  std::vector<std::vector<Vec>> coeffs_;
};

}  // namespace funnelctl
