#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "funnelctl/jet.hpp"

namespace funnelctl {

/// Jet of erfc at t.
///
/// The value comes from the C library erfc (rational/continued-fraction
/// approximation, accurate to a few ulp). For j >= 1,
///   d^j/dt^j erfc(t) = -(2/sqrt(pi)) (-1)^(j-1) H_{j-1}(t) exp(-t^2),
/// with H_k the physicists' Hermite polynomials.
inline Jet<double> erfc_jet(double t, int order) {
  std::vector<double> c(order + 1, 0.0);
  c[0] = std::erfc(t);
  if (order >= 1) {
    const double gauss = std::exp(-t * t);
    const double scale = -2.0 * std::numbers::inv_sqrtpi * gauss;
    double h_prev = 0.0;  // H_{-1}, unused
    double h = 1.0;       // H_0
    for (int j = 1; j <= order; ++j) {
      const int k = j - 1;
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      c[j] = scale * sign * h;
      const double h_next = 2.0 * t * h - 2.0 * k * h_prev;
      h_prev = h;
      h = h_next;
    }
  }
  return Jet<double>(std::move(c));
}

/// Jet of t -> erfc(slope * (t - center)).
inline Jet<double> scaled_erfc_jet(double t, double center, double slope, int order) {
  Jet<double> j = erfc_jet(slope * (t - center), order);
  double s = 1.0;
  for (int k = 1; k <= order; ++k) {
    s *= slope;
    j[k] *= s;
  }
  return j;
}

}  // namespace funnelctl
