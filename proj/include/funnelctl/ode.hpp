#pragma once

// Explicit Runge-Kutta integrators on Eigen vectors.
//
// dopri45: Dormand-Prince 5(4) with FSAL, PI step-size control and the
// standard fourth-order dense output. The right-hand side may throw
// FunnelViolation to signal that a trial stage left the domain of the vector
// field; the step is then rejected and halved. Below min_step the violation is
// rethrown with the last accepted state attached.

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>

#include "funnelctl/errors.hpp"
#include "funnelctl/linalg.hpp"

namespace funnelctl {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double min_step = 1e-12;
  double max_step = 0.0;  // 0: unbounded
  double initial_step = 0.0;  // 0: automatic
  long max_steps = 50'000'000;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  long domain_rejections = 0;
  long rhs_evals = 0;
};

namespace dp45 {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
// fifth-order weights minus embedded fourth-order weights
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense output
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
}  // namespace dp45

/// Integrates x' = f(t, x) from t0 and calls sink(t, x) at every entry of
/// out_times (ascending, all >= t0). Returns the state at out_times.back().
template <class Rhs, class Sink>
Vec dopri45(Rhs&& f, double t0, Vec x0, std::span<const double> out_times, const OdeOptions& opt,
            Sink&& sink, OdeStats* stats = nullptr) {
  using namespace dp45;
  OdeStats local;
  OdeStats& st = stats ? *stats : local;
  if (out_times.empty()) return x0;
  const double t_end = out_times.back();
  std::size_t next_out = 0;
  while (next_out < out_times.size() && out_times[next_out] <= t0) {
    sink(out_times[next_out], x0);
    ++next_out;
  }
  if (t_end <= t0) return x0;

  auto eval = [&](double t, const Vec& x) {
    ++st.rhs_evals;
    return f(t, x);
  };
  auto scaled_norm = [&](const Vec& err, const Vec& a, const Vec& b) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      const double sc = opt.atol + opt.rtol * std::max(std::abs(a(i)), std::abs(b(i)));
      acc += (err(i) / sc) * (err(i) / sc);
    }
    return std::sqrt(acc / std::max<Eigen::Index>(1, err.size()));
  };

  double t = t0;
  Vec x = std::move(x0);
  Vec k1 = eval(t, x);

  double h = opt.initial_step;
  if (h <= 0.0) {
    // Hairer-Wanner starting step heuristic.
    const Vec zero = Vec::Zero(x.size());
    const double d0 = scaled_norm(x, x, zero);
    const double d1n = scaled_norm(k1, x, zero);
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, t_end - t);
    h = h0;
    try {
      const Vec k2 = eval(t + h0, x + h0 * k1);
      const double d2 = scaled_norm(k2 - k1, x, zero) / h0;
      const double dmax = std::max(d1n, d2);
      const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
      h = std::min(100.0 * h0, h1);
    } catch (const FunnelViolation&) {
      h = h0 * 0.5;
    }
  }
  if (opt.max_step > 0.0) h = std::min(h, opt.max_step);

  constexpr double safety = 0.9, fac_min = 0.2, fac_max = 10.0;
  constexpr double alpha = 0.7 / 5.0, beta = 0.4 / 5.0;
  double err_old = 1e-4;
  bool last_rejected = false;

  while (t < t_end) {
    if (st.accepted + st.rejected > opt.max_steps)
      throw IntegrationStalled(t, h, x);
    bool final_step = false;
    if (t + h >= t_end || t + 1.01 * h >= t_end) {
      h = t_end - t;
      final_step = true;
    }
    if (h < opt.min_step && !final_step) throw IntegrationStalled(t, h, x);

    Vec k2, k3, k4, k5, k6, k7, x_new;
    try {
      k2 = eval(t + c2 * h, x + h * (a21 * k1));
      k3 = eval(t + c3 * h, x + h * (a31 * k1 + a32 * k2));
      k4 = eval(t + c4 * h, x + h * (a41 * k1 + a42 * k2 + a43 * k3));
      k5 = eval(t + c5 * h, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      k6 = eval(t + h, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      x_new = x + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      k7 = eval(t + h, x_new);
    } catch (FunnelViolation& v) {
      ++st.domain_rejections;
      h *= 0.5;
      if (h < opt.min_step) {
        v.last_state = x;
        v.last_time = t;
        throw;
      }
      last_rejected = true;
      continue;
    }

    const Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = scaled_norm(err, x, x_new);
    if (!std::isfinite(en)) {
      ++st.rejected;
      h *= 0.25;
      last_rejected = true;
      continue;
    }

    if (en <= 1.0) {
      ++st.accepted;
      const double t_new = final_step ? t_end : t + h;
      if (next_out < out_times.size() && out_times[next_out] <= t_new) {
        const Vec ydiff = x_new - x;
        const Vec bspl = h * k1 - ydiff;
        const Vec r4 = ydiff - h * k7 - bspl;
        const Vec r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        while (next_out < out_times.size() && out_times[next_out] <= t_new) {
          const double to = out_times[next_out];
          if (to == t_new) {
            sink(to, x_new);
          } else {
            const double th = (to - t) / h, th1 = 1.0 - th;
            const Vec xo = x + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5)));
            sink(to, xo);
          }
          ++next_out;
        }
      }
      double fac = safety * std::pow(std::max(en, 1e-10), -alpha) * std::pow(err_old, beta);
      fac = std::clamp(fac, fac_min, fac_max);
      if (last_rejected) fac = std::min(fac, 1.0);
      err_old = std::max(en, 1e-4);
      t = t_new;
      x = std::move(x_new);
      k1 = std::move(k7);
      h *= fac;
      if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
      last_rejected = false;
    } else {
      ++st.rejected;
      h *= std::max(fac_min, safety * std::pow(en, -0.2));
      last_rejected = true;
    }
  }
  return x;
}

/// Classical fixed-step RK4 from t0 to t1 with `steps` equal steps.
template <class Rhs>
Vec rk4_fixed(Rhs&& f, double t0, double t1, Vec x, long steps) {
  const double h = (t1 - t0) / static_cast<double>(steps);
  for (long i = 0; i < steps; ++i) {
    const double t = t0 + h * static_cast<double>(i);
    const Vec k1 = f(t, x);
    const Vec k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
    const Vec k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
    const Vec k4 = f(t + h, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

}  // namespace funnelctl
