#pragma once

// Fixtures, randomized system generators and property suites shared by the
// unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "funnelctl/assumptions.hpp"
#include "funnelctl/controller.hpp"
#include "funnelctl/jet.hpp"
#include "funnelctl/linalg.hpp"
#include "funnelctl/normalform.hpp"
#include "funnelctl/ode.hpp"
#include "funnelctl/plant.hpp"
#include "funnelctl/scenario.hpp"
#include "funnelctl/simulator.hpp"

namespace fct {

using namespace funnelctl;

inline Mat mat(std::initializer_list<std::initializer_list<double>> rows) {
  Mat m(rows.size(), rows.begin()->size());
  int i = 0;
  for (const auto& r : rows) {
    int k = 0;
    for (double v : r) m(i, k++) = v;
    ++i;
  }
  return m;
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// ---------------------------------------------------------------- fixtures

inline Plant boeing_plant() { return boeing737().plant(); }

inline Mat printed_boeing_U() {
  return mat({{0, 0, 0, 1, 0},
              {0, 0, 0, 0, 1},
              {0, 1, 0.00618, 0, 0},
              {0, 0, 1, 0, 0},
              {1, -0.0198, 1.23534, -14.16314, 219.17412}});
}

inline Mat printed_boeing_gamma() {
  return mat({{0.01184, 0.01184, 0.21327, 0.21327}, {-0.12879, -0.12879, 0.00171, 0.00171}});
}

inline Mat printed_boeing_A_hat() {
  return mat({{0, 0, 1, 0, 0},
              {0, 0, 0, 1, 0},
              {-0.29312, 4.53957, -2.17063, 0.95118, -0.02071},
              {0.03604, -0.63341, -0.16438, -0.16023, 0.00289},
              {30.2546, 29.50071, 0, 0, -0.1346}});
}

inline Plant uniqueness_plant() {
  return Plant(mat({{0, 1}, {0, 1}}), mat({{1, 1}, {1, 3}}), mat({{1, 0}}));
}

inline Plant no_weight_plant() {
  return Plant(mat({{0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}, {0, 0, 0, 0}}),
               mat({{0, 0}, {1, 0}, {0, 1}, {1, 0}}), mat({{1, 0, 0, 0}}));
}

inline Plant decaying_scalar_plant() {
  return Plant(mat({{0}}), mat({{1}}), mat({{1}}), Vec::Zero(1),
               {FaultProfile::lorentzian(0.0, 1.0)});
}

// ---------------------------------------------------------------- random systems

struct RandomSystem {
  Plant plant;
  int r = 1;
  bool q_equals_p = false;
};

inline Mat random_mat(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) m(i, k) = nd(rng);
  return m;
}

inline FaultProfile random_profile(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double to = 0.3 + 0.4 * u(rng);
  const double center = -1.0 + 2.0 * u(rng);
  const double slope = 0.5 + 1.5 * u(rng);
  return FaultProfile::erfc_decay(1.0, to, center, slope);
}

/// Random plant with strict relative degree r (C A^k B = 0 for k <= r-2) and
/// time-varying diagonal reliability. With q_equals_p the input matrix has
/// rank p, otherwise full column rank m > p. Ill-conditioned draws are
/// rejected.
inline RandomSystem random_system(std::mt19937_64& rng, bool q_equals_p) {
  std::uniform_int_distribution<int> pick_p(1, 2), pick_r(1, 3), pick_extra(0, 2), pick_m(0, 2);
  for (;;) {
    const int p = pick_p(rng), r = pick_r(rng);
    const int n = p * r + pick_extra(rng);
    const int m = q_equals_p ? p + pick_m(rng) : p + 1 + pick_m(rng) % 2;
    const Mat a = random_mat(rng, n, n) / std::sqrt(static_cast<double>(n));
    const Mat c = random_mat(rng, p, n);
    Mat basis;
    if (r == 1) {
      basis = Mat::Identity(n, n);
    } else {
      Mat stack(p * (r - 1), n);
      Mat row = c;
      for (int k = 0; k + 1 < r; ++k) {
        stack.middleRows(k * p, p) = row;
        row = row * a;
      }
      basis = nullspace_basis(stack);
    }
    if (basis.cols() < m && !q_equals_p) continue;
    Mat coeff;
    if (q_equals_p)
      coeff = random_mat(rng, basis.cols(), p) * random_mat(rng, p, m);
    else
      coeff = random_mat(rng, basis.cols(), m);
    const Mat b = basis * coeff;
    std::vector<FaultProfile> prof;
    for (int i = 0; i < m; ++i) prof.push_back(random_profile(rng));
    Plant plant(a, b, c, Vec::Zero(n), prof);
    try {
      const NormalFormBuilder nb(plant, r);
      const Mat g = nb.calC() * nb.calB_jet(0.0, 0)[0];
      const Eigen::JacobiSVD<Mat> svd(g);
      const auto& s = svd.singularValues();
      if (s(s.size() - 1) < 1e-3 * s(0)) continue;
      if (rank_of(b * plant.reliability(0.0)) != (q_equals_p ? p : m)) continue;
      Mat uinv = nb.U_jet(0.0).Uinv;
      if (Eigen::JacobiSVD<Mat>(uinv).singularValues().maxCoeff() > 1e3) continue;
    } catch (const Error&) {
      continue;
    }
    return {std::move(plant), r, q_equals_p};
  }
}

// ---------------------------------------------------------------- properties

struct PropertyResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  double worst = 0.0;  // worst observed deviation (property-specific scale)
  bool pass() const { return cases > 0 && failures == 0; }
};

inline PropertyResult prop_penrose(int cases, std::uint64_t seed) {
  PropertyResult res{"penrose identities"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int c = 0; c < cases; ++c) {
    const int rows = dim(rng), cols = dim(rng);
    const int rank = std::uniform_int_distribution<int>(1, std::min(rows, cols))(rng);
    const Mat m = random_mat(rng, rows, rank) * random_mat(rng, rank, cols);
    const Mat mp = pinv(m, 1e-9);
    const double d = std::max({max_abs(m * mp * m - m) / max_abs(m),
                               max_abs(mp * m * mp - mp) / max_abs(mp),
                               max_abs((m * mp).transpose() - m * mp),
                               max_abs((mp * m).transpose() - mp * m)});
    res.worst = std::max(res.worst, d);
    ++res.cases;
    if (d > 1e-9) ++res.failures;
  }
  return res;
}

inline PropertyResult prop_rank_nullity(int cases, std::uint64_t seed) {
  PropertyResult res{"rank + nullity = cols"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, 7);
  for (int c = 0; c < cases; ++c) {
    const int rows = dim(rng), cols = dim(rng);
    const int rank = std::uniform_int_distribution<int>(0, std::min(rows, cols))(rng);
    const Mat m = rank == 0 ? Mat::Zero(rows, cols)
                            : Mat(random_mat(rng, rows, rank) * random_mat(rng, rank, cols));
    const Mat v = nullspace_basis(m);
    const bool ok = rank_of(m) + v.cols() == cols && rank_of(m) == rank &&
                    (v.cols() == 0 || max_abs(m * v) <= 1e-9 * std::max(1.0, max_abs(m)));
    ++res.cases;
    if (!ok) ++res.failures;
  }
  return res;
}

inline Jet<double> random_jet(std::mt19937_64& rng, int order) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> c(order + 1);
  for (auto& v : c) v = u(rng);
  return Jet<double>(std::move(c));
}

inline PropertyResult prop_jet_algebra(int cases, std::uint64_t seed) {
  PropertyResult res{"jet_mul commutative/associative, jet_recip inverse"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ord(0, 4);
  for (int c = 0; c < cases; ++c) {
    const int k = ord(rng);
    const Jet<double> a = random_jet(rng, k), b = random_jet(rng, k), d = random_jet(rng, k);
    double dev = 0.0;
    const Jet<double> ab = jet_mul(a, b), ba = jet_mul(b, a);
    const Jet<double> l = jet_mul(jet_mul(a, b), d), r = jet_mul(a, jet_mul(b, d));
    for (int j = 0; j <= k; ++j) {
      dev = std::max(dev, std::abs(ab[j] - ba[j]));
      dev = std::max(dev, std::abs(l[j] - r[j]) / std::max(1.0, std::abs(l[j])));
    }
    bool ok = dev <= 1e-12;
    Jet<double> a1 = a;
    a1[0] = (a1[0] >= 0 ? 1.0 : -1.0) * (0.5 + std::abs(a1[0]));
    const Jet<double> unit = jet_mul(a1, jet_recip(a1));
    double udev = std::abs(unit[0] - 1.0);
    for (int j = 1; j <= k; ++j) udev = std::max(udev, std::abs(unit[j]));
    ok = ok && udev <= 1e-10;
    res.worst = std::max({res.worst, dev, udev});
    ++res.cases;
    if (!ok) ++res.failures;
  }
  return res;
}

inline PropertyResult prop_U_inverse(int cases, std::uint64_t seed) {
  PropertyResult res{"U Uinv = I"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> tt(-2.0, 2.0);
  for (int c = 0; c < cases; ++c) {
    const RandomSystem rs = random_system(rng, c % 2 == 0);
    const NormalFormBuilder nb(rs.plant, rs.r);
    const TransformJet tj = nb.U_jet(tt(rng));
    const int n = rs.plant.n();
    const double dev = max_abs(tj.U[0] * tj.Uinv - Mat::Identity(n, n));
    res.worst = std::max(res.worst, dev);
    ++res.cases;
    if (dev > 1e-8) ++res.failures;
  }
  return res;
}

/// Blocks (i, j) of calC calB with i + j < r - 1 vanish; those with
/// i + j = r - 1 equal (-1)^j Gamma L.
inline PropertyResult prop_anti_triangular(int cases, std::uint64_t seed) {
  PropertyResult res{"anti-triangular calC calB"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> tt(-2.0, 2.0);
  for (int c = 0; c < cases; ++c) {
    const RandomSystem rs = random_system(rng, c % 2 == 0);
    const Plant& pl = rs.plant;
    const int p = pl.p(), m = pl.m(), r = rs.r;
    const double t = tt(rng);
    const NormalFormBuilder nb(pl, r);
    const Mat g = nb.calC() * nb.calB_jet(t, 0)[0];
    const Mat gl = nb.gamma() * pl.reliability(t);
    const double scale = std::max(g.norm(), 1e-300);
    double dev = 0.0;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        const Mat blk = g.block(i * p, j * m, p, m);
        if (i + j < r - 1) dev = std::max(dev, blk.norm() / scale);
        if (i + j == r - 1)
          dev = std::max(dev, (blk - ((j % 2) ? -1.0 : 1.0) * gl).norm() / scale);
      }
    res.worst = std::max(res.worst, dev);
    ++res.cases;
    if (dev > 1e-9) ++res.failures;
  }
  return res;
}

inline PropertyResult prop_vanishing_blocks(int cases, std::uint64_t seed) {
  PropertyResult res{"N = 0 and P_2..P_r = 0 when q = p"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> tt(-2.0, 2.0);
  for (int c = 0; c < cases; ++c) {
    const RandomSystem rs = random_system(rng, true);
    const NormalForm nf = NormalFormBuilder(rs.plant, rs.r).blocks(tt(rng));
    const double scale_a = std::max(1.0, max_abs(nf.A_hat));
    const double scale_b = std::max(1.0, max_abs(nf.B_hat));
    double dev = max_abs(nf.N) / scale_b;
    for (std::size_t i = 1; i < nf.P.size(); ++i) dev = std::max(dev, max_abs(nf.P[i]) / scale_a);
    res.worst = std::max(res.worst, dev);
    ++res.cases;
    if (dev > 1e-8) ++res.failures;
  }
  return res;
}

inline PropertyResult prop_projection_identity(int cases, std::uint64_t seed) {
  PropertyResult res{"(I - calB (calC calB)^+ calC) calB = 0"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> tt(-2.0, 2.0);
  for (int c = 0; c < cases; ++c) {
    const RandomSystem rs = random_system(rng, true);
    const NormalFormBuilder nb(rs.plant, rs.r);
    const double t = tt(rng);
    const Mat cb = nb.calB_jet(t, 0)[0];
    const Mat w = nb.calB_Gpinv_jet(t)[0];
    const int n = rs.plant.n();
    const double dev =
        max_abs((Mat::Identity(n, n) - w * nb.calC()) * cb) / std::max(1.0, max_abs(cb));
    res.worst = std::max(res.worst, dev);
    ++res.cases;
    if (dev > 1e-8) ++res.failures;
  }
  return res;
}

inline PropertyResult prop_Udot_fd(int cases, std::uint64_t seed) {
  PropertyResult res{"U' jet vs central difference"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> tt(-1.5, 1.5);
  constexpr double h = 1e-4;
  for (int c = 0; c < cases; ++c) {
    const RandomSystem rs = random_system(rng, c % 2 == 1);
    const NormalFormBuilder nb(rs.plant, rs.r);
    const double t = tt(rng);
    const Mat ud = nb.U_jet(t).U[1];
    const Mat fd = (nb.U_jet(t + h).U[0] - nb.U_jet(t - h).U[0]) / (2.0 * h);
    const Mat u = nb.U_jet(t).U[0];
    const double denom = std::max(ud.norm(), 1e-3 * u.norm());
    const double dev = (ud - fd).norm() / denom;
    res.worst = std::max(res.worst, dev);
    ++res.cases;
    if (dev > 1e-4) ++res.failures;
  }
  return res;
}

struct SmoothError {
  std::vector<double> amp, omega, phase;
  Jet<Vec> jet(double t, int order) const {
    const int p = static_cast<int>(amp.size());
    std::vector<Vec> c(order + 1, Vec::Zero(p));
    for (int j = 0; j < p; ++j) {
      double w = 1.0;
      for (int k = 0; k <= order; ++k) {
        const double arg = omega[j] * t + phase[j] + k * std::numbers::pi / 2;
        c[k](j) = amp[j] * w * std::sin(arg);
        w *= omega[j];
      }
    }
    return Jet<Vec>(std::move(c));
  }
};

inline SmoothError random_error(std::mt19937_64& rng, int p, double bound) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SmoothError e;
  for (int j = 0; j < p; ++j) {
    e.amp.push_back(bound * (0.2 + 0.8 * u(rng)) / std::sqrt(static_cast<double>(p)));
    e.omega.push_back(0.3 + 1.2 * u(rng));
    e.phase.push_back(6.0 * u(rng));
  }
  return e;
}

inline std::vector<FunnelSpec> random_funnels(std::mt19937_64& rng, int r) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<FunnelSpec> f;
  for (int i = 0; i < r; ++i)
    f.push_back(FunnelSpec::exp_plus_const(1.0 + 3.0 * u(rng), 0.2 + u(rng), 0.5 + u(rng)));
  return f;
}

/// e_{i+1} from the jet cascade against d/dt e_i (central difference of the
/// cascade of one level less) plus k_i e_i, for r = 2 and r = 3.
inline PropertyResult prop_cascade_fd(int cases, std::uint64_t seed) {
  PropertyResult res{"cascade e_i jets vs central difference"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> tt(0.0, 3.0);
  constexpr double h = 1e-5;
  int c = 0;
  while (res.cases < cases) {
    const int r = 2 + (c++ % 2);
    const int p = 1 + static_cast<int>(rng() % 2);
    const auto funnels = random_funnels(rng, r);
    const double t = tt(rng);
    // stay well inside the smallest funnel around t
    double bound = 1e300;
    for (double s : {t - h, t, t + h}) bound = std::min(bound, 1.0 / funnels[0].value(s));
    const SmoothError e0 = random_error(rng, p, 0.05 * bound);
    try {
      const CascadeState full = cascade(e0.jet(t, r - 1), funnels, t);
      const std::span<const FunnelSpec> lower(funnels.data(), r - 1);
      const Vec prev_p = cascade(e0.jet(t + h, r - 2), lower, t + h).e.back();
      const Vec prev_m = cascade(e0.jet(t - h, r - 2), lower, t - h).e.back();
      const Vec fd = (prev_p - prev_m) / (2.0 * h);
      const Vec expect = fd + full.gains[r - 2] * full.e[r - 2];
      const double dev = (full.e[r - 1] - expect).norm() / std::max(full.e[r - 1].norm(), 1e-6);
      res.worst = std::max(res.worst, dev);
      ++res.cases;
      if (dev > 1e-4) ++res.failures;
    } catch (const FunnelViolation&) {
      // a later level left its funnel; draw again
    }
  }
  return res;
}

inline PropertyResult prop_gains(int cases, std::uint64_t seed) {
  PropertyResult res{"k_i >= 1 inside the funnel, r = 1 identity"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (res.cases < cases) {
    const int r = 1 + static_cast<int>(rng() % 3);
    const int p = 1 + static_cast<int>(rng() % 3);
    const auto funnels = random_funnels(rng, r);
    const double t = 3.0 * u(rng);
    const SmoothError e0 = random_error(rng, p, 0.9 / funnels[0].value(t));
    const Jet<Vec> j = e0.jet(t, r - 1);
    try {
      const CascadeState st = cascade(j, funnels, t);
      bool ok = true;
      for (int i = 0; i < r; ++i) {
        ok = ok && st.gains[i] >= 1.0 && st.margins[i] < 1.0;
        ok = ok && std::abs(st.gains[i] - 1.0 / (1.0 - st.margins[i] * st.margins[i])) <=
                       1e-12 * st.gains[i];
      }
      if (r == 1) ok = ok && (st.e[0].array() == j.value().array()).all();
      ++res.cases;
      if (!ok) ++res.failures;
    } catch (const FunnelViolation&) {
    }
  }
  return res;
}

inline PropertyResult prop_erfc_fd(int cases, std::uint64_t seed) {
  PropertyResult res{"erfc jet vs central difference"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> tt(-3.0, 3.0);
  constexpr double h = 1e-5;
  for (int c = 0; c < cases; ++c) {
    const double t = tt(rng);
    const Jet<double> j = erfc_jet(t, 3), jp = erfc_jet(t + h, 3), jm = erfc_jet(t - h, 3);
    double dev = 0.0;
    for (int k = 1; k <= 3; ++k) {
      const double fd = (jp[k - 1] - jm[k - 1]) / (2.0 * h);
      dev = std::max(dev, std::abs(j[k] - fd) / std::max(std::abs(j[k]), 1e-6));
    }
    res.worst = std::max(res.worst, dev);
    ++res.cases;
    if (dev > 1e-4) ++res.failures;
  }
  return res;
}

inline std::vector<PropertyResult> all_properties(int cases) {
  return {prop_penrose(cases, 11),          prop_rank_nullity(cases, 12),
          prop_jet_algebra(cases, 13),      prop_erfc_fd(cases, 14),
          prop_U_inverse(cases, 21),        prop_anti_triangular(cases, 22),
          prop_vanishing_blocks(cases, 23), prop_projection_identity(cases, 24),
          prop_Udot_fd(cases, 25),          prop_cascade_fd(cases, 31),
          prop_gains(cases, 32)};
}

// ---------------------------------------------------------------- order test

struct OrderResult {
  std::vector<long> steps;
  std::vector<double> errors;
  double ratio = 0.0;  // errors[k] / errors[k+1] for the last pair
};

/// Fixed-step RK4 on the Boeing closed loop over [t0, t1] starting from the
/// adaptive solution at t0, compared with a tightly converged adaptive run.
inline OrderResult rk4_order_test(double t0 = 1.0, double t1 = 1.5,
                                  std::vector<long> steps = {100, 200}) {
  const Scenario s = boeing737();
  const ClosedLoop sys = s.closed_loop();
  auto f = [&](double t, const Vec& x) { return sys.rhs(t, x).first; };
  OdeOptions tight;
  tight.rtol = 1e-13;
  tight.atol = 1e-15;
  const std::vector<double> to0{t0};
  const Vec x0 = dopri45(f, 0.0, s.plant().x0(), to0, tight, [](double, const Vec&) {});
  const std::vector<double> to1{t1};
  const Vec ref = dopri45(f, t0, x0, to1, tight, [](double, const Vec&) {});
  OrderResult res;
  res.steps = steps;
  for (long n : steps) res.errors.push_back((rk4_fixed(f, t0, t1, x0, n) - ref).norm() /
                                            ref.norm());
  res.ratio = res.errors[res.errors.size() - 2] / res.errors.back();
  return res;
}

}  // namespace fct
