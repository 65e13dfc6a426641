#pragma once

// Grid-based verification of the structural assumptions behind the fault
// tolerant funnel controller. "Bounded on R" conditions can only be checked
// on the sampled horizon; each check records the grid and the extremal value.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "funnelctl/linalg.hpp"
#include "funnelctl/normalform.hpp"
#include "funnelctl/ode.hpp"
#include "funnelctl/plant.hpp"

namespace funnelctl {

struct GridInfo {
  double start = 0.0;
  double end = 0.0;
  int points = 0;
  double spacing = 0.0;
};

struct AssumptionCheck {
  std::string name;
  GridInfo grid;
  double worst = 0.0;       // extremal value over the grid
  double worst_time = 0.0;  // where it was attained
  double threshold = 0.0;
  bool pass = false;
  bool heuristic = false;
  std::string detail;
};

struct AssumptionReport {
  int r = 0;
  int q = 0;  // rank B L(t) (first grid point; P1 requires it constant)
  bool q_equals_p = false;
  std::vector<AssumptionCheck> checks;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
  }
  const AssumptionCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

struct CheckOptions {
  double tol = kRankTol;
  double alpha_lyapunov = 1e-6;  // lower bound for det(calC calB (calC calB)^T)
  double alpha_weight = 1e-6;    // lower bound for min eig of Gamma L K + (Gamma L K)^T
  double q_constant_tol = 1e-10; // Q treated as constant below this relative variation
  WeightMethod method = WeightMethod::gamma_transpose;
  Mat explicit_k;
};

inline std::vector<double> uniform_grid(double t0, double t1, int points) {
  std::vector<double> g;
  if (points < 1) return g;
  if (points == 1) return {t0};
  g.reserve(points);
  for (int i = 0; i < points; ++i)
    g.push_back(t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(points - 1));
  return g;
}

namespace detail {

inline GridInfo grid_info(std::span<const double> grid) {
  GridInfo g;
  g.points = static_cast<int>(grid.size());
  if (!grid.empty()) {
    g.start = grid.front();
    g.end = grid.back();
    g.spacing = grid.size() > 1 ? (g.end - g.start) / static_cast<double>(grid.size() - 1) : 0.0;
  }
  return g;
}

// Least-squares slope of log max_j |eta_j(t)| for eta' = Q(t) eta started
// from the unit vectors at grid.front().
template <class QFn>
double decay_rate(QFn&& q_at, std::span<const double> grid, int dim) {
  const auto rhs = [&](double t, const Vec& flat) {
    const Mat q = q_at(t);
    const Eigen::Map<const Mat> phi(flat.data(), dim, dim);
    Mat d = q * phi;
    return Vec(Eigen::Map<Vec>(d.data(), d.size()));
  };
  Vec flat = Eigen::Map<const Vec>(Mat::Identity(dim, dim).eval().data(), dim * dim);
  std::vector<double> ts, ls;
  ts.push_back(grid.front());
  ls.push_back(0.0);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    flat = rk4_fixed(rhs, grid[i - 1], grid[i], flat, 4);
    const Eigen::Map<const Mat> phi(flat.data(), dim, dim);
    double worst = 0.0;
    for (int j = 0; j < dim; ++j) worst = std::max(worst, phi.col(j).norm());
    ts.push_back(grid[i]);
    ls.push_back(std::log(std::max(worst, std::numeric_limits<double>::min())));
  }
  const double n = static_cast<double>(ts.size());
  double st = 0, sl = 0, stt = 0, stl = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sl += ls[i];
    stt += ts[i] * ts[i];
    stl += ts[i] * ls[i];
  }
  const double den = n * stt - st * st;
  return den != 0.0 ? (n * stl - st * sl) / den : 0.0;
}

}  // namespace detail

/// Evaluates P1 (rank B L = q >= p), P2 (relative degree r), P3 via
/// det(calC calB (calC calB)^T) >= alpha, P4 (exponential stability of
/// eta' = Q eta), existence of a weight (image condition) and definiteness of
/// Gamma L K on the given grid. Failures are reported, never thrown.
inline AssumptionReport check_assumptions(const Plant& plant, int r,
                                          std::span<const double> grid,
                                          const CheckOptions& opt = {}) {
  AssumptionReport rep;
  rep.r = r;
  const GridInfo gi = detail::grid_info(grid);
  const int p = plant.p(), n = plant.n();
  auto make = [&](const char* name, double threshold) {
    AssumptionCheck c;
    c.name = name;
    c.grid = gi;
    c.threshold = threshold;
    return c;
  };

  // P1: constant rank q >= p of B L(t).
  {
    AssumptionCheck c = make("P1_rank_q", static_cast<double>(p));
    int qmin = std::numeric_limits<int>::max(), qmax = -1;
    double tmin = gi.start;
    for (double t : grid) {
      const int q = rank_of(plant.B() * plant.reliability(t), opt.tol);
      if (q < qmin) {
        qmin = q;
        tmin = t;
      }
      qmax = std::max(qmax, q);
    }
    rep.q = grid.empty() ? 0 : rank_of(plant.B() * plant.reliability(grid.front()), opt.tol);
    rep.q_equals_p = rep.q == p;
    c.worst = qmin;
    c.worst_time = tmin;
    c.pass = !grid.empty() && qmin == qmax && qmin >= p;
    c.detail = "q=" + std::to_string(rep.q) + (rep.q_equals_p ? " (q = p)" : " (q > p)");
    if (qmin != qmax) c.detail += "; rank varies over grid";
    rep.checks.push_back(c);
  }

  // P2: C A^k B L = 0 for k <= r-2 and rank Gamma L = p.
  {
    AssumptionCheck c = make("P2_relative_degree_r", opt.tol);
    double worst_sigma = std::numeric_limits<double>::infinity(), t_sigma = gi.start;
    double worst_leak = 0.0;
    bool ok = r >= 1 && r <= n && !grid.empty();
    if (ok) {
      std::vector<Mat> cak;  // C A^k B for k = 0..r-1
      std::vector<double> scale;
      Mat akb = plant.B();
      for (int k = 0; k < r; ++k) {
        cak.push_back(plant.C() * akb);
        scale.push_back(plant.C().norm() * akb.norm());
        akb = plant.A() * akb;
      }
      for (double t : grid) {
        const Mat l = plant.reliability(t);
        for (int k = 0; k + 1 < r; ++k) {
          const double leak = (cak[k] * l).norm() / std::max(scale[k] * l.norm(), 1e-300);
          worst_leak = std::max(worst_leak, leak);
          if (leak > opt.tol) ok = false;
        }
        const Mat gl = cak[r - 1] * l;
        if (rank_of(gl, opt.tol) != p) ok = false;
        const double s = relative_sigma(gl, p);
        if (s < worst_sigma) {
          worst_sigma = s;
          t_sigma = t;
        }
      }
    }
    c.worst = std::isfinite(worst_sigma) ? worst_sigma : 0.0;
    c.worst_time = t_sigma;
    c.pass = ok;
    c.detail = "r=" + std::to_string(r) + "; worst sigma_p/sigma_1 of Gamma L; max relative |C A^k B L|, k<=r-2: " +
               std::to_string(worst_leak);
    rep.checks.push_back(c);
  }

  const bool structural_ok = rep.checks.back().pass;
  std::optional<NormalFormBuilder> builder;
  std::string builder_error;
  if (structural_ok) {
    try {
      builder.emplace(plant, r, opt.tol);
    } catch (const Error& e) {
      builder_error = e.what();
    }
  } else {
    builder_error = "relative degree conditions fail";
  }

  // P3 via det(calC calB (calC calB)^T) >= alpha.
  {
    AssumptionCheck c = make("P3_lyapunov", opt.alpha_lyapunov);
    if (builder) {
      double worst = std::numeric_limits<double>::infinity(), tw = gi.start;
      for (double t : grid) {
        const Mat g = builder->calC() * builder->calB_jet(t, 0)[0];
        const double d = (g * g.transpose()).determinant();
        if (d < worst) {
          worst = d;
          tw = t;
        }
      }
      c.worst = worst;
      c.worst_time = tw;
      c.pass = worst >= opt.alpha_lyapunov;
      c.detail = "min det(calC calB (calC calB)^T) over grid";
    } else {
      c.detail = builder_error;
    }
    rep.checks.push_back(c);
  }

  // Normal forms on the grid (needed for P4 and the weight checks).
  std::vector<NormalForm> nfs;
  std::string nf_error;
  if (builder) {
    try {
      for (double t : grid) nfs.push_back(builder->blocks(t));
    } catch (const Error& e) {
      nf_error = e.what();
      nfs.clear();
    }
  } else {
    nf_error = builder_error;
  }

  // P4: zero dynamics eta' = Q(t) eta.
  {
    AssumptionCheck c = make("P4_zero_dynamics", 0.0);
    const int nz = n - p * r;
    if (!nfs.empty() && nz == 0) {
      c.pass = true;
      c.detail = "no internal dynamics (n = p r)";
      c.worst = 0.0;
    } else if (!nfs.empty()) {
      double variation = 0.0;
      const double qscale = std::max(1.0, nfs.front().Q.cwiseAbs().maxCoeff());
      for (const auto& nf : nfs)
        variation = std::max(variation, (nf.Q - nfs.front().Q).cwiseAbs().maxCoeff() / qscale);
      if (variation < opt.q_constant_tol) {
        const Eigen::EigenSolver<Mat> es(nfs.front().Q, false);
        const double re = es.eigenvalues().real().maxCoeff();
        c.worst = re;
        c.worst_time = gi.start;
        c.pass = re < 0.0;
        c.detail = "Q constant on grid; max real part of spectrum";
      } else {
        c.heuristic = true;
        try {
          const double rate = detail::decay_rate(
              [&](double t) { return builder->blocks(t).Q; }, grid, nz);
          c.worst = rate;
          c.pass = rate < 0.0;
          c.detail = "Q time-varying (relative variation " + std::to_string(variation) +
                     "); fitted exponential decay rate of eta' = Q(t) eta (heuristic)";
        } catch (const Error& e) {
          c.detail = e.what();
        }
      }
    } else {
      c.detail = nf_error;
    }
    rep.checks.push_back(c);
  }

  // Existence of a weight with Gamma L K = I and N K = 0: im calB (calC calB)^+ [0; I] within im B L.
  {
    AssumptionCheck c = make("weight_existence", opt.tol);
    if (builder) {
      try {
        bool ok = true;
        double worst = 0.0, tw = gi.start;
        for (double t : grid) {
          const Mat bl = plant.B() * plant.reliability(t);
          const Mat target = builder->pinv_target(t);
          const Mat resid = target - bl * pinv(bl, opt.tol) * target;
          const double dist = resid.norm() / std::max(target.norm(), 1e-300);
          if (dist > worst) {
            worst = dist;
            tw = t;
          }
          if (!builder->image_contained(target, bl)) ok = false;
        }
        c.worst = worst;
        c.worst_time = tw;
        c.pass = ok;
        c.detail = "rank test; worst = relative distance of the target image from im B L";
      } catch (const Error& e) {
        c.detail = e.what();
      }
    } else {
      c.detail = builder_error;
    }
    rep.checks.push_back(c);
  }

  // Definiteness of Gamma L K and N K = 0 for the configured weight.
  {
    AssumptionCheck c = make("weight_definiteness", opt.alpha_weight);
    if (!nfs.empty()) {
      try {
        double worst = std::numeric_limits<double>::infinity(), tw = gi.start, nk = 0.0;
        bool nk_ok = true;
        for (std::size_t i = 0; i < grid.size(); ++i) {
          const WeightResult w =
              builder->weight_from(nfs[i], grid[i], opt.method, opt.explicit_k, opt.alpha_weight);
          if (w.min_sym_eig < worst) {
            worst = w.min_sym_eig;
            tw = grid[i];
          }
          nk = std::max(nk, w.nk_residual);
          if (w.nk_residual > 1e-8 * std::max(1.0, nfs[i].N.norm() * w.K.norm())) nk_ok = false;
        }
        c.worst = worst;
        c.worst_time = tw;
        c.pass = worst >= opt.alpha_weight && nk_ok;
        c.detail = std::string("method ") + to_string(opt.method) +
                   "; min eig of Gamma L K + (Gamma L K)^T; max |N K| = " + std::to_string(nk);
      } catch (const Error& e) {
        c.detail = std::string("method ") + to_string(opt.method) + ": " + e.what();
      }
    } else {
      c.detail = nf_error;
    }
    rep.checks.push_back(c);
  }

  return rep;
}

}  // namespace funnelctl
