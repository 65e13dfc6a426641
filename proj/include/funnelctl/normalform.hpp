#pragma once

// Time-varying Byrnes-Isidori normal form for plants with redundant actuators.
//
// With calC = [C; CA; ...; CA^{r-1}] and
//      calB(t) = [BL, (d/dt - A)(BL), ..., (d/dt - A)^{r-1}(BL)],
// the transformation U(t) = [calC; Vt (I - calB (calC calB)^+ calC)] with
// im V = ker calC has inverse [calB (calC calB)^+, V]. In z = U x the plant
// takes the companion form
//
//   A_hat = (U A + U') U^{-1} = [ 0  I  ...  0 | 0 ]
//                               [ ...           | . ]
//                               [ R_1 ... R_r   | S ]
//                               [ P_1 ... P_r   | Q ]
//   B_hat = U B L = [0; ...; Gamma L; N],   C_hat = [I_p 0 ... 0].

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "funnelctl/errors.hpp"
#include "funnelctl/jet.hpp"
#include "funnelctl/linalg.hpp"
#include "funnelctl/plant.hpp"

namespace funnelctl {

enum class WeightMethod { gamma_transpose, pinv_formula, explicit_matrix };

inline const char* to_string(WeightMethod m) {
  switch (m) {
    case WeightMethod::gamma_transpose:
      return "gamma_transpose";
    case WeightMethod::pinv_formula:
      return "pinv_formula";
    case WeightMethod::explicit_matrix:
      return "explicit";
  }
  return "?";
}

inline Mat build_calC(const Plant& plant, int r) {
  if (r < 1) throw StructureError("relative degree must be at least 1", 0.0);
  const int p = plant.p();
  Mat calC(p * r, plant.n());
  Mat row = plant.C();
  for (int k = 0; k < r; ++k) {
    calC.middleRows(k * p, p) = row;
    row = row * plant.A();
  }
  return calC;
}

/// Jet of calB at t. M_0 = B L, M_{k+1} = M_k' - A M_k, evaluated on jets;
/// needs reliability derivatives up to r - 1 + order.
inline Jet<Mat> build_calB_jet(const Plant& plant, double t, int r, int order) {
  if (r < 1) throw StructureError("relative degree must be at least 1", t);
  if (order < 0) throw NumericError("build_calB_jet: negative order");
  const Jet<Mat> l = plant.reliability_jet(t, r - 1 + order);
  if (l.order() < r - 1 + order)
    throw NumericError("build_calB_jet: reliability jet order too low");
  std::vector<Jet<Mat>> blocks;
  blocks.reserve(r);
  Jet<Mat> mk = jet_mul(plant.B(), l);
  for (int k = 0; k < r; ++k) {
    blocks.push_back(mk.truncated(order));
    if (k + 1 < r) mk = mk.derivative() - jet_mul(plant.A(), mk).truncated(mk.order() - 1);
  }
  return jet_hcat(blocks);
}

inline Mat high_frequency_gain(const Plant& plant, int r) {
  Mat g = plant.C();
  for (int k = 1; k < r; ++k) g = g * plant.A();
  return g * plant.B();
}

struct RelativeDegree {
  int r = 0;
  Mat gamma;  // C A^{r-1} B
};

/// Smallest r with C A^k B L(t) = 0 for k <= r-2 and rank C A^{r-1} B L(t) = p
/// on every grid point.
inline RelativeDegree detect_relative_degree(const Plant& plant, std::span<const double> grid,
                                             double tol = kRankTol) {
  if (grid.empty()) throw StructureError("detect_relative_degree: empty time grid", 0.0);
  std::vector<Mat> l;
  l.reserve(grid.size());
  for (double t : grid) l.push_back(plant.reliability(t));

  Mat akb = plant.B();  // A^k B
  for (int k = 0; k < plant.n(); ++k) {
    const Mat cakb = plant.C() * akb;
    const double scale = plant.C().norm() * akb.norm();
    bool all_zero = true;
    bool all_full = true;
    for (const auto& li : l) {
      const Mat m = cakb * li;
      if (m.norm() > tol * std::max(scale * li.norm(), std::numeric_limits<double>::min()))
        all_zero = false;
      if (rank_of(m, tol) != plant.p()) all_full = false;
    }
    if (all_full) return {k + 1, cakb};
    if (!all_zero) break;
    akb = plant.A() * akb;
  }
  throw StructureError("no strict relative degree: C A^k B L(t) is neither zero nor of full row rank",
                       grid.front());
}

struct TransformJet {
  Jet<Mat> U;     // value and first derivative
  Mat Uinv;
  double residual = 0.0;  // max |U Uinv - I|
};

struct NormalForm {
  double t = 0.0;
  int r = 0;
  Mat U, Udot, Uinv;
  Mat A_hat, B_hat, C_hat;
  std::vector<Mat> R;  // R_1..R_r, p x p
  Mat S;               // p x (n - pr)
  std::vector<Mat> P;  // P_1..P_r, (n - pr) x p
  Mat Q;               // (n - pr) x (n - pr)
  Mat N;               // (n - pr) x m
  Mat gamma;           // p x m
  Mat gamma_L;         // p x m
  double inverse_residual = 0.0;
  double structure_residual = 0.0;
};

struct WeightResult {
  Mat K;
  double min_sym_eig = 0.0;       // of Gamma L K + (Gamma L K)^T
  double nk_residual = 0.0;       // max |N K|
  double identity_residual = 0.0; // max |Gamma L K - I|, pinv_formula only
  bool definite = false;          // min_sym_eig >= alpha
  std::vector<std::string> warnings;
};

/// Builds the normal form of one plant at arbitrary times. Construction fixes
/// calC, its kernel basis V (orthonormal, so V^+ = V^T) and Gamma.
class NormalFormBuilder {
 public:
  NormalFormBuilder(Plant plant, int r, double tol = kRankTol, double structure_tol = 1e-8)
      : plant_(std::move(plant)), r_(r), tol_(tol), structure_tol_(structure_tol) {
    if (r_ < 1 || r_ > plant_.n())
      throw StructureError("relative degree " + std::to_string(r_) + " outside [1, n]", 0.0);
    calC_ = build_calC(plant_, r_);
    rho_ = rank_of(calC_, tol_);
    if (rho_ != plant_.p() * r_)
      throw StructureError("rank of the stacked output matrix is " + std::to_string(rho_) +
                               ", expected p*r = " + std::to_string(plant_.p() * r_),
                           0.0);
    v_ = nullspace_basis(calC_, tol_);
    gamma_ = high_frequency_gain(plant_, r_);
  }

  const Plant& plant() const { return plant_; }
  int r() const { return r_; }
  int rho() const { return rho_; }
  const Mat& calC() const { return calC_; }
  const Mat& V() const { return v_; }
  const Mat& gamma() const { return gamma_; }
  double tol() const { return tol_; }

  Jet<Mat> calB_jet(double t, int order) const { return build_calB_jet(plant_, t, r_, order); }

  /// Jet (order 1) of calB (calC calB)^+, using the full-row-rank formula
  /// G^+ = G^T (G G^T)^{-1} so the derivative follows from the product rule.
  Jet<Mat> calB_Gpinv_jet(double t) const {
    const Jet<Mat> calB = calB_jet(t, 1);
    const Jet<Mat> g = jet_mul(calC_, calB);
    if (rank_of(g.value(), tol_) != rho_)
      throw StructureError("relative degree violated at t=" + std::to_string(t) +
                               ": calC calB(t) lost rank",
                           t);
    const Jet<Mat> gt = jet_transpose(g);
    const Jet<Mat> gpinv = jet_mul(gt, jet_inverse(jet_mul(g, gt)));
    return jet_mul(calB, gpinv);
  }

  TransformJet U_jet(double t) const {
    const int n = plant_.n();
    const Jet<Mat> w = calB_Gpinv_jet(t);
    const Mat vt = v_.transpose();
    Mat u(n, n), udot = Mat::Zero(n, n);
    u.topRows(rho_) = calC_;
    u.bottomRows(n - rho_) = vt - vt * w[0] * calC_;
    udot.bottomRows(n - rho_) = -vt * w[1] * calC_;
    Mat uinv(n, n);
    uinv.leftCols(rho_) = w[0];
    uinv.rightCols(n - rho_) = v_;
    const double residual = (u * uinv - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
    return {Jet<Mat>({std::move(u), std::move(udot)}), std::move(uinv), residual};
  }

  NormalForm blocks(double t) const {
    const int n = plant_.n(), p = plant_.p(), r = r_;
    const int pr = p * r, nz = n - pr;
    const TransformJet tj = U_jet(t);
    const Mat l = plant_.reliability(t);

    NormalForm nf;
    nf.t = t;
    nf.r = r;
    nf.U = tj.U[0];
    nf.Udot = tj.U[1];
    nf.Uinv = tj.Uinv;
    nf.inverse_residual = tj.residual;
    nf.A_hat = (nf.U * plant_.A() + nf.Udot) * nf.Uinv;
    nf.B_hat = nf.U * plant_.B() * l;
    nf.C_hat = plant_.C() * nf.Uinv;
    nf.gamma = gamma_;
    nf.gamma_L = nf.B_hat.middleRows(p * (r - 1), p);

    const int last = p * (r - 1);
    for (int i = 0; i < r; ++i) nf.R.push_back(nf.A_hat.block(last, i * p, p, p));
    nf.S = nf.A_hat.block(last, pr, p, nz);
    for (int i = 0; i < r; ++i) nf.P.push_back(nf.A_hat.block(pr, i * p, nz, p));
    nf.Q = nf.A_hat.block(pr, pr, nz, nz);
    nf.N = nf.B_hat.bottomRows(nz);

    check_structure(nf, l);
    return nf;
  }

  /// Controller weight K (m x p) at t with its definiteness diagnostics.
  WeightResult weight(double t, WeightMethod method, const Mat& explicit_k = Mat(),
                      double alpha = 1e-6) const {
    const NormalForm nf = blocks(t);
    return weight_from(nf, t, method, explicit_k, alpha);
  }

  WeightResult weight_from(const NormalForm& nf, double t, WeightMethod method,
                           const Mat& explicit_k = Mat(), double alpha = 1e-6) const {
    const int p = plant_.p(), m = plant_.m();
    WeightResult res;
    switch (method) {
      case WeightMethod::gamma_transpose:
        res.K = gamma_.transpose();
        break;
      case WeightMethod::explicit_matrix:
        if (explicit_k.rows() != m || explicit_k.cols() != p)
          throw DimensionError("explicit weight must be " + std::to_string(m) + "x" +
                               std::to_string(p));
        res.K = explicit_k;
        break;
      case WeightMethod::pinv_formula: {
        const Mat bl = plant_.B() * plant_.reliability(t);
        const Mat target = pinv_target(t);
        if (!image_contained(target, bl))
          throw StructureError("no feasible weight: target image not contained in im B L at t=" +
                                   std::to_string(t),
                               t);
        res.K = pinv(bl, tol_) * target;
        res.identity_residual =
            (nf.gamma_L * res.K - Mat::Identity(p, p)).cwiseAbs().maxCoeff();
        break;
      }
    }
    const Mat glk = nf.gamma_L * res.K;
    res.min_sym_eig = min_sym_eig(glk);
    res.nk_residual = nf.N.size() ? (nf.N * res.K).cwiseAbs().maxCoeff() : 0.0;
    res.definite = res.min_sym_eig >= alpha;
    if (!res.definite)
      res.warnings.push_back("Gamma L K + (Gamma L K)^T is not bounded below by alpha at t=" +
                             std::to_string(t));
    if (res.nk_residual > 1e-8 * std::max(1.0, nf.N.norm() * res.K.norm()))
      res.warnings.push_back("N K does not vanish at t=" + std::to_string(t));
    return res;
  }

  /// calB (calC calB)^+ [0; I_p]: the input direction a feasible weight must reach.
  Mat pinv_target(double t) const {
    const Mat w = calB_Gpinv_jet(t)[0];
    return w.rightCols(plant_.p());
  }

  /// Rank test for im target within im BL(t).
  bool image_contained(const Mat& target, const Mat& bl) const {
    Mat aug(bl.rows(), bl.cols() + target.cols());
    aug << bl, target;
    return rank_of(aug, tol_) == rank_of(bl, tol_);
  }

 private:
  void check_structure(NormalForm& nf, const Mat& l) const {
    const int n = plant_.n(), p = plant_.p(), r = r_;
    const int last = p * (r - 1);
    const double a_scale = std::max(1.0, nf.A_hat.cwiseAbs().maxCoeff());
    const double b_scale = std::max(1.0, nf.B_hat.cwiseAbs().maxCoeff());

    double worst = 0.0;
    auto require = [&](double dev, double scale, const std::string& block) {
      worst = std::max(worst, dev / scale);
      if (dev > structure_tol_ * scale)
        throw StructureError("normal-form structure check failed: block " + block +
                                 " deviates by " + std::to_string(dev) + " at t=" +
                                 std::to_string(nf.t),
                             nf.t);
    };

    if (last > 0) {
      Mat expected = Mat::Zero(last, n);
      expected.block(0, p, last, last) = Mat::Identity(last, last);
      require((nf.A_hat.topRows(last) - expected).cwiseAbs().maxCoeff(), a_scale,
              "A_hat chain rows");
      require(nf.B_hat.topRows(last).cwiseAbs().maxCoeff(), b_scale, "B_hat chain rows");
    }
    require((nf.gamma_L - gamma_ * l).cwiseAbs().maxCoeff(), b_scale, "Gamma L");
    Mat c_expected = Mat::Zero(p, n);
    c_expected.leftCols(p) = Mat::Identity(p, p);
    require((nf.C_hat - c_expected).cwiseAbs().maxCoeff(), 1.0, "C_hat");
    nf.structure_residual = worst;
  }

  Plant plant_;
  int r_;
  double tol_;
  double structure_tol_;
  Mat calC_;
  int rho_ = 0;
  Mat v_;
  Mat gamma_;
};

inline TransformJet build_U_jet(const Plant& plant, double t, int r) {
  return NormalFormBuilder(plant, r).U_jet(t);
}

inline NormalForm extract_blocks(const Plant& plant, double t, int r) {
  return NormalFormBuilder(plant, r).blocks(t);
}

inline WeightResult build_K(const Plant& plant, double t, int r, WeightMethod method,
                            const Mat& explicit_k = Mat(), double alpha = 1e-6) {
  return NormalFormBuilder(plant, r).weight(t, method, explicit_k, alpha);
}

}  // namespace funnelctl
