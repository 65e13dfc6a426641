#pragma once

// Truncated Taylor jets in the derivative convention: coefficient j is the
// j-th time derivative at the expansion point (not divided by j!). Products
// therefore follow the Leibniz rule with binomial weights.

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "funnelctl/errors.hpp"
#include "funnelctl/linalg.hpp"

namespace funnelctl {

namespace detail {

template <class X>
auto materialize(X&& x) {
  if constexpr (std::is_arithmetic_v<std::decay_t<X>>) {
    return static_cast<double>(x);
  } else {
    return std::forward<X>(x).eval();
  }
}

template <class T>
T zero_like(const T& x) {
  if constexpr (std::is_arithmetic_v<T>) {
    return T{0};
  } else {
    return T::Zero(x.rows(), x.cols());
  }
}

template <class T>
bool finite(const T& x) {
  if constexpr (std::is_arithmetic_v<T>) {
    return std::isfinite(x);
  } else {
    return x.allFinite();
  }
}

inline double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

}  // namespace detail

template <class T>
class Jet {
 public:
  using value_type = T;

  Jet() = default;
  explicit Jet(std::vector<T> coeffs) : c_(std::move(coeffs)) {
    if (c_.empty()) throw NumericError("Jet: needs at least one coefficient");
  }

  // Jet of a signal that is constant near the expansion point.
  static Jet constant(const T& value, int order) {
    std::vector<T> c(order + 1, detail::zero_like(value));
    c[0] = value;
    return Jet(std::move(c));
  }

  int order() const { return static_cast<int>(c_.size()) - 1; }
  const T& operator[](int j) const { return c_[j]; }
  T& operator[](int j) { return c_[j]; }
  const T& value() const { return c_.front(); }
  const std::vector<T>& coeffs() const { return c_; }

  bool all_finite() const {
    return std::all_of(c_.begin(), c_.end(), [](const T& x) { return detail::finite(x); });
  }

  Jet truncated(int order) const {
    if (order > this->order()) throw NumericError("Jet::truncated: order exceeds jet order");
    return Jet(std::vector<T>(c_.begin(), c_.begin() + order + 1));
  }

  // Jet of the time derivative: (c0, c1, ..., ck) -> (c1, ..., ck).
  Jet derivative() const {
    if (order() < 1) throw NumericError("Jet::derivative: order-0 jet has no derivative");
    return Jet(std::vector<T>(c_.begin() + 1, c_.end()));
  }

  Jet& operator+=(const Jet& o) {
    const int k = std::min(order(), o.order());
    c_.resize(k + 1);
    for (int j = 0; j <= k; ++j) c_[j] += o.c_[j];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    const int k = std::min(order(), o.order());
    c_.resize(k + 1);
    for (int j = 0; j <= k; ++j) c_[j] -= o.c_[j];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& x : c_) x *= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator-(Jet a) { return a *= -1.0; }

 private:
  std::vector<T> c_;
};

// Coefficient j of the result is sum_l C(j,l) op(a_l, b_{j-l}); the result
// order is the smaller of the two operand orders.
template <class A, class B, class Op>
auto leibniz(const Jet<A>& a, const Jet<B>& b, Op op) {
  using R = decltype(detail::materialize(op(a[0], b[0])));
  const int k = std::min(a.order(), b.order());
  std::vector<R> c;
  c.reserve(k + 1);
  for (int j = 0; j <= k; ++j) {
    R acc = detail::materialize(op(a[0], b[j]));
    for (int l = 1; l <= j; ++l) {
      acc += detail::binomial(j, l) * detail::materialize(op(a[l], b[j - l]));
    }
    c.push_back(std::move(acc));
  }
  return Jet<R>(std::move(c));
}

inline Jet<double> jet_mul(const Jet<double>& a, const Jet<double>& b) {
  return leibniz(a, b, [](double x, double y) { return x * y; });
}

inline Jet<Mat> jet_mul(const Jet<Mat>& a, const Jet<Mat>& b) {
  if (a.value().cols() != b.value().rows()) {
    throw DimensionError("jet_mul: inner dimensions " + std::to_string(a.value().cols()) +
                         " and " + std::to_string(b.value().rows()) + " differ");
  }
  return leibniz(a, b, [](const Mat& x, const Mat& y) { return x * y; });
}

// Constant matrix times matrix jet.
inline Jet<Mat> jet_mul(const Mat& a, const Jet<Mat>& b) {
  if (a.cols() != b.value().rows()) {
    throw DimensionError("jet_mul: inner dimensions " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.value().rows()) + " differ");
  }
  std::vector<Mat> c;
  c.reserve(b.order() + 1);
  for (const auto& x : b.coeffs()) c.push_back(a * x);
  return Jet<Mat>(std::move(c));
}

inline Jet<Mat> jet_mul(const Jet<Mat>& a, const Mat& b) {
  if (a.value().cols() != b.rows()) {
    throw DimensionError("jet_mul: inner dimensions " + std::to_string(a.value().cols()) +
                         " and " + std::to_string(b.rows()) + " differ");
  }
  std::vector<Mat> c;
  c.reserve(a.order() + 1);
  for (const auto& x : a.coeffs()) c.push_back(x * b);
  return Jet<Mat>(std::move(c));
}

// Scalar jet times vector jet.
inline Jet<Vec> jet_scale(const Jet<double>& s, const Jet<Vec>& v) {
  return leibniz(s, v, [](double x, const Vec& y) { return x * y; });
}

// Jet of the inner product <a, b>.
inline Jet<double> jet_dot(const Jet<Vec>& a, const Jet<Vec>& b) {
  if (a.value().size() != b.value().size()) {
    throw DimensionError("jet_dot: vector sizes differ");
  }
  return leibniz(a, b, [](const Vec& x, const Vec& y) { return x.dot(y); });
}

inline constexpr double kSingularThreshold = 1e-300;

/// Jet of 1/a. Throws NumericError when |a_0| is below kSingularThreshold.
inline Jet<double> jet_recip(const Jet<double>& a) {
  if (!(std::abs(a[0]) > kSingularThreshold)) {
    throw NumericError("jet_recip: value coefficient is zero (singular reciprocal)");
  }
  const int k = a.order();
  std::vector<double> b(k + 1, 0.0);
  b[0] = 1.0 / a[0];
  for (int j = 1; j <= k; ++j) {
    double acc = 0.0;
    for (int l = 1; l <= j; ++l) acc += detail::binomial(j, l) * a[l] * b[j - l];
    b[j] = -acc * b[0];
  }
  return Jet<double>(std::move(b));
}

/// Jet of the inverse of a square matrix signal.
inline Jet<Mat> jet_inverse(const Jet<Mat>& a) {
  const Mat& a0 = a.value();
  if (a0.rows() != a0.cols()) throw DimensionError("jet_inverse: matrix is not square");
  Eigen::FullPivLU<Mat> lu(a0);
  if (!lu.isInvertible()) throw NumericError("jet_inverse: value coefficient is singular");
  const int k = a.order();
  std::vector<Mat> b;
  b.reserve(k + 1);
  b.push_back(lu.inverse());
  for (int j = 1; j <= k; ++j) {
    Mat acc = Mat::Zero(a0.rows(), a0.cols());
    for (int l = 1; l <= j; ++l) acc += detail::binomial(j, l) * a[l] * b[j - l];
    b.push_back(-b[0] * acc);
  }
  return Jet<Mat>(std::move(b));
}

inline Jet<Mat> jet_transpose(const Jet<Mat>& a) {
  std::vector<Mat> c;
  c.reserve(a.order() + 1);
  for (const auto& x : a.coeffs()) c.push_back(x.transpose());
  return Jet<Mat>(std::move(c));
}

// Horizontal concatenation of equally-ordered matrix jets.
inline Jet<Mat> jet_hcat(const std::vector<Jet<Mat>>& blocks) {
  if (blocks.empty()) throw DimensionError("jet_hcat: no blocks");
  int k = blocks.front().order();
  for (const auto& b : blocks) k = std::min(k, b.order());
  const auto rows = blocks.front().value().rows();
  Eigen::Index cols = 0;
  for (const auto& b : blocks) {
    if (b.value().rows() != rows) throw DimensionError("jet_hcat: row counts differ");
    cols += b.value().cols();
  }
  std::vector<Mat> c;
  c.reserve(k + 1);
  for (int j = 0; j <= k; ++j) {
    Mat m(rows, cols);
    Eigen::Index at = 0;
    for (const auto& b : blocks) {
      m.middleCols(at, b[j].cols()) = b[j];
      at += b[j].cols();
    }
    c.push_back(std::move(m));
  }
  return Jet<Mat>(std::move(c));
}

}  // namespace funnelctl
