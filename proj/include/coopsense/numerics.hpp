#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "coopsense/errors.hpp"

namespace coopsense::numerics {

inline constexpr double kLn2 = std::numbers::ln2;
inline constexpr double kInvE = 0.36787944117144233;  // 1/e

/// Search interval and stopping rule for bisect().
struct RootBracket {
  double lo = 0.0;
  double hi = 1.0;
  double tol_abs = 1e-12;
  double tol_rel = 1e-12;
  std::size_t max_iter = 200;

  void check() const {
    if (!(lo < hi)) throw std::invalid_argument("RootBracket: lo must be < hi");
    if (!(tol_abs > 0.0) || !(tol_rel > 0.0))
      throw std::invalid_argument("RootBracket: tolerances must be positive");
    if (max_iter < 1) throw std::invalid_argument("RootBracket: max_iter must be >= 1");
  }
};

/// Bisection for a function with f(lo)*f(hi) <= 0. Deterministic: the
/// sequence of evaluation points depends only on the bracket.
template <typename F>
double bisect(F&& f, const RootBracket& b) {
  b.check();
  double lo = b.lo;
  double hi = b.hi;
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (std::signbit(flo) == std::signbit(fhi))
    throw BracketError("bisect: no sign change on [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
  for (std::size_t it = 0; it < b.max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= b.tol_abs + b.tol_rel * std::fabs(mid)) return mid;
    if (mid <= lo || mid >= hi) return mid;  // interval exhausted in floating point
    const double fmid = f(mid);
    if (fmid == 0.0) return mid;
    if (std::signbit(fmid) == std::signbit(flo)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  throw ConvergenceError("bisect: max_iter exceeded");
}

namespace detail {

// Halley iteration on w*e^w = y, safeguarded by a bracket [lo, hi] on which
// w*e^w - y changes sign. Falls back to bisection whenever a step leaves it.
inline double lambert_refine(double y, double w, double lo, double hi) {
  for (int it = 0; it < 100; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - y;
    if (f == 0.0) return w;
    // Keep the bracket current. On both branches we know which side of the
    // root w lies on from the sign of f and the branch's monotonicity, which
    // the caller encodes by ordering lo/hi so that f(lo) and f(hi) differ.
    const double flo = lo * std::exp(lo) - y;
    if (std::signbit(f) == std::signbit(flo))
      lo = w;
    else
      hi = w;
    const double wp1 = w + 1.0;
    double next;
    if (wp1 == 0.0) {
      next = 0.5 * (lo + hi);
    } else {
      const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
      next = w - f / denom;
    }
    if (!(next > std::min(lo, hi) && next < std::max(lo, hi))) next = 0.5 * (lo + hi);
    if (std::fabs(next - w) <= 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(next))
      return next;
    w = next;
  }
  return w;
}

// Series about the branch point y = -1/e in p = ±sqrt(2(1 + e*y)).
inline double lambert_branch_series(double p) {
  return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 +
         p * (769.0 / 17280.0 + p * (-221.0 / 8505.0))))));
}

inline double branch_distance(double y) {
  // 1 + e*y evaluated with the split constant to limit cancellation.
  const double e_hi = 2.718281828459045;
  const double e_lo = 1.4456468917292502e-16;
  return std::fma(e_hi, y, 1.0) + e_lo * y;
}

}  // namespace detail

/// Lower real branch W_{-1}(y) for y in [-1/e, 0). Returns w <= -1.
inline double lambert_w_minus1(double y) {
  if (!(y < 0.0) || y < -kInvE - 1e-15)
    throw std::domain_error("lambert_w_minus1: argument outside [-1/e, 0)");
  if (y <= -kInvE) return -1.0;
  const double q = detail::branch_distance(y);
  if (q <= 0.0) return -1.0;
  if (q < 1e-3) {
    const double p = -std::sqrt(2.0 * q);
    const double w = detail::lambert_branch_series(p);
    // The series alone is accurate to ~p^7; polish inside a tight bracket.
    double lo = w * 1.01 - 0.01;
    while (lo * std::exp(lo) - y <= 0.0) lo -= 0.1;
    return detail::lambert_refine(y, w, lo, -1.0);
  }
  const double l1 = std::log(-y);
  double w;
  if (y > -0.25) {
    const double l2 = std::log(-l1);
    w = l1 - l2 + l2 / l1;
  } else {
    w = detail::lambert_branch_series(-std::sqrt(2.0 * q));
  }
  double lo = 2.0 * l1 - 2.0;
  while (lo * std::exp(lo) - y <= 0.0) lo *= 2.0;
  if (!(w > lo && w < -1.0)) w = 0.5 * (lo - 1.0);
  return detail::lambert_refine(y, w, lo, -1.0);
}

/// Principal real branch W_0(y) for y >= -1/e. Returns w >= -1.
inline double lambert_w0(double y) {
  if (!(y >= -kInvE - 1e-15) || !std::isfinite(y))
    throw std::domain_error("lambert_w0: argument below -1/e");
  if (y <= -kInvE) return -1.0;
  if (y == 0.0) return 0.0;
  const double q = detail::branch_distance(y);
  if (q < 1e-3) {
    const double w = detail::lambert_branch_series(std::sqrt(2.0 * std::max(q, 0.0)));
    double hi = w * 0.99 + 0.01;
    while (hi * std::exp(hi) - y <= 0.0) hi += 0.1;
    return detail::lambert_refine(y, w, -1.0, hi);
  }
  double w;
  double hi;
  if (y < 3.0) {
    w = std::log1p(y);
    hi = std::max(y, 1.0);
  } else {
    const double l1 = std::log(y);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
    hi = l1;
  }
  while (hi * std::exp(hi) - y <= 0.0) hi *= 2.0;
  const double lo = -1.0;
  if (!(w > lo && w < hi)) w = 0.5 * (lo + hi);
  return detail::lambert_refine(y, w, lo, hi);
}

/// Per-bit energy-time kernel g(t) = t (2^{1/(B t)} - 1) and its first two
/// derivatives in t. Dividing by the channel gain gives the energy of one bit
/// sent in t seconds.
struct KernelValue {
  double value;
  double d1;
  double d2;
};

inline KernelValue energy_time_kernel(double t, double bandwidth) {
  if (!(t > 0.0)) throw std::domain_error("energy_time_kernel: t must be > 0");
  if (!(bandwidth > 0.0)) throw std::domain_error("energy_time_kernel: bandwidth must be > 0");
  const double s = kLn2 / (bandwidth * t);
  const double em1 = std::expm1(s);
  const double es = em1 + 1.0;
  return {t * em1, em1 - s * es, s * s * es / t};
}

/// P(w, y) = y * expm1(k w / y), the perspective of expm1(k .). Jointly
/// convex for y > 0; the Hessian is (e^s / y) v v^T with v = (k, -s).
struct PerspectiveValue {
  double value, dw, dy;
  double scale;  // e^s / y
  double s;
};

inline PerspectiveValue perspective_kernel(double w, double y, double k) {
  if (!(y > 0.0)) throw std::domain_error("perspective_kernel: y must be > 0");
  const double s = k * w / y;
  const double em1 = std::expm1(s);
  const double es = em1 + 1.0;
  double dy;
  if (std::fabs(s) < 1e-3) {
    const double s2 = s * s;
    dy = -s2 * (0.5 + s * (1.0 / 3.0 + s * (0.125 + s / 30.0)));
  } else {
    dy = em1 - s * es;
  }
  return {y * em1, k * es, dy, es / y, s};
}

}  // namespace coopsense::numerics
