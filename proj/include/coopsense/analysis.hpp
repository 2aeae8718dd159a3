#pragma once

// Closed forms and condition checks: the overlap necessity test, the
// energy-limited per-bit time and its marginal cost, and advisory checks on
// the structure of an optimal solution.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "coopsense/errors.hpp"
#include "coopsense/model.hpp"
#include "coopsense/numerics.hpp"

namespace coopsense {

struct OverlapVerdict {
  double x_star = 0.0;
  double threshold = 0.0;  // p_max * gamma_M
  bool overlap_possible = false;
};

/// Solves C x / (B log2(1+x)) = E_bar * sum(gamma) for x. Overlapped sensing
/// can only pay off when x exceeds p_max times the best single gain.
inline OverlapVerdict necessity_check(const ProblemInstance& inst) {
  const double target = inst.energy_budget() * inst.sum_gamma() * inst.bandwidth() / inst.data_bits();
  OverlapVerdict v;
  v.threshold = inst.p_max() * inst.gamma(inst.num_uavs() - 1);
  const auto lhs = [](double x) { return x / std::log2(1.0 + x); };
  // lhs is increasing on (0, inf) with infimum ln 2.
  if (target <= numerics::kLn2) {
    v.x_star = std::numeric_limits<double>::min();
    v.overlap_possible = false;
    return v;
  }
  double lo = 1e-12;
  if (lhs(lo) >= target) {
    v.x_star = lo;
  } else {
    double hi = std::max(1.0, 2.0 * target);
    while (lhs(hi) < target) hi *= 2.0;
    v.x_star = numerics::bisect([&](double x) { return lhs(x) - target; },
                                {lo, hi, 1e-300, 1e-14, 400});
  }
  v.overlap_possible = v.x_star > v.threshold;
  return v;
}

/// Energy needed to push omega*C bits over gain gamma as time goes to infinity.
inline double shannon_floor(double omega, double gamma, const ProblemInstance& inst) {
  return omega * inst.data_bits() * numerics::kLn2 / (inst.bandwidth() * gamma);
}

/// Ratio at which sending at p_max exactly spends energy e.
inline double hat_omega(double gamma, const ProblemInstance& inst, double e) {
  if (!(gamma > 0.0)) throw std::invalid_argument("hat_omega: gamma must be > 0");
  if (e < 0.0) throw std::invalid_argument("hat_omega: energy must be >= 0");
  const double pm = inst.p_max();
  return inst.bandwidth() * std::log2(1.0 + pm * gamma) * e / (pm * inst.data_bits());
}

struct MarginalCurve {
  std::size_t uav = 0;
  double hat_omega = 0.0;
  double A = 0.0;  // C ln2 / (B gamma_m E_bar)
};

inline MarginalCurve marginal_curve(const ProblemInstance& inst, std::size_t m) {
  const double g = inst.gamma(m);
  const double e = inst.energy_budget();
  return {m, hat_omega(g, inst, e),
          inst.data_bits() * numerics::kLn2 / (inst.bandwidth() * g * e)};
}

enum class TauBranch { max_power, energy_binding };

namespace detail {

struct TauSolution {
  TauBranch branch;
  double tau;
  double u;  // ln2 / (B tau)
  double z;  // A * omega
};

inline void check_tau_args(double omega, double gamma, double e) {
  if (!(omega >= 0.0) || !std::isfinite(omega))
    throw std::invalid_argument("tau: omega must be finite and >= 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("tau: gamma must be > 0");
  if (!(e >= 0.0)) throw std::invalid_argument("tau: energy must be >= 0");
}

// Positive root of z*expm1(u) = u for 0 < z < 1. Seeded with the W_{-1}
// closed form and finished with Newton from the right of the root, where the
// residual is convex and increasing so the iterates decrease monotonically.
inline double binding_u(double z) {
  const auto phi = [z](double u) { return z * std::expm1(u) - u; };
  double u = -(numerics::lambert_w_minus1(-z * std::exp(-z)) + z);
  if (!(u > 0.0) || !std::isfinite(u)) u = 2.0 * (1.0 - z) / z;
  while (phi(u) < 0.0) u *= 1.5;
  for (int it = 0; it < 100; ++it) {
    const double f = phi(u);
    const double d = z * std::exp(u) - 1.0;
    if (!(d > 0.0)) break;
    const double next = u - f / d;
    if (!(next < u) || !(next > 0.0)) break;
    if (u - next <= 1e-16 * u) {
      u = next;
      break;
    }
    u = next;
  }
  return u;
}

inline TauSolution solve_tau(double omega, double gamma, double e, const ProblemInstance& inst) {
  check_tau_args(omega, gamma, e);
  const double B = inst.bandwidth();
  const double t_max_power = per_bit_time(inst.p_max() * gamma, B);
  if (omega == 0.0 || omega < hat_omega(gamma, inst, e))
    return {TauBranch::max_power, t_max_power, numerics::kLn2 / (B * t_max_power), 0.0};
  if (e <= shannon_floor(omega, gamma, inst))
    throw InfeasibleError("energy " + std::to_string(e) + " J is at or below the Shannon floor " +
                          std::to_string(shannon_floor(omega, gamma, inst)) + " J");
  const double z = shannon_floor(omega, gamma, inst) / e;
  const double u = binding_u(z);
  // Rounding can leave tau a hair below the max-power time right at hat_omega.
  const double tau = std::max(numerics::kLn2 / (B * u), t_max_power);
  return {TauBranch::energy_binding, tau, u, z};
}

}  // namespace detail

/// Fastest per-bit time for a UAV sending omega*C bits over gain gamma on
/// energy e: p_max while affordable, otherwise the time that spends exactly e.
inline double tau_from_energy(double omega, double gamma, double e, const ProblemInstance& inst) {
  return detail::solve_tau(omega, gamma, e, inst).tau;
}

inline TauBranch tau_branch(double omega, double gamma, double e, const ProblemInstance& inst) {
  return detail::solve_tau(omega, gamma, e, inst).branch;
}

/// d(C omega tau(omega))/d omega. Constant C*tau in the max-power branch. The
/// derivative jumps upward at hat_omega, so the value there is the right limit.
inline double marginal_time(double omega, double gamma, const ProblemInstance& inst, double e) {
  const auto s = detail::solve_tau(omega, gamma, e, inst);
  const double C = inst.data_bits();
  if (s.branch == TauBranch::max_power) return C * s.tau;
  const double k = C * numerics::kLn2 / inst.bandwidth();
  const double uz = s.u + s.z;
  return k * uz / (s.u * (uz - 1.0));
}

/// Advisory checks on a solution that uses overlapped sensing: the
/// independent-power relation and t_c <= t_n. The power relation skips UAVs
/// with no individual share since their t_n carries no data.
inline std::vector<CheckResult> optimality_diagnostics(const ProblemInstance& inst,
                                                       const SolveReport& report) {
  std::vector<CheckResult> out;
  const auto& alloc = report.allocation;
  const auto& plan = report.plan;
  if (!(alloc.common() > 1e-6)) return out;
  const std::size_t M = inst.num_uavs();
  const double C = inst.data_bits();
  const double B = inst.bandwidth();
  const double pm = inst.p_max();
  const auto tl = evaluate_timeline(inst, alloc, plan);

  double coop_snr = 0.0;
  for (std::size_t m = 0; m < M; ++m) coop_snr += plan.p_c[m] * inst.gamma(m);

  for (std::size_t m = 0; m < M; ++m) {
    const double w = alloc.individual(m);
    if (!(w > 0.0)) continue;
    const double g = inst.gamma(m);
    double expect = std::min(coop_snr / g, pm);
    if (m + 1 < M) {
      const double window = tl.sense_end[m + 1] - tl.tx_start[m];
      if (window > 0.0) {
        const double p_bar = std::expm1(numerics::kLn2 * C * w / (B * window)) / g;
        expect = std::min(expect, p_bar);
      }
    }
    const double res = std::fabs(plan.p_n[m] - expect) / std::max(expect, 1e-300);
    out.push_back({"power_relation[" + std::to_string(m) + "]", res <= 1e-4, res});
  }
  for (std::size_t m = 0; m < M; ++m) {
    const double res = plan.t_c - plan.t_n[m];
    out.push_back({"coop_time[" + std::to_string(m) + "]", res <= 1e-9, res});
  }
  return out;
}

/// Predicted common ratio in the extreme-workload limits, measured against
/// the cooperative upload time C*t_c at full power. Empty in between.
inline std::optional<double> limit_allocation(const ProblemInstance& inst) {
  const double scale = inst.data_bits() * inst.t_min_coop();
  const double r = inst.beta_s() / scale;
  if (r <= 1e-4) return 1.0;
  if (r >= 1e2) return 0.0;
  return std::nullopt;
}

}  // namespace coopsense
