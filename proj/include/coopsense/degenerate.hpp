#pragma once

// Optimal allocation without overlapped sensing (common ratio fixed at zero).
//
// With the common ratio at zero the completion time is
//   T = max_k ( w_k beta + sum_{j>=k} f_j(w_j) ),   f_j(w) = C w tau_j(w),
// a convex function of w. Its optimality conditions, with weight mu_k on
// term k and S_j = mu_1 + ... + mu_j, read S_j f_j'(w_j) + mu_j beta = nu.
// Scaling mu_1 = 1 fixes nu = f_1'(w_1) + beta, so a first ratio determines
// the rest one UAV at a time: UAV j+1 either takes the most data it can have
// sensed when UAV j's upload ends (causality tight, mu_{j+1} >= 0 follows),
// or the ratio whose marginal equals nu / S_j (causality slack, mu_{j+1} = 0).
// The total of the chain increases with the first ratio, so an outer
// bisection finds the chain summing to one.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "coopsense/analysis.hpp"
#include "coopsense/errors.hpp"
#include "coopsense/model.hpp"
#include "coopsense/numerics.hpp"

namespace coopsense {

enum class ChainBranch { max_power, energy_binding, causality_binding };

struct ChainLink {
  double omega = 0.0;
  double t_max = 0.0;   // instant the upload starts
  double t_n = 0.0;     // upload duration omega C tau
  double tau = 0.0;     // per-bit time
  double weight = 0.0;  // mu of this UAV's completion-time term
  double cumulative_weight = 0.0;
  ChainBranch branch = ChainBranch::max_power;
};

struct ChainState {
  double nu = 0.0;
  std::vector<ChainLink> links;

  double sum() const {
    double s = 0.0;
    for (const auto& l : links) s += l.omega;
    return s;
  }
};

namespace detail {

// Largest ratio UAV m can deliver on the budget at any finite rate.
inline double shannon_cap(const ProblemInstance& inst, std::size_t m) {
  return inst.energy_budget() * inst.bandwidth() * inst.gamma(m) /
         (inst.data_bits() * numerics::kLn2);
}

inline double below_cap(const ProblemInstance& inst, std::size_t m) {
  return shannon_cap(inst, m) * (1.0 - 1e-12);
}

inline ChainLink make_link(const ProblemInstance& inst, std::size_t m, double omega, double t_max) {
  ChainLink l;
  l.omega = omega;
  l.t_max = t_max;
  const auto s = omega > 0.0 ? solve_tau(omega, inst.gamma(m), inst.energy_budget(), inst)
                             : TauSolution{TauBranch::max_power, inst.t_min_individual(m), 0.0, 0.0};
  l.tau = s.tau;
  l.t_n = inst.data_bits() * omega * s.tau;
  l.branch = s.branch == TauBranch::max_power ? ChainBranch::max_power : ChainBranch::energy_binding;
  return l;
}

}  // namespace detail

/// Marginal transmission time d(C w tau_m(w))/dw of UAV m (right limit).
inline double uav_marginal(const ProblemInstance& inst, std::size_t m, double omega) {
  return marginal_time(omega, inst.gamma(m), inst, inst.energy_budget());
}

/// Left limit of the marginal; differs from the right one only at hat_omega.
inline double uav_marginal_left(const ProblemInstance& inst, std::size_t m, double omega) {
  if (!(omega > 0.0)) return uav_marginal(inst, m, 0.0);
  const double wh = hat_omega(inst.gamma(m), inst, inst.energy_budget());
  if (omega == wh) return inst.data_bits() * inst.t_min_individual(m);
  return uav_marginal(inst, m, omega);
}

/// Ratio of UAV m+1 given the chain up to UAV m (links[m] must exist).
inline double next_ratio(std::size_t m, const ChainState& state, const ProblemInstance& inst) {
  if (!(inst.beta_s() > 0.0))
    throw std::invalid_argument("next_ratio: beta_s = 0 leaves the causality bound undefined");
  if (m + 1 >= inst.num_uavs() || m >= state.links.size())
    throw std::out_of_range("next_ratio: no such UAV pair");
  const auto& cur = state.links[m];
  const double causal = (cur.t_max + cur.t_n) / inst.beta_s();
  const double hi = std::min(causal, detail::below_cap(inst, m + 1));
  if (!(hi > 0.0)) return 0.0;
  const double lead = state.nu / cur.cumulative_weight;
  if (causal <= hi && uav_marginal(inst, m + 1, causal) <= lead) return causal;

  // A slack predecessor strictly inside the energy-binding branch has
  // marginal equal to lead, and there the marginal depends on w / gamma only.
  if (m > 0 && cur.weight == 0.0 && cur.branch == ChainBranch::energy_binding &&
      cur.omega > hat_omega(inst.gamma(m), inst, inst.energy_budget()) * (1 + 1e-12)) {
    const double w = cur.omega * inst.gamma(m + 1) / inst.gamma(m);
    if (w < hi) return w;
  }
  const auto f = [&](double w) { return uav_marginal(inst, m + 1, w) - lead; };
  if (f(0.0) >= 0.0) return 0.0;
  if (f(hi) <= 0.0) return hi;
  // A lead inside the jump of the marginal resolves to the kink itself.
  const double wh = hat_omega(inst.gamma(m + 1), inst, inst.energy_budget());
  if (wh < hi && uav_marginal_left(inst, m + 1, wh) <= lead && lead <= uav_marginal(inst, m + 1, wh))
    return wh;
  return numerics::bisect(f, {0.0, hi, 1e-300, 1e-15, 400});
}

/// Where a marginal jumps, the weight it receives is not fixed by the
/// forward recursion. A KinkChoice pins UAV `uav` to its hat_omega and picks
/// its marginal at fraction theta of the admissible range.
struct KinkChoice {
  std::size_t uav = std::numeric_limits<std::size_t>::max();
  double theta = 0.0;
};

/// Builds the chain that starts from omega_1 (0-based UAV 0).
inline ChainState build_chain(double omega_1, const ProblemInstance& inst, KinkChoice kink = {}) {
  if (!(omega_1 >= 0.0)) throw std::invalid_argument("build_chain: omega_1 must be >= 0");
  const std::size_t M = inst.num_uavs();
  const double beta = inst.beta_s();
  ChainState st;
  auto first = detail::make_link(inst, 0, omega_1, omega_1 * beta);
  first.weight = first.cumulative_weight = 1.0;
  double g0 = uav_marginal(inst, 0, omega_1);
  if (kink.uav == 0) {
    const double left = uav_marginal_left(inst, 0, omega_1);
    g0 = left + kink.theta * (g0 - left);
  }
  st.nu = g0 + beta;
  st.links.push_back(first);
  for (std::size_t m = 0; m + 1 < M; ++m) {
    const ChainLink cur = st.links[m];
    const double end = cur.t_max + cur.t_n;
    const double lead = st.nu / cur.cumulative_weight;
    ChainLink link;
    if (kink.uav == m + 1) {
      const double wh = hat_omega(inst.gamma(m + 1), inst, inst.energy_budget());
      link = detail::make_link(inst, m + 1, wh, end);
      const double left = uav_marginal_left(inst, m + 1, wh);
      const double right = std::max(left, std::min(uav_marginal(inst, m + 1, wh), lead));
      const double g = left + kink.theta * (right - left);
      link.weight = std::max(0.0, (st.nu - cur.cumulative_weight * g) / (g + beta));
      link.branch = ChainBranch::causality_binding;
    } else {
      const double w = next_ratio(m, st, inst);
      link = detail::make_link(inst, m + 1, w, end);
      if (w * beta >= end * (1 - 1e-15)) {
        const double g = std::min(uav_marginal(inst, m + 1, w), lead);
        link.weight = std::max(0.0, (st.nu - cur.cumulative_weight * g) / (g + beta));
        link.branch = ChainBranch::causality_binding;
      }
    }
    link.cumulative_weight = cur.cumulative_weight + link.weight;
    st.links.push_back(link);
  }
  return st;
}

/// Total ratio implied by the chain that starts from omega_1.
inline double sum_ratio_curve(double omega_1, const ProblemInstance& inst) {
  if (!(omega_1 >= 0.0)) throw std::invalid_argument("sum_ratio_curve: omega_1 must be >= 0");
  return build_chain(omega_1, inst).sum();
}

/// Optimality certificate for an allocation with no common share, given the
/// weights mu of the completion-time terms and nu. With S the running sum of
/// the weights, each UAV needs some marginal g in its subdifferential with
/// S g + mu beta = nu (g may undercut the marginal when the ratio is zero),
/// and a positive weight only where the causality link is tight. Residuals
/// are relative to nu / S.
inline std::vector<CheckResult> chain_certificate(const ProblemInstance& inst, const TaskAllocation& a,
                                                  const std::vector<double>& weights, double nu) {
  const std::size_t M = inst.num_uavs();
  if (weights.size() != M) throw std::invalid_argument("chain_certificate: one weight per UAV");
  std::vector<CheckResult> out;
  const double beta = inst.beta_s(), C = inst.data_bits();
  double S = 0.0, t_max = 0.0, end = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    const double w = a.individual(m);
    const double mu = weights[m];
    S += mu;
    const double g = (nu - mu * beta) / S;
    // One-sided limits taken a relative 1e-9 away so that a ratio rounded
    // next to its kink still sees the jump.
    const double left = uav_marginal(inst, m, w * (1 - 1e-9));
    const double right = uav_marginal(inst, m, w * (1 + 1e-9));
    double res = std::max(0.0, g - right);
    if (w > 0.0) res = std::max(res, left - g);
    res /= nu / S;
    const double sense = w * beta;
    if (m > 0) {
      const bool tight = sense >= end - 1e-9 * (1.0 + end);
      if (!tight && mu > 0.0) res = std::max(res, mu / S);
    }
    if (mu < 0.0) res = std::max(res, -mu / S);
    out.push_back({"chain_marginal[" + std::to_string(m) + "]", res <= 1e-6, res});
    t_max = m == 0 ? sense : std::max(end, sense);
    end = t_max + C * w * (w > 0.0 ? tau_from_energy(w, inst.gamma(m), inst.energy_budget(), inst) : 0.0);
  }
  return out;
}

/// Ratio proportionality w_m / gamma_m = w_{m+1} / gamma_{m+1} for adjacent
/// UAVs past the first that both spend their full budget with slack
/// causality and zero weight on UAV m+1's term.
inline std::vector<CheckResult> proportionality_checks(const ProblemInstance& inst, const TaskAllocation& a,
                                                       const std::vector<double>& weights) {
  std::vector<CheckResult> out;
  const std::size_t M = inst.num_uavs();
  const double e = inst.energy_budget();
  for (std::size_t m = 1; m + 1 < M; ++m) {
    const double w = a.individual(m), wn = a.individual(m + 1);
    if (!(w > hat_omega(inst.gamma(m), inst, e)) || !(wn > hat_omega(inst.gamma(m + 1), inst, e))) continue;
    if (weights[m] != 0.0 || weights[m + 1] != 0.0) continue;
    const double res = std::fabs(w * inst.gamma(m + 1) - wn * inst.gamma(m)) / (w * inst.gamma(m + 1));
    out.push_back({"proportionality[" + std::to_string(m) + "]", res <= 1e-4, res});
  }
  return out;
}

struct DegenerateOptions {
  double tolerance = 1e-14;  // on omega_1
  std::size_t max_iterations = 200;
};

/// Optimal allocation and powers with the common ratio fixed at zero.
inline SolveReport solve_degenerate(const ProblemInstance& inst, const DegenerateOptions& opt = {}) {
  const std::size_t M = inst.num_uavs();
  if (!(inst.beta_s() > 0.0) && M > 1)
    throw std::invalid_argument("solve_degenerate: beta_s = 0 is handled by the overlapped solver");

  std::vector<double> w(M + 1, 0.0);
  std::vector<double> weights(M, 0.0);
  double nu = 0.0;
  std::size_t iterations = 0;
  if (M == 1) {
    if (!(1.0 < detail::shannon_cap(inst, 0)))
      throw InfeasibleError("solve_degenerate: budget below the Shannon floor of the only UAV");
    w[1] = 1.0;
  } else {
    const double cap = detail::below_cap(inst, 0);
    double lo = 0.0;
    double hi = std::min(1.0 / static_cast<double>(M), cap);
    double s_hi = sum_ratio_curve(hi, inst);
    while (s_hi < 1.0 && hi < std::min(1.0, cap)) {
      lo = hi;
      hi = std::min({2.0 * hi, 1.0, cap});
      s_hi = sum_ratio_curve(hi, inst);
    }
    if (s_hi < 1.0)
      throw InfeasibleError("solve_degenerate: chain sums to " + std::to_string(s_hi) +
                            " < 1 at omega_1 = " + std::to_string(hi) + "; budget too small");
    while (hi - lo > opt.tolerance * std::max(1.0, hi) && iterations < opt.max_iterations) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      ++iterations;
      if (sum_ratio_curve(mid, inst) < 1.0)
        lo = mid;
      else
        hi = mid;
    }
    auto chain = build_chain(hi, inst);
    // The total jumps where a marginal on the chain does. The jump is closed
    // by choosing the marginal at that kink instead of moving omega_1.
    if (chain.sum() > 1.0 + 1e-10) {
      const auto below = build_chain(lo, inst);
      KinkChoice kink;
      double w1 = hi;
      const double wh0 = hat_omega(inst.gamma(0), inst, inst.energy_budget());
      if (wh0 >= lo && wh0 <= hi) {
        kink.uav = 0;
        w1 = wh0;
      } else {
        for (std::size_t m = 1; m < M; ++m) {
          const auto& a = below.links[m];
          const auto& b = chain.links[m];
          if (std::fabs(a.cumulative_weight - b.cumulative_weight) > 1e-9 * a.cumulative_weight ||
              a.branch != b.branch) {
            kink.uav = m;
            break;
          }
        }
      }
      if (kink.uav < M) {
        double tlo = 0.0, thi = 1.0;
        for (int it = 0; it < 200 && thi - tlo > 1e-15; ++it) {
          kink.theta = 0.5 * (tlo + thi);
          if (build_chain(w1, inst, kink).sum() < 1.0)
            tlo = kink.theta;
          else
            thi = kink.theta;
        }
        kink.theta = thi;
        chain = build_chain(w1, inst, kink);
      }
    }
    const double s = chain.sum();
    for (std::size_t m = 0; m < M; ++m) {
      w[m + 1] = chain.links[m].omega / s;
      weights[m] = chain.links[m].weight;
    }
    nu = chain.nu;
  }

  SolveReport rep;
  rep.allocation = TaskAllocation(w);
  auto& plan = rep.plan;
  plan.t_n.resize(M);
  plan.p_n.resize(M);
  plan.p_c.assign(M, 0.0);
  plan.E_c.assign(M, 0.0);
  const double C = inst.data_bits(), beta = inst.beta_s();
  for (std::size_t m = 0; m < M; ++m)
    plan.t_n[m] = w[m + 1] > 0.0 ? tau_from_energy(w[m + 1], inst.gamma(m), inst.energy_budget(), inst)
                                 : inst.t_min_individual(m);
  // Renormalising can leave a sliver of idle channel before the next UAV is
  // ready; slow the previous upload to cover it.
  double end = 0.0;
  std::size_t prev = M;
  for (std::size_t m = 0; m < M; ++m) {
    if (!(w[m + 1] > 0.0)) continue;
    const double ready = w[m + 1] * beta;
    if (prev != M && ready > end) {
      plan.t_n[prev] += (ready - end) / (w[prev + 1] * C);
      end = ready;
    }
    end = std::max(end, ready) + w[m + 1] * C * plan.t_n[m];
    prev = m;
  }
  for (std::size_t m = 0; m < M; ++m)
    plan.p_n[m] = std::min(power_for_time(plan.t_n[m], inst.gamma(m), inst.bandwidth()), inst.p_max());
  rep.timeline = evaluate_timeline(inst, rep.allocation, plan);
  rep.scheme_name = "degenerate";
  rep.iterations = iterations;
  rep.bound_gap = 0.0;
  rep.converged = true;
  if (M > 1) {
    rep.diagnostics = chain_certificate(inst, rep.allocation, weights, nu);
    for (auto& c : proportionality_checks(inst, rep.allocation, weights)) rep.diagnostics.push_back(c);
  }
  return rep;
}

}  // namespace coopsense
