#pragma once

// Minimum completion time for a fixed allocation. Solved as a convex program
// in y = C*t (seconds per mission, per unit ratio), the cooperative energy
// split E and one epigraph variable R for the upload chain:
//
//   min  R + w0*y_c
//   s.t. R >= Ts_k + sum_{j>=k} w_j y_j          k = 1..M
//        w_m h(y_m)/gamma_m + E_m <= E_bar
//        w0 h(y_c) <= sum_m gamma_m E_m
//        0 <= E_m <= w0 p_max y_c
//        y >= C t_min
//
// with h(y) = y (2^{C/(B y)} - 1), by a primal log-barrier method.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "coopsense/errors.hpp"
#include "coopsense/model.hpp"
#include "coopsense/numerics.hpp"

namespace coopsense {

struct InnerOptions {
  double tolerance = 1e-8;  // duality measure relative to 1 + |T|
  std::size_t max_newton = 200;
  double barrier_growth = 20.0;
};

struct InnerSolution {
  TransmissionPlan plan;
  double objective_T = 0.0;
  double kkt_residual = 0.0;
  bool converged = false;
  std::size_t newton_steps = 0;
};

/// p_c[m] = E_c[m] / (C w0 t_c).
inline std::vector<double> recover_coop_power(const std::vector<double>& E_c, double t_c,
                                              const TaskAllocation& alloc,
                                              const ProblemInstance& inst) {
  if (!(alloc.common() > 0.0)) throw std::invalid_argument("recover_coop_power: w0 must be > 0");
  if (!(t_c > 0.0)) throw std::invalid_argument("recover_coop_power: t_c must be > 0");
  if (E_c.size() != inst.num_uavs()) throw std::invalid_argument("recover_coop_power: size");
  std::vector<double> p(E_c.size());
  const double denom = inst.data_bits() * alloc.common() * t_c;
  for (std::size_t m = 0; m < E_c.size(); ++m) p[m] = E_c[m] / denom;
  return p;
}

namespace detail {

// f(x) = c0 + sum a_i x_i + pc * y * expm1(pk * w / y) <= 0, where y = x[py]
// and w = x[pw], or w = 1 when pw < 0.
struct BarrierRow {
  double c0 = 0.0;
  std::vector<std::pair<int, double>> lin;
  int py = -1;
  int pw = -1;
  double pc = 0.0;
  double pk = 0.0;
};

// min cost.x over strictly feasible rows, optionally with eq.x held fixed.
struct BarrierProgram {
  int n = 0;
  std::vector<BarrierRow> rows;
  Eigen::VectorXd cost;
  Eigen::VectorXd eq;  // empty when there is no equality row

  double objective(const Eigen::VectorXd& x) const { return cost.dot(x); }

  double row_value(const BarrierRow& r, const Eigen::VectorXd& x) const {
    double f = r.c0;
    for (auto [i, a] : r.lin) f += a * x[i];
    if (r.py >= 0) f += r.pc * numerics::perspective_kernel(r.pw >= 0 ? x[r.pw] : 1.0, x[r.py], r.pk).value;
    return f;
  }

  bool strictly_feasible(const Eigen::VectorXd& x) const {
    if (!x.allFinite()) return false;
    for (const auto& r : rows) {
      if (r.py >= 0 && !(x[r.py] > 0.0)) return false;
      if (!(row_value(r, x) < 0.0)) return false;
    }
    return true;
  }

  double barrier(const Eigen::VectorXd& x, double kappa) const {
    double phi = kappa * objective(x);
    for (const auto& r : rows) phi -= std::log(-row_value(r, x));
    return phi;
  }

  void derivatives(const Eigen::VectorXd& x, double kappa, Eigen::VectorXd& g,
                   Eigen::MatrixXd& H) const {
    g = kappa * cost;
    H.setZero(n, n);
    Eigen::VectorXd a(n);
    for (const auto& r : rows) {
      const double s = -row_value(r, x);
      a.setZero();
      for (auto [i, c] : r.lin) a[i] += c;
      numerics::PerspectiveValue pv{};
      if (r.py >= 0) {
        pv = numerics::perspective_kernel(r.pw >= 0 ? x[r.pw] : 1.0, x[r.py], r.pk);
        a[r.py] += r.pc * pv.dy;
        if (r.pw >= 0) a[r.pw] += r.pc * pv.dw;
      }
      g += a / s;
      H.noalias() += (a * a.transpose()) / (s * s);
      if (r.py >= 0) {
        const double c = r.pc * pv.scale / s;
        H(r.py, r.py) += c * pv.s * pv.s;
        if (r.pw >= 0) {
          H(r.pw, r.pw) += c * r.pk * r.pk;
          H(r.pw, r.py) -= c * r.pk * pv.s;
          H(r.py, r.pw) -= c * r.pk * pv.s;
        }
      }
    }
  }
};

struct BarrierResult {
  Eigen::VectorXd x;
  double gap = 0.0;  // bound on objective(x) - optimum
  std::size_t steps = 0;
};

// Newton direction for the barrier, projected onto eq.dx = 0 when present.
inline Eigen::VectorXd newton_direction(const BarrierProgram& P, Eigen::MatrixXd& H,
                                        const Eigen::VectorXd& g) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  if (ldlt.info() != Eigen::Success || !(ldlt.isPositive())) {
    H.diagonal().array() += 1e-12 * H.diagonal().cwiseAbs().maxCoeff();
    ldlt.compute(H);
  }
  Eigen::VectorXd dx = -ldlt.solve(g);
  if (P.eq.size() > 0) {
    const Eigen::VectorXd ha = ldlt.solve(P.eq);
    const double nu = P.eq.dot(dx) / P.eq.dot(ha);
    dx -= nu * ha;
  }
  return dx;
}

/// Primal log-barrier path following from a strictly feasible x0.
inline BarrierResult barrier_minimize(const BarrierProgram& P, Eigen::VectorXd x,
                                      const InnerOptions& opt, const char* who) {
  if (!P.strictly_feasible(x)) throw ConvergenceError(std::string(who) + ": interior start not found");
  const double mc = static_cast<double>(P.rows.size());
  Eigen::VectorXd g, dx, trial;
  Eigen::MatrixXd H;
  std::vector<double> slack0;
  double kappa = mc / (0.1 * (1.0 + std::fabs(P.objective(x))));
  std::size_t steps = 0;
  for (;;) {
    for (;;) {
      P.derivatives(x, kappa, g, H);
      dx = newton_direction(P, H, g);
      const double dec = -g.dot(dx);
      if (!(dec > 1e-10) || !dx.allFinite()) break;
      if (++steps > opt.max_newton) throw ConvergenceError(std::string(who) + ": Newton step cap reached");
      // Barrier change with the linear term taken exactly; kappa*f itself is
      // too large to difference in floating point near the end of the path.
      slack0.resize(P.rows.size());
      for (std::size_t r = 0; r < P.rows.size(); ++r) slack0[r] = -P.row_value(P.rows[r], x);
      const double slope = kappa * P.cost.dot(dx);
      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 80; ++ls, alpha *= 0.5) {
        trial = x + alpha * dx;
        if (!P.strictly_feasible(trial)) continue;
        double delta = alpha * slope;
        for (std::size_t r = 0; r < P.rows.size(); ++r)
          delta -= std::log(-P.row_value(P.rows[r], trial) / slack0[r]);
        if (delta <= -0.25 * alpha * dec || dec < 1e-6) {
          moved = true;
          break;
        }
      }
      if (!moved) break;
      x = trial;
      if (dec < 1e-6) break;
    }
    if (mc / kappa <= opt.tolerance * (1.0 + std::fabs(P.objective(x)))) break;
    kappa *= opt.barrier_growth;
  }
  return {std::move(x), mc / kappa, steps};
}

class InnerProgram {
 public:
  InnerProgram(const ProblemInstance& inst, const TaskAllocation& alloc)
      : inst_(inst), alloc_(alloc), M_(inst.num_uavs()) {
    C_ = inst.data_bits();
    B_ = inst.bandwidth();
    coop_ = alloc.common() > 0.0;
    iy_.assign(M_, -1);
    iE_.assign(M_, -1);
    int n = 0;
    for (std::size_t m = 0; m < M_; ++m)
      if (alloc.individual(m) > 0.0) iy_[m] = n++;
    if (coop_) {
      ic_ = n++;
      for (std::size_t m = 0; m < M_; ++m) iE_[m] = n++;
    }
    iR_ = n++;
    P_.n = n;
    P_.cost = Eigen::VectorXd::Zero(n);
    P_.cost[iR_] = 1.0;
    if (coop_) P_.cost[ic_] = alloc.common();
    build_rows();
  }

  const BarrierProgram& program() const { return P_; }
  int index_y(std::size_t m) const { return iy_[m]; }
  int index_E(std::size_t m) const { return iE_[m]; }
  int index_c() const { return ic_; }
  double h(double y) const { return numerics::energy_time_kernel(y, B_ / C_).value; }

  Eigen::VectorXd start() const;
  TransmissionPlan extract(const Eigen::VectorXd& x) const;

 private:
  const ProblemInstance& inst_;
  const TaskAllocation& alloc_;
  std::size_t M_;
  double C_ = 0.0, B_ = 0.0;
  bool coop_ = false;
  int ic_ = -1, iR_ = -1;
  std::vector<int> iy_, iE_;
  BarrierProgram P_;

  double sense_end(std::size_t k) const {
    return (alloc_.individual(k) + alloc_.common()) * inst_.beta_s();
  }

  void build_rows() {
    auto& rows = P_.rows;
    const double Ebar = inst_.energy_budget();
    const double w0 = alloc_.common();
    const double k = C_ * numerics::kLn2 / B_;
    for (std::size_t j = 0; j < M_; ++j) {
      BarrierRow r;
      r.c0 = sense_end(j);
      for (std::size_t i = j; i < M_; ++i)
        if (iy_[i] >= 0) r.lin.push_back({iy_[i], alloc_.individual(i)});
      r.lin.push_back({iR_, -1.0});
      rows.push_back(std::move(r));
    }
    for (std::size_t m = 0; m < M_; ++m) {
      if (iy_[m] < 0 && !coop_) continue;
      BarrierRow r;
      r.c0 = -Ebar;
      if (iy_[m] >= 0) {
        r.py = iy_[m];
        r.pc = alloc_.individual(m) / inst_.gamma(m);
        r.pk = k;
      }
      if (coop_) r.lin.push_back({iE_[m], 1.0});
      rows.push_back(std::move(r));
    }
    for (std::size_t m = 0; m < M_; ++m) {
      if (iy_[m] < 0) continue;
      BarrierRow r;
      r.c0 = C_ * inst_.t_min_individual(m);
      r.lin = {{iy_[m], -1.0}};
      rows.push_back(std::move(r));
    }
    if (coop_) {
      BarrierRow r;
      r.py = ic_;
      r.pc = w0;
      r.pk = k;
      for (std::size_t m = 0; m < M_; ++m) r.lin.push_back({iE_[m], -inst_.gamma(m)});
      rows.push_back(std::move(r));
      BarrierRow floor;
      floor.c0 = C_ * inst_.t_min_coop();
      floor.lin = {{ic_, -1.0}};
      rows.push_back(std::move(floor));
      for (std::size_t m = 0; m < M_; ++m) {
        BarrierRow cap, pos;
        cap.lin = {{iE_[m], 1.0}, {ic_, -w0 * inst_.p_max()}};
        pos.lin = {{iE_[m], -1.0}};
        rows.push_back(std::move(cap));
        rows.push_back(std::move(pos));
      }
    }
  }

};

// Largest y with coef*h(y) >= target, i.e. the root of the decreasing h.
inline double invert_h(const InnerProgram& P, double coef, double target, double y_lo) {
  if (coef * P.h(y_lo) <= target) return y_lo;
  double hi = 2.0 * y_lo;
  while (coef * P.h(hi) > target) hi *= 2.0;
  return numerics::bisect([&](double y) { return coef * P.h(y) - target; },
                          {y_lo, hi, 1e-300, 1e-13, 400});
}

inline Eigen::VectorXd InnerProgram::start() const {
  const double Ebar = inst_.energy_budget();
  const double w0 = alloc_.common();
  const double sum_g = inst_.sum_gamma();
  const double a = C_ * numerics::kLn2 / B_;

  std::vector<double> floor(M_, 0.0), slack(M_);
  for (std::size_t m = 0; m < M_; ++m) {
    if (iy_[m] >= 0) floor[m] = alloc_.individual(m) * a / inst_.gamma(m);
    slack[m] = Ebar - floor[m];
    if (!(slack[m] > 0.0) && (iy_[m] >= 0 || coop_))
      throw InfeasibleError("UAV " + std::to_string(m) +
                            ": energy budget does not cover the Shannon floor of its individual share");
  }
  const double coop_floor = w0 * a;
  double Gamma = 0.0;
  if (coop_) {
    for (std::size_t m = 0; m < M_; ++m) Gamma += inst_.gamma(m) * slack[m];
    Gamma -= coop_floor;
    if (!(Gamma > 0.0))
      throw InfeasibleError("pooled energy cannot cover the Shannon floor of the common share");
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(P_.n);
  std::vector<double> e_ind(M_, 0.0), d(M_);
  for (std::size_t m = 0; m < M_; ++m) {
    d[m] = coop_ ? 0.5 * std::min(slack[m], Gamma / sum_g) : 0.5 * slack[m];
    if (iy_[m] < 0) continue;
    const double w = alloc_.individual(m), g = inst_.gamma(m);
    const double ymin = C_ * inst_.t_min_individual(m);
    const double y = std::max(invert_h(*this, w / g, floor[m] + 0.5 * d[m], ymin), 1.001 * ymin);
    x[iy_[m]] = y;
    e_ind[m] = w * h(y) / g;
  }
  if (coop_) {
    std::vector<double> cap_a(M_);
    for (std::size_t m = 0; m < M_; ++m) cap_a[m] = Ebar - e_ind[m] - 0.25 * d[m];
    const double pm = inst_.p_max();
    const auto split = [&](double y, std::size_t m) { return std::min(cap_a[m], w0 * pm * y / 1.01); };
    const auto pooled_slack = [&](double y) {
      double s = 0.0;
      for (std::size_t m = 0; m < M_; ++m) s += inst_.gamma(m) * split(y, m);
      return s - w0 * h(y);
    };
    const double ycmin = C_ * inst_.t_min_coop();
    double y = std::max(invert_h(*this, w0, coop_floor + 0.25 * Gamma, ycmin), 1.05 * ycmin);
    while (pooled_slack(y) < std::min(0.05 * w0 * h(y), 0.125 * Gamma)) y *= 2.0;
    x[ic_] = y;
    for (std::size_t m = 0; m < M_; ++m) x[iE_[m]] = split(y, m);
  }
  double R = 0.0;
  for (const auto& r : P_.rows) {
    if (r.lin.empty() || r.lin.back().first != iR_) continue;
    double v = r.c0;
    for (auto [i, c] : r.lin)
      if (i != iR_) v += c * x[i];
    R = std::max(R, v);
  }
  x[iR_] = R + 1e-2 * (1.0 + R);
  return x;
}

inline TransmissionPlan InnerProgram::extract(const Eigen::VectorXd& x) const {
  const std::size_t M = M_;
  TransmissionPlan plan;
  plan.t_n.assign(M, 0.0);
  plan.p_n.assign(M, 0.0);
  plan.p_c.assign(M, 0.0);
  plan.E_c.assign(M, 0.0);
  const double w0 = alloc_.common();
  const double pm = inst_.p_max();

  if (coop_) {
    const double yc = x[ic_];
    double snr = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      plan.p_c[m] = std::clamp(x[iE_[m]] / (w0 * yc), 0.0, pm);
      snr += plan.p_c[m] * inst_.gamma(m);
    }
    // The pooled energy row is slack by the barrier margin; spend it on speed.
    plan.t_c = std::max(per_bit_time(snr, B_), inst_.t_min_coop());
    for (std::size_t m = 0; m < M; ++m) plan.E_c[m] = w0 * C_ * plan.t_c * plan.p_c[m];
  }

  for (std::size_t m = 0; m < M; ++m) {
    const double tmin = inst_.t_min_individual(m);
    if (iy_[m] >= 0)
      plan.t_n[m] = std::max(x[iy_[m]] / C_, tmin);
    else
      plan.t_n[m] = coop_ ? std::max(tmin, plan.t_c) : tmin;
  }

  // Stretch an upload into any idle window before the next UAV with data is
  // ready. The mission time is unchanged and the UAV saves energy.
  std::size_t prev = M;
  double end = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    const double w = alloc_.individual(m);
    if (!(w > 0.0)) continue;
    const double ready = (w + w0) * inst_.beta_s();
    if (prev != M && ready > end) {
      plan.t_n[prev] += (ready - end) / (alloc_.individual(prev) * C_);
      end = ready;
    }
    end = std::max(end, ready) + w * C_ * plan.t_n[m];
    prev = m;
  }

  for (std::size_t m = 0; m < M; ++m)
    plan.p_n[m] = std::min(power_for_time(plan.t_n[m], inst_.gamma(m), B_), pm);
  return plan;
}

}  // namespace detail

/// Optimal per-bit times, powers and cooperative energy split for a fixed
/// allocation. The allocation may be a relaxed point (ratios summing to less
/// than one), which is how lower bounds are computed.
inline InnerSolution solve_inner(const ProblemInstance& inst, const TaskAllocation& alloc,
                                 const InnerOptions& opt = {}) {
  if (alloc.num_uavs() != inst.num_uavs())
    throw std::invalid_argument("solve_inner: allocation size does not match the instance");
  const std::size_t M = inst.num_uavs();
  InnerSolution sol;

  bool any = alloc.common() > 0.0;
  for (std::size_t m = 0; m < M; ++m) any = any || alloc.individual(m) > 0.0;
  if (!any) {
    sol.plan = TransmissionPlan::max_power(inst);
    sol.plan.t_c = 0.0;
    sol.plan.p_c.assign(M, 0.0);
    sol.converged = true;
    sol.objective_T = 0.0;
    return sol;
  }

  detail::InnerProgram P(inst, alloc);
  const auto res = detail::barrier_minimize(P.program(), P.start(), opt, "solve_inner");

  sol.plan = P.extract(res.x);
  sol.objective_T = evaluate_timeline(inst, alloc, sol.plan).total_T;
  sol.kkt_residual = res.gap / (1.0 + std::fabs(sol.objective_T));
  sol.converged = true;
  sol.newton_steps = res.steps;
  return sol;
}

}  // namespace coopsense
