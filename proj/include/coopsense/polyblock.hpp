#pragma once

// Outer approximation for monotonic minimization over an upward-closed set.
//
// The engine keeps a copolyblock: a union of boxes [v, upper] whose lower
// corners v are the vertices. Each iteration takes the vertex with the least
// lower bound, projects it onto the boundary of the feasible set along the
// segment towards the upper corner, records the boundary point as a feasible
// candidate, and replaces the vertex by its coordinate-wise children.
//
// A Problem supplies
//   std::size_t dimension() const;
//   std::vector<double> upper_corner() const;
//   VertexBound lower_bound(const std::vector<double>& v) const;   // +inf prunes
//   std::vector<double> project(const std::vector<double>& v) const;
//   BoundaryPoint evaluate(const std::vector<double>& boundary) const;

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "coopsense/errors.hpp"
#include "coopsense/inner_solver.hpp"
#include "coopsense/model.hpp"

namespace coopsense {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  Box(std::vector<double> lo, std::vector<double> hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size()) throw std::invalid_argument("Box: dimension mismatch");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (lower[i] > upper[i]) throw std::invalid_argument("Box: lower exceeds upper");
  }
  bool contains(const std::vector<double>& x) const {
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] < lower[i] || x[i] > upper[i]) return false;
    return true;
  }
};

struct Vertex {
  std::vector<double> point;
  double lower_bound = 0.0;
};

struct VertexSet {
  std::vector<double> upper_corner;
  std::vector<Vertex> vertices;

  /// Index of the vertex with the least bound; ties go to the
  /// lexicographically smallest point.
  std::size_t select() const {
    if (vertices.empty()) throw std::logic_error("VertexSet::select on empty set");
    std::size_t best = 0;
    for (std::size_t i = 1; i < vertices.size(); ++i) {
      const auto& a = vertices[i];
      const auto& b = vertices[best];
      if (a.lower_bound < b.lower_bound ||
          (a.lower_bound == b.lower_bound && a.point < b.point))
        best = i;
    }
    return best;
  }

  double min_bound() const {
    double lb = kInf;
    for (const auto& v : vertices) lb = std::min(lb, v.lower_bound);
    return lb;
  }
};

inline bool dominated_by(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (b[i] > a[i]) return false;
  return true;  // b <= a component-wise
}

/// Removes vertex `idx` and appends its children v + (phi_i - v_i) e_i.
/// Children that are degenerate, outside the box, rejected by `keep`, or
/// dominated by a surviving vertex are dropped. Returns the indices of the
/// appended children; their lower_bound is inherited from the parent.
template <typename Keep>
std::vector<std::size_t> replace_vertex(VertexSet& V, std::size_t idx, const std::vector<double>& phi,
                                        Keep&& keep, double min_step = 1e-12) {
  if (idx >= V.vertices.size()) throw std::out_of_range("replace_vertex: no such vertex");
  const Vertex parent = V.vertices[idx];
  V.vertices.erase(V.vertices.begin() + static_cast<std::ptrdiff_t>(idx));
  const std::size_t first_new = V.vertices.size();
  for (std::size_t i = 0; i < parent.point.size(); ++i) {
    const double step = phi[i] - parent.point[i];
    if (!(step > min_step)) continue;
    Vertex child = parent;
    child.point[i] = phi[i];
    if (child.point[i] > V.upper_corner[i] * (1 + 1e-12) + 1e-15) continue;
    if (!keep(child.point)) continue;
    bool redundant = false;
    for (const auto& u : V.vertices)
      if (dominated_by(child.point, u.point)) {
        redundant = true;
        break;
      }
    if (!redundant) V.vertices.push_back(std::move(child));
  }
  std::vector<std::size_t> added(V.vertices.size() - first_new);
  std::iota(added.begin(), added.end(), first_new);
  return added;
}

inline VertexSet replace_vertex(const VertexSet& V, const std::vector<double>& v,
                                const std::vector<double>& phi) {
  VertexSet out = V;
  const auto it = std::find_if(out.vertices.begin(), out.vertices.end(),
                               [&](const Vertex& x) { return x.point == v; });
  if (it == out.vertices.end()) throw std::invalid_argument("replace_vertex: v is not a vertex");
  replace_vertex(out, static_cast<std::size_t>(it - out.vertices.begin()), phi,
                 [](const std::vector<double>&) { return true; });
  return out;
}

struct BoundaryPoint {
  double value = kInf;
  std::vector<double> point;  // possibly repaired version of the projection
};

/// Lower bound over the box [v, upper]. A bounding step that also finds a
/// feasible point inside the box may report it as a candidate.
struct VertexBound {
  double value = kInf;
  BoundaryPoint candidate;
};

struct PolyblockIteration {
  std::size_t iteration = 0;
  double cbv = kInf;
  double lower_bound = 0.0;
  std::vector<double> vertex;
  std::vector<double> projection;
  std::size_t vertex_count = 0;
};

using PolyblockTrace = std::vector<PolyblockIteration>;

struct PolyblockOptions {
  double epsilon = 1e-3;
  std::size_t max_iterations = 500;
  std::size_t max_vertices = 100000;
  std::vector<BoundaryPoint> incumbents;
  std::function<void(const PolyblockIteration&)> on_iteration;
};

struct PolyblockResult {
  BoundaryPoint best;
  double lower_bound = 0.0;
  double gap = kInf;
  std::size_t iterations = 0;
  bool converged = false;
};

inline double relative_gap(double cbv, double lb) {
  if (!std::isfinite(cbv)) return kInf;
  if (cbv <= 0.0) return 0.0;
  return std::max(0.0, (cbv - lb) / cbv);
}

template <typename Problem>
PolyblockResult polyblock_minimize(const Problem& problem, const PolyblockOptions& opt = {}) {
  if (!(opt.epsilon > 0.0)) throw std::invalid_argument("polyblock: epsilon must be > 0");
  const std::size_t n = problem.dimension();
  VertexSet V;
  V.upper_corner = problem.upper_corner();
  if (V.upper_corner.size() != n) throw std::invalid_argument("polyblock: upper corner size");

  PolyblockResult res;
  for (const auto& inc : opt.incumbents)
    if (inc.value < res.best.value) res.best = inc;

  const auto offer = [&](BoundaryPoint&& c) {
    if (c.value < res.best.value) res.best = std::move(c);
  };
  std::vector<double> origin(n, 0.0);
  auto b0 = problem.lower_bound(origin);
  const double lb0 = b0.value;
  offer(std::move(b0.candidate));
  if (lb0 < kInf) V.vertices.push_back({origin, lb0});

  double lb_run = V.vertices.empty() ? res.best.value : lb0;
  double dropped = kInf;  // least bound among vertices discarded by the size cap
  const auto prune = [&] {
    std::erase_if(V.vertices, [&](const Vertex& v) { return v.lower_bound >= res.best.value; });
  };

  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    prune();
    if (V.vertices.empty()) {
      lb_run = std::max(lb_run, res.best.value);
      res.gap = relative_gap(res.best.value, lb_run);
      res.converged = std::isfinite(res.best.value);
      break;
    }
    lb_run = std::max(lb_run, std::min(V.min_bound(), dropped));
    res.gap = relative_gap(res.best.value, lb_run);
    if (res.gap <= opt.epsilon) {
      res.converged = true;
      break;
    }
    res.iterations = it;

    const std::size_t idx = V.select();
    const Vertex chosen = V.vertices[idx];
    const std::vector<double> phi = problem.project(chosen.point);
    offer(problem.evaluate(phi));

    const auto added = replace_vertex(
        V, idx, phi, [&](const std::vector<double>&) { return true; });
    for (std::size_t k = added.size(); k-- > 0;) {
      Vertex& c = V.vertices[added[k]];
      auto b = problem.lower_bound(c.point);
      c.lower_bound = std::max(chosen.lower_bound, b.value);
      offer(std::move(b.candidate));
      if (!(c.lower_bound < res.best.value))
        V.vertices.erase(V.vertices.begin() + static_cast<std::ptrdiff_t>(added[k]));
    }
    if (V.vertices.size() > opt.max_vertices) {
      // Keep the most promising vertices. The bound can never rise above
      // what was discarded, so the reported gap stays honest.
      std::sort(V.vertices.begin(), V.vertices.end(), [](const Vertex& a, const Vertex& b) {
        return a.lower_bound < b.lower_bound || (a.lower_bound == b.lower_bound && a.point < b.point);
      });
      dropped = std::min(dropped, V.vertices[opt.max_vertices].lower_bound);
      V.vertices.resize(opt.max_vertices);
    }

    if (opt.on_iteration) {
      PolyblockIteration rec;
      rec.iteration = it;
      rec.cbv = res.best.value;
      rec.lower_bound = std::max(lb_run, std::min({V.min_bound(), dropped, res.best.value}));
      rec.vertex = chosen.point;
      rec.projection = phi;
      rec.vertex_count = V.vertices.size();
      opt.on_iteration(rec);
    }
  }
  if (!res.converged) {
    prune();
    const double lb = std::min(V.vertices.empty() ? res.best.value : V.min_bound(), dropped);
    lb_run = std::max(lb_run, std::min(lb, res.best.value));
    res.gap = relative_gap(res.best.value, lb_run);
    res.converged = std::isfinite(res.best.value) && res.gap <= opt.epsilon;
  }
  res.lower_bound = lb_run;
  return res;
}

// ---------------------------------------------------------------------------
// Allocation problem: minimize T(omega) over sum(omega) = 1.

/// Upper corner of the allocation box: 1 for the common ratio and
/// min(1, 1/(M+1-m)) for individual ratio m (1-based), which the ordering
/// w_1 <= ... <= w_M together with sum <= 1 implies.
inline std::vector<double> allocation_upper_corner(std::size_t M, bool pin_common_zero = false) {
  std::vector<double> u(M + 1);
  u[0] = pin_common_zero ? 0.0 : 1.0;
  for (std::size_t m = 1; m <= M; ++m) u[m] = std::min(1.0, 1.0 / static_cast<double>(M + 1 - m));
  return u;
}

/// Point where the segment from v to the upper corner meets sum = 1.
inline std::vector<double> project_to_boundary(const std::vector<double>& v,
                                               const std::vector<double>& upper) {
  if (v.size() != upper.size()) throw std::invalid_argument("project_to_boundary: size mismatch");
  const double sv = std::accumulate(v.begin(), v.end(), 0.0);
  const double su = std::accumulate(upper.begin(), upper.end(), 0.0);
  if (sv > 1.0 + 1e-12) throw std::invalid_argument("project_to_boundary: vertex already has sum > 1");
  if (su < 1.0) throw std::invalid_argument("project_to_boundary: upper corner has sum < 1");
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] > upper[i] * (1 + 1e-12) + 1e-15)
      throw std::invalid_argument("project_to_boundary: vertex outside the box");
  const double denom = su - sv;
  const double lambda = denom > 0.0 ? std::clamp((1.0 - sv) / denom, 0.0, 1.0) : 0.0;
  std::vector<double> phi(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) phi[i] = v[i] + lambda * (upper[i] - v[i]);
  return phi;
}

/// Sorts the individual ratios ascending and rescales to sum exactly one.
inline std::vector<double> repair_allocation(std::vector<double> w) {
  std::sort(w.begin() + 1, w.end());
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  if (s > 0.0)
    for (auto& x : w) x /= s;
  return w;
}

/// Minimum completion time over the allocations in [lower, upper] with sum one.
///
/// With Y_m = w_m C t_m and Y_c = w0 C t_c every energy term becomes the
/// perspective Y expm1(C ln2 w / (B Y)), so the joint problem in
/// (w, Y, E, R) is convex:
///
///   min  R + Y_c
///   s.t. R >= (w_k + w0) beta + sum_{j>=k} Y_j
///        Y_m expm1(k w_m / Y_m) / gamma_m + E_m <= E_bar
///        Y_c expm1(k w0 / Y_c) <= sum_m gamma_m E_m
///        Y_m >= w_m C t_min_m,  Y_c >= w0 C t_min_c,  0 <= E_m <= p_max Y_c
///        lower <= w <= upper,  sum w = 1
struct BoxMinimum {
  double lower_bound = kInf;         // certified: optimum >= lower_bound
  std::vector<double> argmin;        // empty when the box holds no feasible point
  std::size_t newton_steps = 0;
};

///
/// The optimum is often not unique (a common share carried by one UAV ties
/// with individual shares). With least_overlap the returned argmin is the one
/// with the smallest common ratio among points within 1e-7 of the optimum.
inline BoxMinimum box_minimum(const ProblemInstance& inst, const std::vector<double>& lower,
                              const std::vector<double>& upper, const InnerOptions& opt = {},
                              bool least_overlap = true) {
  using detail::BarrierRow;
  const std::size_t M = inst.num_uavs();
  const std::size_t n = M + 1;
  if (lower.size() != n || upper.size() != n) throw std::invalid_argument("box_minimum: size mismatch");
  const double C = inst.data_bits(), B = inst.bandwidth(), beta = inst.beta_s();
  const double k = C * numerics::kLn2 / B;
  BoxMinimum out;

  // Individual shares must stay below the Shannon cap E_bar gamma_m / k.
  std::vector<double> hi(n);
  hi[0] = upper[0];
  for (std::size_t m = 1; m < n; ++m)
    hi[m] = std::min(upper[m], inst.energy_budget() * inst.gamma(m - 1) / k * (1.0 - 1e-12));
  std::vector<int> iw(n, -1);
  double fixed = 0.0, lo_free = 0.0, hi_free = 0.0;
  int nv = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (upper[i] - lower[i] <= 1e-12 * (1.0 + upper[i])) {
      fixed += lower[i];
      continue;
    }
    if (!(hi[i] > lower[i])) return out;
    iw[i] = nv++;
    lo_free += lower[i];
    hi_free += hi[i];
  }
  const double target = 1.0 - fixed;
  if (target < lo_free - 1e-12) return out;
  if (nv == 0 || target - lo_free <= 1e-12 * (1.0 + target)) {
    // Only the lower corner lies on the hyperplane.
    try {
      out.lower_bound = solve_inner(inst, TaskAllocation(lower), opt).objective_T;
      out.argmin = lower;
    } catch (const InfeasibleError&) {
    }
    return out;
  }
  if (target >= hi_free - 1e-12 * (1.0 + target)) {
    if (target > hi_free + 1e-12 * (1.0 + target)) return out;
    // Only the upper end of the free coordinates lies on the hyperplane.
    std::vector<double> w(lower);
    for (std::size_t i = 0; i < n; ++i)
      if (iw[i] >= 0) w[i] = hi[i];
    try {
      out.lower_bound = solve_inner(inst, TaskAllocation(w), opt).objective_T;
      out.argmin = std::move(w);
    } catch (const InfeasibleError&) {
    }
    return out;
  }

  const double theta = (target - lo_free) / (hi_free - lo_free);
  std::vector<double> w0v(n);
  for (std::size_t i = 0; i < n; ++i)
    w0v[i] = iw[i] >= 0 ? lower[i] + theta * (hi[i] - lower[i]) : lower[i];

  // Interior start from the fixed-allocation program at w0v.
  const TaskAllocation a0(w0v);
  detail::InnerProgram inner(inst, a0);
  Eigen::VectorXd xi;
  try {
    xi = inner.start();
  } catch (const InfeasibleError&) {
    return out;
  }

  std::vector<int> iY(M, -1), iE(M, -1);
  int iYc = -1;
  int next = nv;
  const auto active = [&](std::size_t i) { return iw[i] >= 0 || lower[i] > 0.0; };
  for (std::size_t m = 0; m < M; ++m)
    if (active(m + 1)) iY[m] = next++;
  const bool coop = active(0);
  if (coop) {
    iYc = next++;
    for (std::size_t m = 0; m < M; ++m) iE[m] = next++;
  }
  const int iR = next++;

  detail::BarrierProgram P;
  P.n = next;
  P.cost = Eigen::VectorXd::Zero(P.n);
  P.cost[iR] = 1.0;
  if (coop) P.cost[iYc] = 1.0;
  P.eq = Eigen::VectorXd::Zero(P.n);
  for (std::size_t i = 0; i < n; ++i)
    if (iw[i] >= 0) P.eq[iw[i]] = 1.0;

  // Adds coef * w_i to a row, as a constant when w_i is fixed.
  const auto add_w = [&](BarrierRow& r, std::size_t i, double coef) {
    if (iw[i] >= 0)
      r.lin.push_back({iw[i], coef});
    else
      r.c0 += coef * lower[i];
  };
  const auto set_perspective = [&](BarrierRow& r, int py, std::size_t i, double pc) {
    r.py = py;
    r.pc = pc;
    if (iw[i] >= 0) {
      r.pw = iw[i];
      r.pk = k;
    } else {
      r.pk = k * lower[i];
    }
  };

  for (std::size_t j = 0; j < M; ++j) {
    BarrierRow r;
    add_w(r, j + 1, beta);
    add_w(r, 0, beta);
    for (std::size_t i = j; i < M; ++i)
      if (iY[i] >= 0) r.lin.push_back({iY[i], 1.0});
    r.lin.push_back({iR, -1.0});
    P.rows.push_back(std::move(r));
  }
  for (std::size_t m = 0; m < M; ++m) {
    if (iY[m] < 0 && !coop) continue;
    BarrierRow r;
    r.c0 = -inst.energy_budget();
    if (iY[m] >= 0) set_perspective(r, iY[m], m + 1, 1.0 / inst.gamma(m));
    if (coop) r.lin.push_back({iE[m], 1.0});
    P.rows.push_back(std::move(r));
    if (iY[m] >= 0) {
      BarrierRow f;
      add_w(f, m + 1, C * inst.t_min_individual(m));
      f.lin.push_back({iY[m], -1.0});
      P.rows.push_back(std::move(f));
    }
  }
  if (coop) {
    BarrierRow r;
    set_perspective(r, iYc, 0, 1.0);
    for (std::size_t m = 0; m < M; ++m) r.lin.push_back({iE[m], -inst.gamma(m)});
    P.rows.push_back(std::move(r));
    BarrierRow f;
    add_w(f, 0, C * inst.t_min_coop());
    f.lin.push_back({iYc, -1.0});
    P.rows.push_back(std::move(f));
    for (std::size_t m = 0; m < M; ++m) {
      BarrierRow cap, pos;
      cap.lin = {{iE[m], 1.0}, {iYc, -inst.p_max()}};
      pos.lin = {{iE[m], -1.0}};
      P.rows.push_back(std::move(cap));
      P.rows.push_back(std::move(pos));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (iw[i] < 0) continue;
    BarrierRow lo, up;
    lo.c0 = lower[i];
    lo.lin = {{iw[i], -1.0}};
    up.c0 = -upper[i];
    up.lin = {{iw[i], 1.0}};
    P.rows.push_back(std::move(lo));
    P.rows.push_back(std::move(up));
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(P.n);
  for (std::size_t i = 0; i < n; ++i)
    if (iw[i] >= 0) x[iw[i]] = w0v[i];
  for (std::size_t m = 0; m < M; ++m)
    if (iY[m] >= 0) x[iY[m]] = w0v[m + 1] * xi[inner.index_y(m)];
  if (coop) {
    x[iYc] = w0v[0] * xi[inner.index_c()];
    for (std::size_t m = 0; m < M; ++m) x[iE[m]] = xi[inner.index_E(m)];
  }
  double R = 0.0;
  for (std::size_t j = 0; j < M; ++j) R = std::max(R, P.row_value(P.rows[j], x));
  x[iR] = R + 1e-2 * (1.0 + std::fabs(R));

  auto res = detail::barrier_minimize(P, x, opt, "box_minimum");
  const double f = P.objective(res.x);
  out.lower_bound = f - res.gap;
  out.newton_steps = res.steps;
  if (least_overlap && iw[0] >= 0 && res.x[iw[0]] > 1e-7) {
    BarrierRow cap;
    cap.c0 = -(f + 1e-7 * (1.0 + std::fabs(f)));
    cap.lin = {{iR, 1.0}, {iYc, 1.0}};
    P.rows.push_back(std::move(cap));
    P.cost = Eigen::VectorXd::Zero(P.n);
    P.cost[iw[0]] = 1.0;
    // The slab is thin, so the tie break runs to a looser tolerance; the
    // stage one point stands if it cannot finish.
    InnerOptions loose = opt;
    loose.tolerance = std::max(opt.tolerance, 1e-6);
    try {
      const auto tie = detail::barrier_minimize(P, res.x, loose, "box_minimum");
      out.newton_steps += tie.steps;
      res.x = tie.x;
    } catch (const ConvergenceError&) {
    }
  }
  out.argmin.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.argmin[i] = iw[i] >= 0 ? res.x[iw[i]] : lower[i];
  return out;
}

enum class PolyblockBounding {
  vertex_value,  // T at the lower corner of each box
  box_minimum,   // exact box minimum of the convex reformulation
};

class AllocationProblem {
 public:
  AllocationProblem(const ProblemInstance& inst, bool pin_common_zero,
                    PolyblockBounding bounding = PolyblockBounding::box_minimum, InnerOptions inner = {})
      : inst_(inst),
        upper_(allocation_upper_corner(inst.num_uavs(), pin_common_zero)),
        bounding_(bounding),
        inner_(inner) {}

  std::size_t dimension() const { return inst_.num_uavs() + 1; }
  std::vector<double> upper_corner() const { return upper_; }

  VertexBound lower_bound(const std::vector<double>& v) const {
    VertexBound b;
    if (std::accumulate(v.begin(), v.end(), 0.0) > 1.0 + 1e-12) return b;
    if (bounding_ == PolyblockBounding::box_minimum) {
      const auto bm = box_minimum(inst_, v, upper_, inner_);
      b.value = bm.lower_bound;
      if (!bm.argmin.empty()) b.candidate = best_of(bm.argmin);
      return b;
    }
    try {
      b.value = solve_inner(inst_, TaskAllocation(v), inner_).objective_T;
    } catch (const InfeasibleError&) {
    }
    return b;
  }

  std::vector<double> project(const std::vector<double>& v) const {
    return project_to_boundary(v, upper_);
  }

  BoundaryPoint evaluate(const std::vector<double>& phi) const {
    BoundaryPoint b;
    b.point = repair_allocation(phi);
    try {
      b.value = solve_inner(inst_, TaskAllocation(b.point), inner_).objective_T;
    } catch (const InfeasibleError&) {
      b.value = kInf;
    }
    return b;
  }

  BoundaryPoint evaluate_allocation(const TaskAllocation& a) const {
    std::vector<double> w(a.ratios().begin(), a.ratios().end());
    return evaluate(w);
  }

 private:
  // The barrier leaves inactive shares a hair above zero, and the overlap tie
  // break can trade objective slack for slivers of individual share. Shares
  // below kSnapShare go to zero when that costs at most the tie-break slack.
  static constexpr double kSnapShare = 1e-5;

  BoundaryPoint best_of(const std::vector<double>& w) const {
    BoundaryPoint raw = evaluate(w);
    std::vector<double> snapped = w;
    bool changed = false;
    for (auto& x : snapped)
      if (x > 0.0 && x < kSnapShare) {
        x = 0.0;
        changed = true;
      }
    if (!changed) return raw;
    BoundaryPoint s = evaluate(snapped);
    return s.value <= raw.value + 1e-7 * (1.0 + raw.value) ? s : raw;
  }

  const ProblemInstance& inst_;
  std::vector<double> upper_;
  PolyblockBounding bounding_;
  InnerOptions inner_;
};

struct PolyblockSolveOptions {
  std::size_t max_iterations = 500;
  std::size_t max_vertices = 100000;
  bool pin_common_zero = false;
  PolyblockBounding bounding = PolyblockBounding::box_minimum;
  std::vector<TaskAllocation> incumbents;
  PolyblockTrace* trace = nullptr;
  InnerOptions inner;
};

/// Global minimizer of the completion time over all allocations, to relative
/// bound gap epsilon. The report carries converged = false and the final gap
/// when the iteration cap is reached first.
inline SolveReport solve_polyblock(const ProblemInstance& inst, double epsilon,
                                   const PolyblockSolveOptions& opt = {}) {
  if (!(epsilon > 0.0) || epsilon > 0.1)
    throw std::invalid_argument("solve_polyblock: epsilon must lie in (0, 0.1]");
  AllocationProblem problem(inst, opt.pin_common_zero, opt.bounding, opt.inner);
  PolyblockOptions po;
  po.epsilon = epsilon;
  po.max_iterations = opt.max_iterations;
  po.max_vertices = opt.max_vertices;
  for (const auto& a : opt.incumbents) {
    if (opt.pin_common_zero && a.common() > 0.0) continue;
    auto b = problem.evaluate_allocation(a);
    if (std::isfinite(b.value)) po.incumbents.push_back(std::move(b));
  }
  if (opt.trace) po.on_iteration = [&](const PolyblockIteration& r) { opt.trace->push_back(r); };

  const auto res = polyblock_minimize(problem, po);
  if (!std::isfinite(res.best.value))
    throw InfeasibleError("no allocation satisfies the energy budget");

  SolveReport rep;
  rep.allocation = TaskAllocation(res.best.point);
  rep.plan = solve_inner(inst, rep.allocation, opt.inner).plan;
  rep.timeline = evaluate_timeline(inst, rep.allocation, rep.plan);
  rep.scheme_name = "proposed";
  rep.iterations = res.iterations;
  rep.bound_gap = res.gap;
  rep.converged = res.converged;
  return rep;
}

}  // namespace coopsense
