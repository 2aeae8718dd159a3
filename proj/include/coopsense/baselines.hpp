#pragma once

// Comparison schemes: fixed allocations with optimal powers, plus the best
// allocation without cooperation.

#include <string>
#include <vector>

#include "coopsense/degenerate.hpp"
#include "coopsense/inner_solver.hpp"
#include "coopsense/model.hpp"

namespace coopsense {

/// Optimal powers and times for a fixed allocation, packaged as a report.
inline SolveReport report_for_allocation(const ProblemInstance& inst, const TaskAllocation& alloc,
                                         std::string scheme, const InnerOptions& opt = {}) {
  const auto s = solve_inner(inst, alloc, opt);
  SolveReport r;
  r.allocation = alloc;
  r.plan = s.plan;
  r.timeline = evaluate_timeline(inst, alloc, s.plan);
  r.scheme_name = std::move(scheme);
  r.iterations = s.newton_steps;
  r.bound_gap = 0.0;
  r.converged = s.converged;
  return r;
}

/// Uniform split over the UAVs, no common task.
inline SolveReport uta_wc(const ProblemInstance& inst) {
  return report_for_allocation(inst, TaskAllocation::uniform_individual(inst.num_uavs()), "uta_wc");
}

/// Uniform split over the common task and every UAV.
inline SolveReport uta_c(const ProblemInstance& inst) {
  const std::size_t M = inst.num_uavs();
  return report_for_allocation(inst, TaskAllocation(std::vector<double>(M + 1, 1.0 / static_cast<double>(M + 1))),
                               "uta_c");
}

/// Every UAV senses the whole mission; one cooperative upload.
inline SolveReport full_c(const ProblemInstance& inst) {
  std::vector<double> w(inst.num_uavs() + 1, 0.0);
  w[0] = 1.0;
  return report_for_allocation(inst, TaskAllocation(std::move(w)), "full_c");
}

/// Optimal allocation and powers without a common task.
inline SolveReport opt_wc(const ProblemInstance& inst) {
  auto r = solve_degenerate(inst);
  r.scheme_name = "opt_wc";
  return r;
}

inline const std::vector<std::string>& baseline_names() {
  static const std::vector<std::string> names = {"uta_wc", "uta_c", "full_c", "opt_wc"};
  return names;
}

/// Runs a baseline by name; throws std::invalid_argument for unknown names.
inline SolveReport run_baseline(const std::string& name, const ProblemInstance& inst) {
  if (name == "uta_wc") return uta_wc(inst);
  if (name == "uta_c") return uta_c(inst);
  if (name == "full_c") return full_c(inst);
  if (name == "opt_wc") return opt_wc(inst);
  throw std::invalid_argument("unknown baseline '" + name + "'");
}

}  // namespace coopsense
