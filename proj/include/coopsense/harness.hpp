#pragma once

// Routing solver, brute-force oracle, parameter sweeps with CSV output, and
// run configuration.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "coopsense/analysis.hpp"
#include "coopsense/baselines.hpp"
#include "coopsense/degenerate.hpp"
#include "coopsense/errors.hpp"
#include "coopsense/inner_solver.hpp"
#include "coopsense/model.hpp"
#include "coopsense/polyblock.hpp"
#include "json.hpp"

namespace coopsense {

inline constexpr double kDefaultEpsilon = 1e-6;

// ---------------------------------------------------------------------------
// Routing

struct AutoOptions {
  // Also run the overlapped solver when the necessity check rules overlap out,
  // and keep its answer if it is better by more than `verify_margin`.
  bool verify_degenerate = true;
  double verify_margin = 1e-6;
  PolyblockSolveOptions polyblock;
};

struct AutoSolve {
  SolveReport report;
  OverlapVerdict verdict;
  bool routed_degenerate = false;
  // Relative improvement of the overlapped solver over the degenerate one on
  // the degenerate route; infinity when the degenerate problem is infeasible.
  std::optional<double> overlap_gain;
};

inline AutoSolve solve_auto_detailed(const ProblemInstance& inst, double eps = kDefaultEpsilon,
                                     const AutoOptions& opt = {}) {
  AutoSolve out;
  out.verdict = necessity_check(inst);
  out.routed_degenerate = !out.verdict.overlap_possible;

  if (!out.routed_degenerate) {
    out.report = solve_polyblock(inst, eps, opt.polyblock);
  } else {
    std::optional<SolveReport> deg, pb;
    std::optional<InfeasibleError> deg_err;
    try {
      deg = solve_degenerate(inst);
    } catch (const InfeasibleError& e) {
      deg_err = e;
    }
    if (opt.verify_degenerate) {
      try {
        pb = solve_polyblock(inst, eps, opt.polyblock);
      } catch (const InfeasibleError&) {
        if (!deg) throw;
      }
    }
    if (!deg && !pb) throw *deg_err;
    if (deg && pb) {
      const double gain = (deg->timeline.total_T - pb->timeline.total_T) / deg->timeline.total_T;
      out.overlap_gain = gain;
      out.report = gain > opt.verify_margin ? std::move(*pb) : std::move(*deg);
      out.report.diagnostics.push_back({"overlap_necessity", gain <= opt.verify_margin, gain});
    } else if (pb) {
      out.overlap_gain = std::numeric_limits<double>::infinity();
      out.report = std::move(*pb);
      out.report.diagnostics.push_back({"overlap_necessity", false, *out.overlap_gain});
    } else {
      out.report = std::move(*deg);
    }
  }
  out.report.scheme_name = "proposed";
  auto extra = optimality_diagnostics(inst, out.report);
  out.report.diagnostics.insert(out.report.diagnostics.end(), extra.begin(), extra.end());
  return out;
}

/// Consults the necessity check, routes to the matching solver and attaches
/// the optimality diagnostics.
inline SolveReport solve_auto(const ProblemInstance& inst, double eps = kDefaultEpsilon,
                              const AutoOptions& opt = {}) {
  return solve_auto_detailed(inst, eps, opt).report;
}

// ---------------------------------------------------------------------------
// Brute-force oracle

struct OracleResult {
  TaskAllocation allocation;
  double total_T = std::numeric_limits<double>::infinity();
  std::size_t grid_points = 0;
  std::size_t feasible_points = 0;
};

inline constexpr std::size_t kOracleMaxPoints = 1'000'000;

namespace detail {

// Visits every (omega_0, omega_1 <= ... <= omega_M) with entries k/n summing
// to one, in lexicographic order of the integer counts.
template <typename F>
void for_each_ordered_point(std::size_t M, long n, F&& f) {
  std::vector<long> k(M + 1, 0);
  auto rec = [&](auto&& self, std::size_t pos, long left, long floor) -> void {
    if (pos == M) {
      if (left >= floor) {
        k[M] = left;
        f(k);
      }
      return;
    }
    for (long v = floor; v * static_cast<long>(M - pos + 1) <= left; ++v) {
      k[pos] = v;
      self(self, pos + 1, left - v, v);
    }
  };
  for (long k0 = 0; k0 <= n; ++k0) {
    k[0] = k0;
    rec(rec, 1, n - k0, 0);
  }
}

}  // namespace detail

/// Number of ordered grid points for step 1/n.
inline std::size_t oracle_grid_size(std::size_t M, long n) {
  std::size_t count = 0;
  detail::for_each_ordered_point(M, n, [&](const std::vector<long>&) { ++count; });
  return count;
}

/// Exhaustive search over the ordered simplex grid of step delta, with the
/// inner problem solved at every point. Ties keep the first point visited.
inline OracleResult brute_force_oracle(const ProblemInstance& inst, double delta,
                                       const InnerOptions& inner = {}) {
  const std::size_t M = inst.num_uavs();
  if (M > 3) throw std::invalid_argument("oracle: at most 3 UAVs");
  if (!(delta >= 0.005 - 1e-12 && delta <= 0.1 + 1e-12))
    throw std::invalid_argument("oracle: grid step must lie in [0.005, 0.1]");
  const long n = std::lround(1.0 / delta);
  if (std::fabs(static_cast<double>(n) * delta - 1.0) > 1e-9)
    throw std::invalid_argument("oracle: grid step must divide 1");

  OracleResult out;
  out.grid_points = oracle_grid_size(M, n);
  if (out.grid_points > kOracleMaxPoints) throw std::invalid_argument("oracle: grid too large");

  std::vector<double> w(M + 1);
  detail::for_each_ordered_point(M, n, [&](const std::vector<long>& k) {
    for (std::size_t i = 0; i <= M; ++i) w[i] = static_cast<double>(k[i]) / static_cast<double>(n);
    const TaskAllocation a(w);
    try {
      const auto s = solve_inner(inst, a, inner);
      ++out.feasible_points;
      if (s.objective_T < out.total_T) {
        out.total_T = s.objective_T;
        out.allocation = a;
      }
    } catch (const InfeasibleError&) {
    }
  });
  if (out.feasible_points == 0) throw InfeasibleError("oracle: no feasible grid point");
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

inline const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> p = {"beta_s", "energy_budget", "p_max", "num_uavs"};
  return p;
}

inline const std::vector<std::string>& scheme_names() {
  static const std::vector<std::string> s = {"proposed", "uta_wc", "uta_c", "full_c", "opt_wc"};
  return s;
}

struct SweepSpec {
  std::string parameter;
  std::vector<double> values;
  std::vector<std::string> schemes = scheme_names();
  std::uint64_t seed = 0;

  void validate() const {
    if (std::find(sweep_parameters().begin(), sweep_parameters().end(), parameter) ==
        sweep_parameters().end())
      throw std::invalid_argument("sweep: unknown parameter '" + parameter + "'");
    if (values.empty()) throw std::invalid_argument("sweep: empty value list");
    if (schemes.empty()) throw std::invalid_argument("sweep: empty scheme list");
    for (const auto& s : schemes)
      if (std::find(scheme_names().begin(), scheme_names().end(), s) == scheme_names().end())
        throw std::invalid_argument("sweep: unknown scheme '" + s + "'");
    for (double v : values)
      if (!std::isfinite(v)) throw std::invalid_argument("sweep: non-finite value");
    if (parameter == "num_uavs")
      for (double v : values)
        if (v < 1 || v != std::floor(v)) throw std::invalid_argument("sweep: num_uavs must be a positive integer");
  }
};

/// Gains for an M-UAV scenario: the stated three values extended by the same
/// 3e3 step (9e3, 1.2e4, 1.5e4, 1.8e4, ...).
inline std::vector<double> extended_gains(std::size_t M) {
  std::vector<double> g(M);
  for (std::size_t m = 0; m < M; ++m) g[m] = 9e3 + 3e3 * static_cast<double>(m);
  return g;
}

inline InstanceParams apply_parameter(InstanceParams p, const std::string& name, double value) {
  if (name == "beta_s")
    p.beta_s = value;
  else if (name == "energy_budget")
    p.energy_budget_j = value;
  else if (name == "p_max")
    p.p_max_w = value;
  else if (name == "num_uavs")
    p.gamma = extended_gains(static_cast<std::size_t>(value));
  else
    throw std::invalid_argument("unknown sweep parameter '" + name + "'");
  return p;
}

enum class RowStatus { ok, infeasible, nonconvergence };

struct ResultRow {
  std::string param;
  double value = 0.0;
  std::string scheme;
  InstanceParams params;
  RowStatus status = RowStatus::ok;
  std::string message;
  SolveReport report;
};

inline SolveReport run_scheme(const std::string& scheme, const ProblemInstance& inst, double eps) {
  if (scheme == "proposed") return solve_auto(inst, eps);
  return run_baseline(scheme, inst);
}

struct SweepOptions {
  double epsilon = kDefaultEpsilon;
  std::size_t threads = 0;  // 0: hardware concurrency
};

/// One row per (value, scheme), sorted by value then scheme name. Workers
/// pull cells from a shared counter and write only their own slot.
inline std::vector<ResultRow> run_sweep(const SweepSpec& spec, const InstanceParams& base,
                                        const SweepOptions& opt = {}) {
  spec.validate();
  std::vector<ResultRow> rows;
  for (double v : spec.values)
    for (const auto& s : spec.schemes) {
      ResultRow r;
      r.param = spec.parameter;
      r.value = v;
      r.scheme = s;
      r.params = apply_parameter(base, spec.parameter, v);
      rows.push_back(std::move(r));
    }

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      auto& r = rows[i];
      try {
        r.report = run_scheme(r.scheme, ProblemInstance(r.params), opt.epsilon);
      } catch (const InfeasibleError& e) {
        r.status = RowStatus::infeasible;
        r.message = e.what();
      } catch (const ConvergenceError& e) {
        r.status = RowStatus::nonconvergence;
        r.message = e.what();
      }
    }
  };
  std::size_t n = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  n = std::min(n, rows.size());
  std::vector<std::future<void>> pool;
  for (std::size_t t = 0; t < n; ++t) pool.push_back(std::async(std::launch::async, work));
  for (auto& f : pool) f.get();

  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.value != b.value) return a.value < b.value;
    return a.scheme < b.scheme;
  });
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace detail

inline std::string csv_header(std::size_t M) {
  std::string h = "param,value,scheme,T_total,omega_0";
  for (std::size_t m = 1; m <= M; ++m) h += ",omega_" + std::to_string(m);
  for (std::size_t m = 1; m <= M; ++m) h += ",E_" + std::to_string(m);
  h += ",t_c";
  for (std::size_t m = 1; m <= M; ++m) h += ",t_n_" + std::to_string(m);
  h += ",iters,gap";
  return h;
}

/// CSV text for the solved rows. Per-UAV columns follow ascending gain order
/// and are left empty past a row's own UAV count. Unsolved rows are omitted.
inline std::string format_csv(const std::vector<ResultRow>& rows) {
  std::size_t M = 0;
  for (const auto& r : rows)
    if (r.status == RowStatus::ok) M = std::max(M, r.report.allocation.num_uavs());
  std::ostringstream os;
  os << csv_header(M) << '\n';
  using detail::fmt17;
  for (const auto& r : rows) {
    if (r.status != RowStatus::ok) continue;
    const ProblemInstance inst(r.params);
    const auto& a = r.report.allocation;
    const auto& p = r.report.plan;
    const std::size_t Mr = a.num_uavs();
    auto pad = [&](auto&& cell) {
      for (std::size_t m = 0; m < M; ++m) {
        os << ',';
        if (m < Mr) os << cell(m);
      }
    };
    os << r.param << ',' << fmt17(r.value) << ',' << r.scheme << ',' << fmt17(r.report.timeline.total_T) << ','
       << fmt17(a.common());
    pad([&](std::size_t m) { return fmt17(a.individual(m)); });
    pad([&](std::size_t m) { return fmt17(energy_consumption(inst, a, p, m)); });
    os << ',' << fmt17(p.t_c);
    pad([&](std::size_t m) { return fmt17(p.t_n[m]); });
    os << ',' << r.report.iterations << ',' << fmt17(r.report.bound_gap) << '\n';
  }
  return os.str();
}

/// Writes to a sibling temporary file, then renames over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string());
    f << text;
    f.flush();
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  write_file_atomic(path, format_csv(rows));
}

/// One CSV record parsed back into an instance, allocation and plan.
struct LoadedRow {
  std::string param;
  double value = 0.0;
  std::string scheme;
  double total_T = 0.0;
  TaskAllocation allocation;
  std::vector<double> energy;
  TransmissionPlan plan;
};

/// Rebuilds the plan of a CSV record: individual powers from t_n, cooperative
/// powers from the energy left after the individual upload.
inline LoadedRow load_csv_row(const std::string& line, const InstanceParams& base) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  if (cells.size() < 11 || (cells.size() - 8) % 3 != 0) throw std::invalid_argument("csv: bad record width");
  const std::size_t width = (cells.size() - 8) / 3;
  std::size_t M = 0;
  while (M < width && !cells[5 + M].empty()) ++M;
  if (M == 0) throw std::invalid_argument("csv: record without UAV columns");

  LoadedRow r;
  r.param = cells[0];
  r.value = std::stod(cells[1]);
  r.scheme = cells[2];
  r.total_T = std::stod(cells[3]);
  std::vector<double> w(M + 1);
  w[0] = std::stod(cells[4]);
  for (std::size_t m = 0; m < M; ++m) w[m + 1] = std::stod(cells[5 + m]);
  r.allocation = TaskAllocation(w);
  for (std::size_t m = 0; m < M; ++m) r.energy.push_back(std::stod(cells[5 + width + m]));
  auto& p = r.plan;
  p.t_c = std::stod(cells[5 + 2 * width]);
  for (std::size_t m = 0; m < M; ++m) p.t_n.push_back(std::stod(cells[6 + 2 * width + m]));

  const ProblemInstance inst(apply_parameter(base, r.param, r.value));
  if (inst.num_uavs() != M) throw std::invalid_argument("csv: UAV count does not match the instance");
  const double C = inst.data_bits();
  p.p_n.resize(M);
  p.p_c.resize(M);
  p.E_c.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    const double wm = r.allocation.individual(m);
    p.p_n[m] = wm > 0.0 ? power_for_time(p.t_n[m], inst.gamma(m), inst.bandwidth()) : 0.0;
    const double e_ind = wm * C * p.t_n[m] * p.p_n[m];
    const double bits_c = r.allocation.common() * C * p.t_c;
    p.E_c[m] = bits_c > 0.0 ? std::max(0.0, r.energy[m] - e_ind) : 0.0;
    p.p_c[m] = bits_c > 0.0 ? p.E_c[m] / bits_c : 0.0;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Summary

struct SchemeGap {
  std::string scheme;
  double mean_gap_pct = 0.0;  // mean of (T_scheme / T_proposed - 1) * 100
  std::size_t points = 0;
};

inline std::vector<SchemeGap> summarize_gaps(const std::vector<ResultRow>& rows) {
  std::map<double, double> proposed;
  for (const auto& r : rows)
    if (r.status == RowStatus::ok && r.scheme == "proposed") proposed[r.value] = r.report.timeline.total_T;
  std::map<std::string, SchemeGap> acc;
  for (const auto& r : rows) {
    if (r.status != RowStatus::ok || r.scheme == "proposed") continue;
    const auto it = proposed.find(r.value);
    if (it == proposed.end()) continue;
    auto& g = acc[r.scheme];
    g.scheme = r.scheme;
    g.mean_gap_pct += (r.report.timeline.total_T / it->second - 1.0) * 100.0;
    ++g.points;
  }
  std::vector<SchemeGap> out;
  for (auto& [_, g] : acc) {
    if (g.points) g.mean_gap_pct /= static_cast<double>(g.points);
    out.push_back(g);
  }
  return out;
}

inline std::string format_summary(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  char buf[160];
  for (const auto& g : summarize_gaps(rows)) {
    std::snprintf(buf, sizeof buf, "mean gap %-8s vs proposed: %+8.3f %% over %zu points\n", g.scheme.c_str(),
                  g.mean_gap_pct, g.points);
    os << buf;
  }
  for (const auto& r : rows) {
    if (r.status == RowStatus::ok) continue;
    std::snprintf(buf, sizeof buf, "%s %s=%.6g: %s\n",
                  r.status == RowStatus::infeasible ? "infeasible" : "no convergence", r.param.c_str(), r.value,
                  r.scheme.c_str());
    os << buf;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Configuration and presets

struct RunConfig {
  InstanceParams instance = paper_default_params();
  std::optional<SweepSpec> sweep;
  double epsilon = kDefaultEpsilon;
  std::uint64_t seed = 0;
};

inline std::vector<double> grid(double start, double stop, double step) {
  std::vector<double> v;
  const long n = std::lround((stop - start) / step);
  for (long i = 0; i <= n; ++i) v.push_back(start + static_cast<double>(i) * step);
  return v;
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> n = {"paper-default", "fig5a", "fig5b", "fig6a", "fig6b", "fig8"};
  return n;
}

inline RunConfig preset(const std::string& name) {
  RunConfig c;
  auto sweep = [&](std::string param, std::vector<double> values) {
    SweepSpec s;
    s.parameter = std::move(param);
    s.values = std::move(values);
    c.sweep = std::move(s);
  };
  if (name == "paper-default") {
    sweep("beta_s", {c.instance.beta_s});
  } else if (name == "fig5a") {
    c.instance.energy_budget_j = 0.2;
    sweep("beta_s", grid(1.0, 10.0, 0.5));
  } else if (name == "fig5b") {
    c.instance.energy_budget_j = 1.0;
    sweep("beta_s", grid(1.0, 10.0, 0.5));
  } else if (name == "fig6a") {
    sweep("energy_budget", grid(0.05, 1.0, 0.05));
  } else if (name == "fig6b") {
    sweep("p_max", grid(0.002, 0.02, 0.002));
  } else if (name == "fig8") {
    sweep("num_uavs", {1, 2, 3, 4, 5});
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return c;
}

inline SweepSpec sweep_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("sweep document must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (key != "parameter" && key != "values" && key != "schemes" && key != "seed")
      throw std::invalid_argument("sweep document: unknown key '" + key + "'");
  SweepSpec s;
  s.parameter = j.at("parameter").get<std::string>();
  s.values = j.at("values").get<std::vector<double>>();
  if (j.contains("schemes")) s.schemes = j.at("schemes").get<std::vector<std::string>>();
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  s.validate();
  return s;
}

inline nlohmann::json to_json(const SweepSpec& s) {
  return {{"parameter", s.parameter}, {"values", s.values}, {"schemes", s.schemes}, {"seed", s.seed}};
}

/// Reads {preset?, instance?, sweep?, epsilon?, seed?}. A preset supplies the
/// starting point; the other keys override it.
inline RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (key != "preset" && key != "instance" && key != "sweep" && key != "epsilon" && key != "seed")
      throw std::invalid_argument("config: unknown key '" + key + "'");
  RunConfig c = j.contains("preset") ? preset(j.at("preset").get<std::string>()) : RunConfig{};
  if (j.contains("instance")) c.instance = params_from_json(j.at("instance"), c.instance);
  if (j.contains("sweep")) c.sweep = sweep_from_json(j.at("sweep"));
  if (j.contains("epsilon")) c.epsilon = j.at("epsilon").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (!(c.epsilon > 0.0 && c.epsilon <= 0.1)) throw std::invalid_argument("config: epsilon must lie in (0, 0.1]");
  if (c.sweep) c.sweep->seed = c.seed;
  static_cast<void>(ProblemInstance(c.instance));
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return config_from_json(nlohmann::json::parse(f));
}

// ---------------------------------------------------------------------------
// Solution documents

inline nlohmann::json report_to_json(const InstanceParams& params, const SolveReport& r) {
  nlohmann::json diag = nlohmann::json::array();
  for (const auto& d : r.diagnostics) diag.push_back({{"name", d.name}, {"passed", d.passed}, {"residual", d.residual}});
  const auto& a = r.allocation.ratios();
  return {{"instance", to_json(params)},
          {"scheme", r.scheme_name},
          {"T_total", r.timeline.total_T},
          {"omega", std::vector<double>(a.begin(), a.end())},
          {"t_n", r.plan.t_n},
          {"t_c", r.plan.t_c},
          {"p_n", r.plan.p_n},
          {"p_c", r.plan.p_c},
          {"E_c", r.plan.E_c},
          {"iterations", r.iterations},
          {"bound_gap", r.bound_gap},
          {"converged", r.converged},
          {"diagnostics", diag}};
}

struct SolutionDocument {
  InstanceParams params;
  TaskAllocation allocation;
  TransmissionPlan plan;
};

/// Per-UAV arrays are in ascending gain order, as produced by report_to_json.
inline SolutionDocument solution_from_json(const nlohmann::json& j) {
  SolutionDocument d;
  d.params = params_from_json(j.at("instance"));
  d.allocation = TaskAllocation(j.at("omega").get<std::vector<double>>());
  d.plan.t_n = j.at("t_n").get<std::vector<double>>();
  d.plan.t_c = j.at("t_c").get<double>();
  d.plan.p_n = j.at("p_n").get<std::vector<double>>();
  d.plan.p_c = j.at("p_c").get<std::vector<double>>();
  d.plan.E_c = j.at("E_c").get<std::vector<double>>();
  return d;
}

}  // namespace coopsense
