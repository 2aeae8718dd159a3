#pragma once

// Domain types for the cooperative sensing-and-transmission mission and the
// exact evaluation of its timeline and per-UAV energy use.
//
// Indexing: UAVs are 0-based internally and always held in ascending order of
// channel gain. A TaskAllocation stores M+1 ratios, slot 0 being the common
// (overlapped) task and slot 1+m the individual task of UAV m.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "coopsense/numerics.hpp"
#include "json.hpp"

namespace coopsense {

/// Physical parameters of one scenario, in the order the caller supplied them.
struct InstanceParams {
  std::vector<double> gamma;   // normalized channel power gains |h|^2/sigma^2, 1/W
  double data_bits = 0.0;      // C
  double beta_s = 0.0;         // seconds for one UAV to sense the whole mission
  double bandwidth_hz = 0.0;   // B
  double p_max_w = 0.0;
  double energy_budget_j = 0.0;  // per UAV
};

/// Values used in the published simulation setup.
inline InstanceParams paper_default_params() {
  return {{9e3, 1.2e4, 1.5e4}, 2e7, 2.0, 1e5, 0.01, 1.0};
}

/// Validated instance with gains sorted ascending. order()[k] is the caller
/// index of the k-th sorted UAV.
class ProblemInstance {
 public:
  explicit ProblemInstance(InstanceParams p) : caller_(std::move(p)) {
    const auto& g = caller_.gamma;
    if (g.empty()) throw std::invalid_argument("instance: need at least one UAV");
    for (double v : g)
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("instance: channel gains must be positive");
    if (!(caller_.data_bits > 0.0)) throw std::invalid_argument("instance: C must be > 0");
    if (!(caller_.beta_s >= 0.0) || !std::isfinite(caller_.beta_s))
      throw std::invalid_argument("instance: beta_s must be >= 0");
    if (!(caller_.bandwidth_hz > 0.0)) throw std::invalid_argument("instance: B must be > 0");
    if (!(caller_.p_max_w > 0.0)) throw std::invalid_argument("instance: p_max must be > 0");
    if (!(caller_.energy_budget_j > 0.0))
      throw std::invalid_argument("instance: energy budget must be > 0");

    order_.resize(g.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return g[a] < g[b]; });
    gamma_.reserve(g.size());
    for (std::size_t k : order_) gamma_.push_back(g[k]);
  }

  std::size_t num_uavs() const { return gamma_.size(); }
  std::span<const double> gamma() const { return gamma_; }
  double gamma(std::size_t m) const { return gamma_.at(m); }
  const std::vector<std::size_t>& order() const { return order_; }
  const InstanceParams& params() const { return caller_; }

  double data_bits() const { return caller_.data_bits; }
  double beta_s() const { return caller_.beta_s; }
  double bandwidth() const { return caller_.bandwidth_hz; }
  double p_max() const { return caller_.p_max_w; }
  double energy_budget() const { return caller_.energy_budget_j; }

  double sum_gamma() const { return std::accumulate(gamma_.begin(), gamma_.end(), 0.0); }

  /// Per-bit time of UAV m transmitting alone at p_max.
  double t_min_individual(std::size_t m) const {
    return 1.0 / (bandwidth() * std::log2(1.0 + p_max() * gamma(m)));
  }
  /// Per-bit time of all UAVs transmitting cooperatively at p_max.
  double t_min_coop() const {
    return 1.0 / (bandwidth() * std::log2(1.0 + p_max() * sum_gamma()));
  }

  ProblemInstance with_beta_s(double v) const { return modified([&](auto& p) { p.beta_s = v; }); }
  ProblemInstance with_energy_budget(double v) const {
    return modified([&](auto& p) { p.energy_budget_j = v; });
  }
  ProblemInstance with_p_max(double v) const { return modified([&](auto& p) { p.p_max_w = v; }); }
  ProblemInstance with_gamma(std::vector<double> g) const {
    return modified([&](auto& p) { p.gamma = std::move(g); });
  }

 private:
  template <typename F>
  ProblemInstance modified(F&& f) const {
    InstanceParams p = caller_;
    f(p);
    return ProblemInstance(std::move(p));
  }

  InstanceParams caller_;
  std::vector<double> gamma_;
  std::vector<std::size_t> order_;
};

inline constexpr double kRatioSumTol = 1e-9;

/// Ratio vector (omega_0, omega_1, ..., omega_M). The constructor accepts any
/// non-negative vector so relaxed points (sum below one) can be evaluated by
/// the bounding machinery; validate() enforces the full invariants.
class TaskAllocation {
 public:
  TaskAllocation() = default;
  explicit TaskAllocation(std::vector<double> omega) : omega_(std::move(omega)) {
    if (omega_.size() < 2) throw std::invalid_argument("allocation: need M+1 >= 2 ratios");
    for (double w : omega_)
      if (!(w >= 0.0) || !std::isfinite(w))
        throw std::invalid_argument("allocation: ratios must be finite and >= 0");
  }

  static TaskAllocation uniform_individual(std::size_t M) {
    std::vector<double> w(M + 1, 1.0 / static_cast<double>(M));
    w[0] = 0.0;
    return TaskAllocation(std::move(w));
  }

  std::size_t num_uavs() const { return omega_.size() - 1; }
  double common() const { return omega_[0]; }
  double individual(std::size_t m) const { return omega_.at(m + 1); }
  std::span<const double> ratios() const { return omega_; }
  double sum() const { return std::accumulate(omega_.begin(), omega_.end(), 0.0); }

  /// Throws std::invalid_argument unless ratios lie in [0,1], sum to one and
  /// individual ratios are non-decreasing.
  void validate() const {
    for (double w : omega_)
      if (w > 1.0 + 1e-12) throw std::invalid_argument("allocation: ratio above 1");
    if (std::fabs(sum() - 1.0) > kRatioSumTol)
      throw std::invalid_argument("allocation: ratios must sum to 1");
    for (std::size_t m = 1; m + 1 < omega_.size(); ++m)
      if (omega_[m] > omega_[m + 1] + 1e-12)
        throw std::invalid_argument("allocation: individual ratios must be non-decreasing");
  }

 private:
  std::vector<double> omega_;
};

/// Per-bit transmission times, powers and cooperative energy split. When the
/// common ratio is zero the cooperative phase is absent and t_c, p_c, E_c are 0.
struct TransmissionPlan {
  std::vector<double> t_n;  // s/bit, per UAV
  double t_c = 0.0;         // s/bit
  std::vector<double> p_n;  // W
  std::vector<double> p_c;  // W
  std::vector<double> E_c;  // J

  static TransmissionPlan max_power(const ProblemInstance& inst) {
    const std::size_t M = inst.num_uavs();
    TransmissionPlan plan;
    plan.t_n.resize(M);
    for (std::size_t m = 0; m < M; ++m) plan.t_n[m] = inst.t_min_individual(m);
    plan.t_c = inst.t_min_coop();
    plan.p_n.assign(M, inst.p_max());
    plan.p_c.assign(M, inst.p_max());
    plan.E_c.assign(M, 0.0);
    return plan;
  }
};

/// Per-bit time for a given SNR (Shannon rate inverted).
inline double per_bit_time(double snr, double bandwidth) {
  return 1.0 / (bandwidth * std::log2(1.0 + snr));
}

/// Power that achieves per-bit time t on a link with gain gamma.
inline double power_for_time(double t, double gamma, double bandwidth) {
  return std::expm1(numerics::kLn2 / (bandwidth * t)) / gamma;
}

struct MissionTimeline {
  std::vector<double> sense_end;  // T^s_m
  std::vector<double> tx_start;
  std::vector<double> tx_end;
  double coop_start = 0.0;
  double coop_end = 0.0;
  double total_T = 0.0;
};

struct CheckResult {
  std::string name;
  bool passed = true;
  double residual = 0.0;
};

struct SolveReport {
  TaskAllocation allocation;
  TransmissionPlan plan;
  MissionTimeline timeline;
  std::string scheme_name;
  std::size_t iterations = 0;
  double bound_gap = 0.0;
  bool converged = true;
  std::vector<CheckResult> diagnostics;
};

namespace detail {
inline void check_dims(const ProblemInstance& inst, const TaskAllocation& alloc,
                       const TransmissionPlan& plan) {
  const std::size_t M = inst.num_uavs();
  if (alloc.num_uavs() != M || plan.t_n.size() != M || plan.p_n.size() != M ||
      plan.p_c.size() != M || plan.E_c.size() != M)
    throw std::invalid_argument("dimension mismatch between instance, allocation and plan");
}
}  // namespace detail

/// Exact mission timeline: sensing in parallel, individual uploads serialized
/// in UAV index order (each waits for its own sensing and an idle channel),
/// then one cooperative upload of the common data.
inline MissionTimeline evaluate_timeline(const ProblemInstance& inst, const TaskAllocation& alloc,
                                         const TransmissionPlan& plan) {
  detail::check_dims(inst, alloc, plan);
  const std::size_t M = inst.num_uavs();
  const double C = inst.data_bits();
  MissionTimeline tl;
  tl.sense_end.resize(M);
  tl.tx_start.resize(M);
  tl.tx_end.resize(M);
  double channel_free = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    tl.sense_end[m] = (alloc.individual(m) + alloc.common()) * inst.beta_s();
    tl.tx_start[m] = m == 0 ? tl.sense_end[0] : std::max(channel_free, tl.sense_end[m]);
    tl.tx_end[m] = tl.tx_start[m] + alloc.individual(m) * C * plan.t_n[m];
    channel_free = tl.tx_end[m];
  }
  tl.coop_start = channel_free;
  tl.coop_end = tl.coop_start + alloc.common() * C * plan.t_c;
  tl.total_T = tl.coop_end;
  return tl;
}

/// Total transmit energy of UAV m over both upload phases.
inline double energy_consumption(const ProblemInstance& inst, const TaskAllocation& alloc,
                                 const TransmissionPlan& plan, std::size_t m) {
  detail::check_dims(inst, alloc, plan);
  if (m >= inst.num_uavs()) throw std::out_of_range("energy_consumption: UAV index out of range");
  const double C = inst.data_bits();
  return alloc.common() * C * plan.t_c * plan.p_c[m] +
         alloc.individual(m) * C * plan.t_n[m] * plan.p_n[m];
}

struct Violation {
  std::string name;
  double residual = 0.0;
};

/// Constraint check of a candidate solution. Empty result means: per-UAV
/// energy within budget, powers within [0, p_max], ratios in [0,1] summing to
/// one, and every UAV's sensing finished by the time the back-to-back upload
/// schedule reaches it.
inline std::vector<Violation> validate_solution(const ProblemInstance& inst,
                                                const TaskAllocation& alloc,
                                                const TransmissionPlan& plan) {
  std::vector<Violation> out;
  try {
    detail::check_dims(inst, alloc, plan);
  } catch (const std::invalid_argument&) {
    out.push_back({"dimension", 1.0});
    return out;
  }
  const std::size_t M = inst.num_uavs();
  const double C = inst.data_bits();
  const double Ebar = inst.energy_budget();
  const double pmax = inst.p_max();

  for (std::size_t i = 0; i <= M; ++i) {
    const double w = alloc.ratios()[i];
    if (w < 0.0 || w > 1.0 + 1e-12)
      out.push_back({"ratio_bounds[" + std::to_string(i) + "]", w < 0.0 ? -w : w - 1.0});
  }
  const double sum_err = alloc.sum() - 1.0;
  if (std::fabs(sum_err) > kRatioSumTol) out.push_back({"ratio_sum", sum_err});

  for (std::size_t m = 0; m < M; ++m) {
    const double e = energy_consumption(inst, alloc, plan, m);
    if (e > Ebar * (1.0 + 1e-9)) out.push_back({"energy[" + std::to_string(m) + "]", e - Ebar});
    const double ptol = pmax * 1e-9;
    if (plan.p_n[m] < -ptol || plan.p_n[m] > pmax + ptol)
      out.push_back({"power_n[" + std::to_string(m) + "]",
                     plan.p_n[m] < 0.0 ? -plan.p_n[m] : plan.p_n[m] - pmax});
    if (plan.p_c[m] < -ptol || plan.p_c[m] > pmax + ptol)
      out.push_back({"power_c[" + std::to_string(m) + "]",
                     plan.p_c[m] < 0.0 ? -plan.p_c[m] : plan.p_c[m] - pmax});
  }

  // Back-to-back schedule over the UAVs that carry individual data: the next
  // one must be done sensing when the previous upload ends. UAVs with no
  // individual share send nothing and cannot absorb idle time.
  const double beta = inst.beta_s();
  const double scale = 1.0 + evaluate_timeline(inst, alloc, plan).total_T;
  double t_max = 0.0;
  std::size_t prev = M;
  for (std::size_t m = 0; m < M; ++m) {
    if (!(alloc.individual(m) > 0.0)) continue;
    const double sense = (alloc.individual(m) + alloc.common()) * beta;
    if (prev == M) {
      t_max = sense;
    } else {
      t_max += alloc.individual(prev) * C * plan.t_n[prev];
      if (sense - t_max > 1e-9 * scale)
        out.push_back({"causality[" + std::to_string(prev) + "]", sense - t_max});
    }
    prev = m;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Instance document: flat JSON object.

inline nlohmann::json to_json(const InstanceParams& p) {
  return {{"gamma", p.gamma},
          {"C_bits", p.data_bits},
          {"beta_s_sec", p.beta_s},
          {"bandwidth_hz", p.bandwidth_hz},
          {"p_max_w", p.p_max_w},
          {"energy_budget_j", p.energy_budget_j}};
}

/// Missing keys fall back to `base`, so partial documents act as overrides.
inline InstanceParams params_from_json(const nlohmann::json& j,
                                       InstanceParams base = paper_default_params()) {
  if (!j.is_object()) throw std::invalid_argument("instance document must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "gamma" && key != "C_bits" && key != "beta_s_sec" && key != "bandwidth_hz" &&
        key != "p_max_w" && key != "energy_budget_j")
      throw std::invalid_argument("instance document: unknown key '" + key + "'");
  }
  if (j.contains("gamma")) base.gamma = j.at("gamma").get<std::vector<double>>();
  if (j.contains("C_bits")) base.data_bits = j.at("C_bits").get<double>();
  if (j.contains("beta_s_sec")) base.beta_s = j.at("beta_s_sec").get<double>();
  if (j.contains("bandwidth_hz")) base.bandwidth_hz = j.at("bandwidth_hz").get<double>();
  if (j.contains("p_max_w")) base.p_max_w = j.at("p_max_w").get<double>();
  if (j.contains("energy_budget_j")) base.energy_budget_j = j.at("energy_budget_j").get<double>();
  return base;
}

inline ProblemInstance instance_from_json(const nlohmann::json& j) {
  return ProblemInstance(params_from_json(j));
}

}  // namespace coopsense
