#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "coopsense/model.hpp"

using namespace coopsense;
using Catch::Approx;

namespace {

ProblemInstance defaults() { return ProblemInstance(paper_default_params()); }

TransmissionPlan plan_at_max_power(const ProblemInstance& inst) {
  return TransmissionPlan::max_power(inst);
}

// Event-driven reference: a single channel is handed to the lowest-index UAV
// that has finished sensing and still has data, in index order.
double simulate_tdma(const std::vector<double>& sense_end, const std::vector<double>& tx_len,
                     double coop_len) {
  double clock = 0.0;
  for (std::size_t m = 0; m < sense_end.size(); ++m) {
    while (clock < sense_end[m]) clock = sense_end[m];
    clock += tx_len[m];
  }
  return clock + coop_len;
}

}  // namespace

TEST_CASE("instance sorts gains and remembers caller order") {
  auto p = paper_default_params();
  p.gamma = {1.5e4, 9e3, 1.2e4};
  ProblemInstance inst(p);
  CHECK(inst.gamma(0) == 9e3);
  CHECK(inst.gamma(2) == 1.5e4);
  CHECK(inst.order() == std::vector<std::size_t>{1, 2, 0});
  CHECK(inst.params().gamma[0] == 1.5e4);
}

TEST_CASE("instance rejects invalid parameters") {
  auto bad = [](auto mutate) {
    auto p = paper_default_params();
    mutate(p);
    return p;
  };
  CHECK_THROWS_AS(ProblemInstance(bad([](auto& p) { p.gamma.clear(); })), std::invalid_argument);
  CHECK_THROWS_AS(ProblemInstance(bad([](auto& p) { p.gamma[1] = 0.0; })), std::invalid_argument);
  CHECK_THROWS_AS(ProblemInstance(bad([](auto& p) { p.data_bits = 0.0; })), std::invalid_argument);
  CHECK_THROWS_AS(ProblemInstance(bad([](auto& p) { p.beta_s = -1.0; })), std::invalid_argument);
  CHECK_THROWS_AS(ProblemInstance(bad([](auto& p) { p.bandwidth_hz = 0.0; })), std::invalid_argument);
  CHECK_THROWS_AS(ProblemInstance(bad([](auto& p) { p.p_max_w = 0.0; })), std::invalid_argument);
  CHECK_THROWS_AS(ProblemInstance(bad([](auto& p) { p.energy_budget_j = 0.0; })),
                  std::invalid_argument);
  CHECK_NOTHROW(ProblemInstance(bad([](auto& p) { p.beta_s = 0.0; })));
}

TEST_CASE("allocation invariants") {
  CHECK_THROWS_AS(TaskAllocation({0.5}), std::invalid_argument);
  CHECK_THROWS_AS(TaskAllocation({-0.1, 1.1}), std::invalid_argument);
  CHECK_THROWS_AS(TaskAllocation({0.0, 0.5, 0.4}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(TaskAllocation({0.0, 0.6, 0.3}).validate(), std::invalid_argument);
  CHECK_NOTHROW(TaskAllocation({0.2, 0.3, 0.5}).validate());
  CHECK_NOTHROW(TaskAllocation::uniform_individual(3).validate());
}

TEST_CASE("timeline of the two-UAV hand example") {
  // beta = 10 s and C = 1 bit make the phase lengths easy to inject.
  ProblemInstance inst({{1.0, 1.0}, 1.0, 10.0, 1.0, 1.0, 1.0});
  TaskAllocation alloc({0.05, 0.05, 0.15});
  TransmissionPlan plan;
  plan.t_n = {3.0 / 0.05, 1.0 / 0.15};
  plan.t_c = 0.5 / 0.05;
  plan.p_n = {1.0, 1.0};
  plan.p_c = {0.0, 0.0};
  plan.E_c = {0.0, 0.0};
  const auto tl = evaluate_timeline(inst, alloc, plan);
  CHECK(tl.sense_end[0] == Approx(1.0));
  CHECK(tl.sense_end[1] == Approx(2.0));
  CHECK(tl.tx_start[1] == Approx(4.0));
  CHECK(tl.total_T == Approx(5.5).epsilon(1e-14));
}

TEST_CASE("timeline of a single UAV at full power") {
  auto p = paper_default_params();
  p.gamma = {9e3};
  ProblemInstance inst(p);
  TaskAllocation alloc({0.0, 1.0});
  const double t = 1.0 / (1e5 * std::log2(91.0));
  CHECK(t == Approx(1.5366e-6).epsilon(1e-4));
  const auto tl = evaluate_timeline(inst, alloc, plan_at_max_power(inst));
  CHECK(tl.total_T == Approx(2.0 + 2e7 * t).epsilon(1e-14));
  CHECK(tl.total_T == Approx(32.73).epsilon(1e-3));
}

TEST_CASE("uniform individual allocation at full power") {
  const auto inst = defaults();
  const auto alloc = TaskAllocation::uniform_individual(3);
  const auto plan = plan_at_max_power(inst);
  double expect = 2.0 / 3.0;
  for (double g : {9e3, 1.2e4, 1.5e4}) expect += (2e7 / 3.0) / (1e5 * std::log2(1.0 + 0.01 * g));
  const auto tl = evaluate_timeline(inst, alloc, plan);
  CHECK(tl.total_T == Approx(expect).epsilon(1e-13));
  CHECK(tl.total_T == Approx(29.756).epsilon(1e-4));
  CHECK(validate_solution(inst, alloc, plan).empty());
  CHECK(energy_consumption(inst, alloc, plan, 0) == Approx(0.10244).epsilon(1e-4));
}

TEST_CASE("budget override produces one energy violation per UAV") {
  const auto inst = defaults().with_energy_budget(0.05);
  const auto alloc = TaskAllocation::uniform_individual(3);
  const auto v = validate_solution(inst, alloc, plan_at_max_power(inst));
  REQUIRE(v.size() == 3);
  for (const auto& e : v) CHECK(e.name.rfind("energy", 0) == 0);
  CHECK(v[0].residual == Approx(0.0524).epsilon(1e-3));
}

TEST_CASE("full cooperative energy") {
  const auto inst = defaults();
  TaskAllocation alloc({1.0, 0.0, 0.0, 0.0});
  auto plan = plan_at_max_power(inst);
  CHECK(plan.t_c == Approx(1.177e-6).epsilon(1e-3));
  for (auto& e : plan.E_c) e = 2e7 * plan.t_c * 0.01;
  CHECK(energy_consumption(inst, alloc, plan, 1) == Approx(0.2354).epsilon(1e-3));
  plan.p_c.assign(3, 0.0);
  plan.p_n.assign(3, 0.0);
  CHECK(energy_consumption(inst, alloc, plan, 1) == 0.0);
  CHECK_THROWS_AS(energy_consumption(inst, alloc, plan, 3), std::out_of_range);
}

TEST_CASE("dimension mismatch") {
  const auto inst = defaults();
  TaskAllocation alloc({0.0, 0.5, 0.5});
  CHECK_THROWS_AS(evaluate_timeline(inst, alloc, plan_at_max_power(inst)), std::invalid_argument);
  CHECK(validate_solution(inst, alloc, plan_at_max_power(inst)).front().name == "dimension");
}

TEST_CASE("validate flags causality, power and ratio violations") {
  const auto inst = defaults();
  auto plan = plan_at_max_power(inst);
  // UAV 2 still sensing long after UAV 1 finished uploading a tiny share.
  TaskAllocation alloc({0.0, 0.001, 0.5, 0.499});
  auto v = validate_solution(inst, alloc, plan);
  CHECK(std::any_of(v.begin(), v.end(), [](auto& x) { return x.name == "causality[0]"; }));
  plan.p_n[2] = 0.02;
  TaskAllocation short_sum({0.0, 0.2, 0.3, 0.4});
  v = validate_solution(inst, short_sum, plan);
  CHECK(std::any_of(v.begin(), v.end(), [](auto& x) { return x.name == "power_n[2]"; }));
  CHECK(std::any_of(v.begin(), v.end(), [](auto& x) { return x.name == "ratio_sum"; }));
}

TEST_CASE("timeline matches an event simulation on random inputs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t M = 1 + trial % 6;
    std::vector<double> g(M);
    for (auto& x : g) x = 1e3 + 2e4 * u(rng);
    ProblemInstance inst({g, 1e6 * (1 + u(rng)), 10 * u(rng), 1e5, 0.01, 1.0});
    std::vector<double> w(M + 1);
    for (auto& x : w) x = u(rng);
    std::sort(w.begin() + 1, w.end());
    TaskAllocation alloc(w);
    TransmissionPlan plan = TransmissionPlan::max_power(inst);
    for (auto& t : plan.t_n) t *= 1 + 3 * u(rng);
    plan.t_c *= 1 + u(rng);
    const auto tl = evaluate_timeline(inst, alloc, plan);
    std::vector<double> se(M), len(M);
    for (std::size_t m = 0; m < M; ++m) {
      se[m] = (w[0] + w[m + 1]) * inst.beta_s();
      len[m] = w[m + 1] * inst.data_bits() * plan.t_n[m];
    }
    const double ref = simulate_tdma(se, len, w[0] * inst.data_bits() * plan.t_c);
    CHECK(std::fabs(tl.total_T - ref) <= 1e-12 * std::max(1.0, ref));
    for (std::size_t m = 0; m < M; ++m) CHECK(tl.tx_start[m] >= tl.sense_end[m]);
  }
}

TEST_CASE("timeline is monotone in ratios and times") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto inst = defaults();
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(4);
    for (auto& x : w) x = 0.3 * u(rng);
    auto plan = plan_at_max_power(inst);
    const double base = evaluate_timeline(inst, TaskAllocation(w), plan).total_T;
    for (std::size_t i = 0; i < 4; ++i) {
      auto w2 = w;
      w2[i] += 0.05 * u(rng);
      CHECK(evaluate_timeline(inst, TaskAllocation(w2), plan).total_T >= base);
    }
    for (std::size_t m = 0; m < 3; ++m) {
      auto p2 = plan;
      p2.t_n[m] *= 1.5;
      CHECK(evaluate_timeline(inst, TaskAllocation(w), p2).total_T >= base);
    }
    auto p3 = plan;
    p3.t_c *= 2;
    CHECK(evaluate_timeline(inst, TaskAllocation(w), p3).total_T >= base);
  }
}

TEST_CASE("energy equals its bit-time-power decomposition") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto inst = defaults();
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> w = {u(rng), u(rng), u(rng), u(rng)};
    TaskAllocation alloc(w);
    auto plan = plan_at_max_power(inst);
    for (auto& p : plan.p_n) p = 0.01 * u(rng);
    for (auto& p : plan.p_c) p = 0.01 * u(rng);
    for (std::size_t m = 0; m < 3; ++m) {
      const double bits_c = w[0] * 2e7, bits_n = w[m + 1] * 2e7;
      const double ref = bits_c * plan.t_c * plan.p_c[m] + bits_n * plan.t_n[m] * plan.p_n[m];
      CHECK(energy_consumption(inst, alloc, plan, m) == Approx(ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("instance JSON round trip") {
  const auto p = paper_default_params();
  const auto j = to_json(p);
  const auto back = params_from_json(j);
  CHECK(back.gamma == p.gamma);
  CHECK(back.energy_budget_j == p.energy_budget_j);
  CHECK(params_from_json(nlohmann::json{{"beta_s_sec", 5.0}}).beta_s == 5.0);
  CHECK_THROWS_AS(params_from_json(nlohmann::json{{"betas", 5.0}}), std::invalid_argument);
}
