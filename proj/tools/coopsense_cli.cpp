#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coopsense/harness.hpp"

using namespace coopsense;

namespace {

enum Exit { kOk = 0, kError = 1, kInfeasible = 2, kNoConvergence = 3 };

struct InstanceFlags {
  std::string config;
  std::string preset;
  std::optional<double> beta_s, energy, p_max, epsilon;
  std::vector<double> gamma;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("-p,--preset", preset, "named preset")->check(CLI::IsMember(preset_names()));
    app->add_option("--beta-s", beta_s, "sensing workload in seconds");
    app->add_option("--energy-budget", energy, "per-UAV energy budget in J");
    app->add_option("--p-max", p_max, "maximum transmit power in W");
    app->add_option("--gamma", gamma, "channel gains, one per UAV");
    app->add_option("-e,--epsilon", epsilon, "relative optimality gap");
  }

  RunConfig resolve() const {
    RunConfig c = !config.empty() ? load_config(config) : !preset.empty() ? coopsense::preset(preset) : RunConfig{};
    if (beta_s) c.instance.beta_s = *beta_s;
    if (energy) c.instance.energy_budget_j = *energy;
    if (p_max) c.instance.p_max_w = *p_max;
    if (!gamma.empty()) c.instance.gamma = gamma;
    if (epsilon) c.epsilon = *epsilon;
    return c;
  }
};

void emit(const std::string& text, const std::string& output) {
  if (output.empty())
    std::cout << text;
  else
    write_file_atomic(output, text);
}

int report_exit(const SolveReport& r) { return r.converged ? kOk : kNoConvergence; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Completion-time minimization for cooperative UAV sensing and transmission"};
  app.require_subcommand(1);

  InstanceFlags flags;
  std::string output;
  bool no_verify = false;
  std::size_t threads = 0;
  std::string baseline_name, solution_file, bounding = "box";
  double grid_step = 0.02;

  auto* solve = app.add_subcommand("solve", "solve one instance and print the report as JSON");
  flags.attach(solve);
  solve->add_option("-o,--output", output, "write the report here");
  solve->add_flag("--no-verify", no_verify, "trust the necessity check without running the overlapped solver");

  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep and write CSV");
  flags.attach(sweep);
  sweep->add_option("-o,--output", output, "CSV path")->required();
  sweep->add_option("-j,--threads", threads, "worker threads (0: all cores)");

  auto* baseline = app.add_subcommand("baseline", "run one comparison scheme");
  baseline->add_option("name", baseline_name, "scheme")->required()->check(CLI::IsMember(baseline_names()));
  flags.attach(baseline);
  baseline->add_option("-o,--output", output, "write the report here");

  auto* check = app.add_subcommand("check", "validate a solution document");
  check->add_option("solution", solution_file, "JSON written by solve or baseline")
      ->required()
      ->check(CLI::ExistingFile);

  auto* oracle = app.add_subcommand("oracle", "exhaustive grid search (at most 3 UAVs)");
  flags.attach(oracle);
  oracle->add_option("--grid-step", grid_step, "grid step in [0.005, 0.1]");

  auto* trace = app.add_subcommand("trace", "print the outer-loop iteration log as CSV");
  flags.attach(trace);
  trace->add_option("--bounding", bounding, "lower bound per box")->check(CLI::IsMember({"box", "vertex"}));
  trace->add_option("-o,--output", output, "write the log here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) {
      std::ifstream f(solution_file);
      const auto doc = solution_from_json(nlohmann::json::parse(f));
      const ProblemInstance inst(doc.params);
      const auto v = validate_solution(inst, doc.allocation, doc.plan);
      for (const auto& x : v) std::printf("violation %s residual %.3e\n", x.name.c_str(), x.residual);
      std::printf("T_total %.17g\n%s\n", evaluate_timeline(inst, doc.allocation, doc.plan).total_T,
                  v.empty() ? "valid" : "invalid");
      return v.empty() ? kOk : kError;
    }

    const RunConfig cfg = flags.resolve();
    const ProblemInstance inst(cfg.instance);

    if (*solve) {
      AutoOptions opt;
      opt.verify_degenerate = !no_verify;
      const auto r = solve_auto(inst, cfg.epsilon, opt);
      emit(report_to_json(cfg.instance, r).dump(2) + "\n", output);
      return report_exit(r);
    }
    if (*baseline) {
      const auto r = run_baseline(baseline_name, inst);
      emit(report_to_json(cfg.instance, r).dump(2) + "\n", output);
      return report_exit(r);
    }
    if (*sweep) {
      if (!cfg.sweep) throw std::invalid_argument("sweep needs a config with a sweep block or a preset");
      SweepOptions so;
      so.epsilon = cfg.epsilon;
      so.threads = threads;
      const auto rows = run_sweep(*cfg.sweep, cfg.instance, so);
      write_csv(output, rows);
      std::cout << format_summary(rows);
      for (const auto& r : rows)
        if (r.status == RowStatus::nonconvergence || (r.status == RowStatus::ok && !r.report.converged))
          return kNoConvergence;
      return kOk;
    }
    if (*oracle) {
      const auto o = brute_force_oracle(inst, grid_step);
      std::printf("grid_points %zu\nfeasible_points %zu\nT_total %.17g\nomega", o.grid_points, o.feasible_points,
                  o.total_T);
      for (double w : o.allocation.ratios()) std::printf(" %.17g", w);
      std::printf("\n");
      return kOk;
    }
    if (*trace) {
      PolyblockTrace log;
      PolyblockSolveOptions opt;
      opt.trace = &log;
      opt.bounding = bounding == "vertex" ? PolyblockBounding::vertex_value : PolyblockBounding::box_minimum;
      const auto r = solve_polyblock(inst, cfg.epsilon, opt);
      std::string text = "iteration,cbv,lower_bound,vertices\n";
      char buf[128];
      for (const auto& it : log) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%zu\n", it.iteration, it.cbv, it.lower_bound,
                      it.vertex_count);
        text += buf;
      }
      emit(text, output);
      return report_exit(r);
    }
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kInfeasible;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "no convergence: %s\n", e.what());
    return kNoConvergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  }
  return kError;
}
