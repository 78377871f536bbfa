// pgfn: train, inspect and verify partial GFlowNet runs.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pgfn/error.hpp"
#include "pgfn/harness.hpp"
#include "pgfn/oracle.hpp"
#include "pgfn/planner.hpp"

using namespace pgfn;

namespace {

int cmd_train(const std::string& config, const std::string& out) {
  const RunConfig cfg = load_config(config);
  const RunResult r = run(cfg, std::filesystem::path(out));
  const auto& rows = r.log.rows;
  std::cerr << "iterations=" << rows.size()
            << " modes_total=" << (rows.empty() ? 0 : rows.back().modes_total)
            << " r_topk=" << format_double(rows.empty() ? 0.0 : rows.back().r_topk) << "\n";
  return 0;
}

int cmd_enumerate(const std::string& config, std::size_t budget) {
  const RunConfig cfg = load_config(config);
  const EnvPtr env = make_env(cfg);
  const ExactTarget t = exact_target(*env, nullptr, budget);
  std::cout << "sequence,reward,prob\n";
  for (std::size_t i = 0; i < t.terminals.size(); ++i)
    std::cout << t.terminals[i].first << ',' << format_double(t.terminals[i].second) << ','
              << format_double(t.probs[i]) << '\n';
  return 0;
}

int cmd_region_stats(const std::string& config, int masks, std::uint64_t seed) {
  const RunConfig cfg = load_config(config);
  const EnvPtr env = make_env(cfg);
  std::cout << "depth,expected_size,mc_mean_size,rel_err\n";
  for (const auto& r : region_stats(*env, cfg.region.p, masks, seed))
    std::cout << r.depth << ',' << format_double(r.expected_size) << ','
              << format_double(r.mc_mean_size) << ',' << format_double(r.rel_err) << '\n';

  // Overlap between two successive proportional regions under fresh scores.
  const ScoreTable fresh(env->n_astar());
  const auto p1 = action_distribution(fresh);
  const OverlapStats o =
      overlap_stats(p1, p1, cfg.region.p, env->n_astar(), env->max_depth(), cfg.region);
  std::cerr << "expected_common=" << format_double(o.expected_common)
            << " expected_intersection=" << format_double(o.expected_intersection)
            << " expected_union=" << format_double(o.expected_union)
            << " indicator=" << format_double(o.indicator) << '\n';
  return 0;
}

int cmd_gradcheck(const std::string& objective, int instances, std::uint64_t seed, double tol) {
  ObjectiveConfig cfg;
  cfg.kind = parse_objective_kind(objective);
  std::cout << "objective,instance,max_rel_err\n";
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    const double err = gradcheck_instance(cfg, seed + static_cast<std::uint64_t>(i));
    worst = std::max(worst, err);
    std::cout << objective << ',' << i << ',' << format_double(err) << '\n';
  }
  return worst <= tol ? 0 : 1;
}

int cmd_modes(const std::string& log) {
  const LogSummary s = summarize_log(log);
  std::cout << "rows=" << s.rows << " modes_total=" << s.modes_total
            << " modes_new_sum=" << s.modes_new_sum << " r_topk=" << format_double(s.r_topk)
            << '\n';
  return s.modes_new_sum == s.modes_total ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partial GFlowNet trainer"};
  app.require_subcommand(1);

  std::string config, out = "run", objective, log;
  std::size_t budget = kDefaultStateBudget;
  int masks = 200, instances = 10;
  std::uint64_t seed = 0;
  double tol = 1e-4;

  auto* train = app.add_subcommand("train", "Run training rounds from a config");
  train->add_option("--config", config, "JSON run config")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "Output directory for log.csv, planner.csv, checkpoint.json");

  auto* enumerate_cmd = app.add_subcommand("enumerate", "Exact terminal distribution as CSV");
  enumerate_cmd->add_option("--config", config)->required()->check(CLI::ExistingFile);
  enumerate_cmd->add_option("--budget", budget, "State budget");

  auto* stats = app.add_subcommand("region-stats", "Region size by depth, expected vs sampled");
  stats->add_option("--config", config)->required()->check(CLI::ExistingFile);
  stats->add_option("--masks", masks, "Bernoulli masks to average")->check(CLI::PositiveNumber);
  stats->add_option("--seed", seed);

  auto* grad = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradients");
  grad->add_option("--objective", objective)
      ->required()
      ->check(CLI::IsMember({"fm", "db", "tb", "subtb"}));
  grad->add_option("--instances", instances)->check(CLI::PositiveNumber);
  grad->add_option("--seed", seed);
  grad->add_option("--tol", tol, "Maximum relative error");

  auto* modes = app.add_subcommand("modes", "Summarize the mode columns of a run log");
  modes->add_option("--log", log)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config, out);
    if (*enumerate_cmd) return cmd_enumerate(config, budget);
    if (*stats) return cmd_region_stats(config, masks, seed);
    if (*grad) return cmd_gradcheck(objective, instances, seed, tol);
    if (*modes) return cmd_modes(log);
  } catch (const Error& e) {
    std::cerr << "pgfn: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
