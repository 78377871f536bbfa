// Acceptance checks. One line per criterion:
//   criterion N: PASS|FAIL <measurements>
// Usage: acceptance [--criterion N]   (all criteria when omitted)
// Exit status is nonzero when any requested criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pgfn/error.hpp"
#include "pgfn/harness.hpp"
#include "pgfn/oracle.hpp"
#include "pgfn/tasks.hpp"

using namespace pgfn;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<EnvPtr> oracle_envs() {
  return {std::make_shared<ToyTreeEnv>(ToyTreeSpec{4, 3, "peaked", {}}),
          std::make_shared<BitSeqEnv>(BitSeqSpec{8, 4, {"11110000", "10100101", "00111100"}, 2})};
}

std::map<std::string, double> sample_law(const Environment& env, const Policy& pol, int n,
                                         std::uint64_t seed) {
  std::vector<Rng> rngs;
  rngs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rngs.push_back(Rng::stream(seed, "eval", {static_cast<std::uint64_t>(i)}));
  std::map<std::string, double> emp;
  for (const auto& t : rollout_batch(env, pol, RegionMask::full(env.n_astar()), rngs, 0.0))
    emp[env.to_string(t.value().terminal())] += 1.0;
  for (auto& [k, v] : emp) v /= n;
  return emp;
}

// ---------------------------------------------------------------------------

Verdict sampler_fidelity() {
  Verdict v{true, ""};
  for (const EnvPtr& env : oracle_envs()) {
    const auto t0 = std::chrono::steady_clock::now();
    auto enc = std::make_shared<SlotOneHotEncoder>(*env);
    Rng init = Rng::stream(11, "init");
    Policy pol{enc, PolicyParams::initialize(NetShape{enc->dim(), {64, 64}, env->n_actions()}, init)};
    TrainConfig cfg;
    cfg.ls = {1, 0, 16};
    cfg.seed = 11;
    RunState st = make_run_state(env, std::move(pol), cfg, 1e-3, 0.1, nullptr, 10);
    for (int it = 0; it < 20000; ++it) training_round(st);
    const double tv = tv_distance(sample_law(*env, st.policy, 50000, 12), exact_target(*env).as_map());
    const double secs = seconds_since(t0);
    const bool ok = tv <= 0.08 && secs <= 300.0;
    v.pass = v.pass && ok;
    v.detail += fmt("%s tv=%.4f (<=0.08) %.0fs; ", env->signature().c_str(), tv, secs);
  }
  return v;
}

Verdict exact_flow_zero_loss() {
  Verdict v{true, ""};
  for (const EnvPtr& env : oracle_envs()) {
    const Policy pol = exact_flow_policy(*env, solve_exact_flows(*env));
    Rng rng(5);
    std::vector<Trajectory> batch;
    for (int i = 0; i < 64; ++i)
      batch.push_back(rollout(*env, pol, RegionMask::full(env->n_astar()), rng, 0.5));
    double worst = 0.0;
    for (auto kind : {ObjectiveKind::FM, ObjectiveKind::DB, ObjectiveKind::TB, ObjectiveKind::SubTB}) {
      ObjectiveConfig oc;
      oc.kind = kind;
      worst = std::max(worst, objective_loss(*env, pol, batch, oc));
    }
    v.pass = v.pass && worst < 1e-8;
    v.detail += fmt("%s max_loss=%.2e; ", env->signature().c_str(), worst);
  }
  return v;
}

Verdict gradient_checks() {
  Verdict v{true, ""};
  for (auto kind : {ObjectiveKind::FM, ObjectiveKind::DB, ObjectiveKind::TB, ObjectiveKind::SubTB}) {
    ObjectiveConfig oc;
    oc.kind = kind;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 12; ++seed) worst = std::max(worst, gradcheck_instance(oc, seed));
    v.pass = v.pass && worst <= 1e-4;
    v.detail += fmt("%s=%.1e ", std::string(objective_name(kind)).c_str(), worst);
  }
  v.detail += "(12 instances each, <=1e-4)";
  return v;
}

Verdict region_size_law() {
  const auto t0 = std::chrono::steady_clock::now();
  ToyTreeEnv tree(ToyTreeSpec{4, 4, "constant", {}});
  Verdict v{true, ""};
  for (double p : {0.3, 0.5, 0.8}) {
    double worst = 0.0;
    for (const auto& row : region_stats(tree, p, 200, 4))
      if (row.depth >= 1) worst = std::max(worst, row.rel_err);
    v.pass = v.pass && worst <= 0.05;
    v.detail += fmt("p=%.1f max_rel_err=%.3f; ", p, worst);
  }
  const double secs = seconds_since(t0);
  v.pass = v.pass && secs <= 60.0;
  v.detail += fmt("(<=0.05) %.1fs", secs);
  return v;
}

Verdict decision_module() {
  // The literal rule, restated for an exhaustive comparison.
  auto literal = [](int step, int min_steps, double cur, double prev, double avg) {
    if (step < min_steps) return false;
    if (cur > avg || cur > prev) return false;
    if (cur + prev > 2.0 * avg) return false;
    return true;
  };
  int checked = 0, wrong = 0;
  auto expect = [&](bool got, bool want) {
    ++checked;
    wrong += got != want;
  };
  expect(decide_switch(2, 5, 0, 0, 2), false);
  expect(decide_switch(10, 5, 3, 0, 2), false);
  expect(decide_switch(10, 5, 0, 0, 2), true);
  expect(decide_switch(10, 5, 1, 4, 2), false);
  // Equalities never fire a guard.
  expect(decide_switch(5, 5, 0, 0, 0), true);
  expect(decide_switch(10, 5, 2, 2, 2), true);
  expect(decide_switch(10, 5, 1, 3, 2), true);
  expect(decide_switch(10, 5, 2, 3, 2), false);
  const double grid[] = {-2, -1, -0.5, 0, 0.5, 1, 2, 3, 4};
  for (int step : {0, 4, 5, 6, 20})
    for (double cur : grid)
      for (double prev : grid)
        for (double avg : grid) expect(decide_switch(step, 5, cur, prev, avg), literal(step, 5, cur, prev, avg));

  // should_switch on tracked history: the two latest differences and their mean.
  for (int trial = 0; trial < 200; ++trial) {
    Rng rng(static_cast<std::uint64_t>(trial));
    DecisionState ds;
    ds.min_steps = static_cast<int>(rng.below(4));
    ds.avg_source = trial % 2 ? AvgSource::His : AvgSource::Diff;
    std::vector<double> his;
    const int n = 1 + static_cast<int>(rng.below(8));
    for (int i = 0; i < n; ++i) {
      his.push_back(static_cast<double>(rng.below(4)));
      observe_iteration(ds, his.back());
    }
    bool want = false;
    if (n >= 2) {
      std::vector<double> diff{his[0]};
      for (int i = 1; i < n; ++i) diff.push_back(his[i] - his[i - 1]);
      const auto& src = ds.avg_source == AvgSource::His ? his : diff;
      double avg = 0.0;
      for (double x : src) avg += x;
      avg /= static_cast<double>(src.size());
      want = literal(ds.step, ds.min_steps, diff[n - 1], diff[n - 2], avg);
    }
    expect(should_switch(ds), want);
  }
  return {wrong == 0, fmt("%d/%d branch cases agree", checked - wrong, checked)};
}

Verdict local_search_validity() {
  Rng mode_rng = Rng::stream(0, "modes");
  auto env = std::make_shared<BitSeqEnv>(BitSeqSpec{16, 4, synth_modes(paper_basis(), 4, 16, mode_rng), 4});
  auto enc = std::make_shared<SlotOneHotEncoder>(*env);
  Rng init = Rng::stream(2, "init");
  Policy pol{enc, PolicyParams::initialize(NetShape{enc->dim(), {32, 32}, env->n_actions()}, init)};
  TrainConfig cfg;
  cfg.ls = {2, 4, 16};
  cfg.region.p = 0.5;
  cfg.seed = 2;
  RunState st = make_run_state(env, std::move(pol), cfg, 1e-3, 0.1, nullptr, 10);
  long attempts = 0, accepted = 0, bad = 0, decreases = 0;
  while (attempts < 10000) {
    const RegionMask region = st.region;
    const auto m = training_round(st);
    if (m.aborted) continue;
    attempts += static_cast<long>(m.sampled.size()) * cfg.ls.I;
    for (std::size_t a = 0; a < m.accepted.size(); ++a) {
      const Refinement& r = m.accepted[a];
      ++accepted;
      bool ok = check_trajectory(*env, r.tau).empty();
      for (std::size_t i = r.suffix_start; i < r.tau.actions.size(); ++i)
        ok = ok && region.allows(r.tau.actions[i].astar);
      ok = ok && r.tau.states[r.suffix_start].depth == r.tau.terminal().depth - cfg.ls.K;
      ok = ok && r.tau.reward > m.sampled[m.accepted_source[a]].reward;
      bad += !ok;
    }
    decreases += m.max_reward_refined < m.max_reward_sampled;
  }
  return {bad == 0 && decreases == 0 && accepted > 0,
          fmt("%ld refinements, %ld accepted, %ld invalid, %ld max-reward decreases", attempts,
              accepted, bad, decreases)};
}

}  // namespace

namespace {

RunConfig bitseq_run(int n, int n_modes, int distance, double p, int K, int I, std::uint64_t seed) {
  RunConfig c;
  c.task.kind = TaskKind::BitSeq;
  c.task.bitseq.n = n;
  c.task.bitseq.k = 4;
  c.task.bitseq.mode_distance = distance;
  c.task.n_modes = n_modes;
  c.task.mode_seed = seed;
  c.region.p = p;
  c.ls = {K, I, 16};
  c.seed = seed;
  c.lr = 1e-3;
  c.hidden = {32, 32};
  c.topk = 20;
  return c;
}

Verdict degeneration_identity() {
  RunConfig cfg = bitseq_run(16, 4, 4, 1.0, 1, 0, 9);
  cfg.iterations = 100;

  // Same config twice: identical CSV bytes.
  const auto first = run(cfg), second = run(cfg);
  const bool csv_same = log_csv(first.log) == log_csv(second.log) &&
                        planner_csv(first.log) == planner_csv(second.log);

  // A plain sampler loop: full-mask rollouts on the rollout streams, one
  // optimizer step per batch, no planner and no refinement.
  const EnvPtr env = make_env(cfg);
  Policy plain = make_policy(cfg, *env);
  OptimizerState opt = OptimizerState::for_params(plain.params, cfg.lr, cfg.lr_log_z);
  const RegionMask full = RegionMask::full(env->n_astar());

  RunState st = make_run_state(cfg);
  long mismatches = 0;
  for (std::uint64_t it = 0; it < 100; ++it) {
    std::vector<Trajectory> batch;
    for (std::uint64_t i = 0; i < 16; ++i) {
      Rng rng = Rng::stream(cfg.seed, "rollout", {it, i});
      batch.push_back(rollout(*env, plain, full, rng, cfg.eps_uniform));
    }
    const LossGrad lg = objective_gradient(*env, plain, batch, cfg.objective);
    adam_step(opt, plain.params, lg.grad);

    const auto m = training_round(st);
    bool same = !m.aborted && m.accepted.empty() && m.sampled.size() == batch.size() &&
                m.loss == lg.loss;
    for (std::size_t i = 0; same && i < batch.size(); ++i)
      same = m.sampled[i].states == batch[i].states && m.sampled[i].actions == batch[i].actions;
    mismatches += !same;
  }
  const bool params_same = st.policy.params.values() == plain.params.values();
  return {csv_same && mismatches == 0 && params_same,
          fmt("csv_identical=%d trajectory_mismatched_iterations=%ld/100 params_identical=%d",
              csv_same, mismatches, params_same)};
}

Verdict planner_convergence() {
  int first = 0;
  std::string ranks;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RunConfig cfg = bitseq_run(24, 8, default_mode_distance(24), 0.5, 2, 2, seed);
    cfg.iterations = 200;
    const auto res = run(cfg);
    const int r = res.state.scores.rank(15);
    first += r == 1;
    ranks += std::to_string(r) + (seed < 4 ? "," : "");
  }
  return {first >= 4, fmt("rank of 1111 per seed [%s], first in %d/5 (>=4)", ranks.c_str(), first)};
}

Verdict pls_benefit() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Variant {
    const char* name;
    double p;
    int I;
  };
  const Variant variants[] = {{"TB", 1.0, 0}, {"TB+P", 0.5, 0}, {"TB+LS", 1.0, 4}, {"TB+PLS", 0.5, 4}};
  std::map<std::string, double> med;
  std::string detail;
  for (const auto& v : variants) {
    std::vector<double> found, when;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      RunState st = make_run_state(bitseq_run(24, 8, 6, v.p, 2, v.I, seed));
      long last_gain = 0;
      while (st.samples_total < 200000)
        if (training_round(st).modes_new > 0) last_gain = st.samples_total;
      found.push_back(st.modes->total());
      when.push_back(static_cast<double>(last_gain));
    }
    med[v.name] = median(found);
    detail += fmt("%s=%g (last new mode at %.0f samples) ", v.name, med[v.name], median(when));
  }
  const bool ok = med["TB+P"] >= med["TB"] && med["TB+PLS"] >= med["TB+LS"];
  return {ok, fmt("median modes of 8: %s%.0fs", detail.c_str(), seconds_since(t0))};
}

Verdict reproducibility() {
  const fs::path root = fs::temp_directory_path() / "pgfn_acceptance_repro";
  fs::remove_all(root);
  int same = 0, total = 0;
  for (const char* name : {"toytree_tb", "bitseq16_pls", "pamdp6_fm"}) {
    const RunConfig cfg = load_config(fs::path(PGFN_CONFIG_DIR) / (std::string(name) + ".json"));
    run(cfg, root / name / "a");
    run(cfg, root / name / "b");
    for (const char* f : {"log.csv", "planner.csv", "checkpoint.json"}) {
      const std::string a = read_file(root / name / "a" / f);
      ++total;
      same += !a.empty() && a == read_file(root / name / "b" / f);
    }
  }
  fs::remove_all(root);
  return {same == total, fmt("%d/%d output files byte-identical over 3 configs", same, total)};
}

const std::map<int, std::function<Verdict()>> kCriteria = {
    {1, sampler_fidelity},      {2, exact_flow_zero_loss},  {3, gradient_checks},
    {4, region_size_law},       {5, decision_module},       {6, local_search_validity},
    {7, degeneration_identity}, {8, planner_convergence},   {9, pls_benefit},
    {10, reproducibility}};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      which.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
      return 2;
    }
  }
  if (which.empty())
    for (const auto& [n, f] : kCriteria) which.push_back(n);
  int failed = 0;
  for (int n : which) {
    const auto it = kCriteria.find(n);
    if (it == kCriteria.end()) {
      std::fprintf(stderr, "no criterion %d\n", n);
      return 2;
    }
    Verdict v;
    try {
      v = it->second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    std::printf("criterion %d: %s %s\n", n, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed ? 1 : 0;
}
