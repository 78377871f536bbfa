#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pgfn/env.hpp"
#include "pgfn/metrics.hpp"
#include "pgfn/objectives.hpp"
#include "pgfn/planner.hpp"
#include "pgfn/policy.hpp"
#include "pgfn/region.hpp"
#include "pgfn/rng.hpp"

namespace pgfn {

struct LocalSearchConfig {
  int K = 1;  // backtrack depth
  int I = 0;  // refinement repetitions per trajectory
  int m = 16; // rollouts per round
};

// Throws BadSpec unless 1 <= K <= max_depth, I >= 0, m >= 1.
void validate(const LocalSearchConfig& cfg, const Environment& env);

// A contiguous piece of a trajectory: states.size() == actions.size() + 1.
struct PartialPath {
  std::vector<State> states;
  std::vector<Action> actions;
};

// Forward walker for batched masked sampling. `dead` is set when the region
// leaves a nonterminal state without actions.
struct Walker {
  PartialPath path;
  Rng* rng = nullptr;
  bool dead = false;
};

// Advances every walker to a terminal state, evaluating the policy once per
// step over all live walkers. Each walker draws only from its own stream, so
// the result does not depend on how walkers are grouped.
void advance_walkers(const Environment& env, const Policy& policy, const RegionMask& mask,
                     std::span<Walker> walkers, double eps_uniform);

// s0 to a terminal under the masked forward policy, reward attached.
// Throws DeadEnd.
Trajectory rollout(const Environment& env, const Policy& policy, const RegionMask& mask,
                   Rng& rng, double eps_uniform = 0.0);

// One rollout per stream; nullopt marks a walker that hit a dead end.
std::vector<std::optional<Trajectory>> rollout_batch(const Environment& env, const Policy& policy,
                                                     const RegionMask& mask,
                                                     std::span<Rng> rngs, double eps_uniform);

struct Backtrack {
  State anchor;
  std::vector<State> back_path;  // terminal first, anchor last
};

// K uniform parent steps. Throws DepthUnderflow when depth < K.
Backtrack backtrack_k(const Environment& env, const State& terminal, int K, Rng& rng);

// Masked forward sampling from anchor to a terminal. Throws DeadEnd.
PartialPath reconstruct_k(const Environment& env, const Policy& policy, const RegionMask& mask,
                          const State& anchor, Rng& rng, double eps_uniform = 0.0);

// Uniform parent walk from anchor down to s0 over all parents, returned in
// forward order.
PartialPath complete_backtrack(const Environment& env, const State& anchor, Rng& rng);

// prefix (s0..anchor) followed by suffix (anchor..x), reward attached.
Trajectory concatenate(const Environment& env, const PartialPath& prefix,
                       const PartialPath& suffix);

struct Refinement {
  Trajectory tau;
  std::size_t suffix_start = 0;  // index of the anchor within tau.states
};

// One backtrack / reconstruct / complete-backtrack pass. Returns the candidate
// whatever its reward; nullopt when reconstruction hit a dead end.
std::optional<Refinement> refine_once(const Environment& env, const Policy& policy,
                                      const RegionMask& mask, const Trajectory& tau, int K,
                                      Rng& rng, double eps_uniform = 0.0);

// cfg.I passes from tau, all drawing from rng in turn; keeps the candidates
// with strictly higher reward than tau.
std::vector<Trajectory> refine(const Environment& env, const Policy& policy,
                               const RegionMask& mask, const Trajectory& tau,
                               const LocalSearchConfig& cfg, Rng& rng,
                               double eps_uniform = 0.0);

// ---------------------------------------------------------------------------
// Training round
// ---------------------------------------------------------------------------

struct TrainConfig {
  ObjectiveConfig objective;
  RegionConfig region;
  LocalSearchConfig ls;
  int min_steps = 5;
  AvgSource avg_source = AvgSource::Diff;
  double eps_uniform = 0.05;
  std::uint64_t seed = 0;
};

struct RunState {
  EnvPtr env;
  Policy policy;
  OptimizerState opt;
  ScoreTable scores;
  DecisionState decision;
  RegionMask region;
  TrainConfig cfg;
  std::shared_ptr<ModeTracker> modes;
  TopK topk;
  long iteration = 0;
  long samples_total = 0;
  std::uint64_t regions_drawn = 0;
};

// Fresh planner and optimizer state; draws the first region.
RunState make_run_state(EnvPtr env, Policy policy, const TrainConfig& cfg, double lr,
                        double lr_log_z, std::shared_ptr<ModeTracker> modes, int topk);

// Next region from the current scores, on the "region" stream indexed by the
// number of regions drawn so far.
RegionMask draw_region(RunState& state);

struct IterationMetrics {
  long iter = 0;
  long samples_total = 0;
  double loss = 0.0;
  int modes_total = 0;
  int modes_new = 0;
  double r_topk = 0.0;
  std::uint64_t region_id = 0;
  bool switched = false;
  int top_astar = 0;
  bool aborted = false;
  double max_reward_sampled = 0.0;
  double max_reward_refined = 0.0;
  std::vector<Trajectory> sampled;
  std::vector<Refinement> accepted;
  std::vector<std::size_t> accepted_source;  // index into `sampled` per accepted entry
};

// Step A: m masked rollouts on streams ("rollout", iter, i). Step B: cfg.ls.I
// refinements of each on ("refine", iter, i, j). Step C: one optimizer step on
// the objective over sampled + accepted. Step D: score update on the sampled
// batch, mode bookkeeping, switching decision. A dead end in Step A skips
// training and forces a new region.
IterationMetrics training_round(RunState& state);

}  // namespace pgfn
