#include "pgfn/local_search.hpp"

#include <algorithm>
#include <string>

#include "pgfn/error.hpp"

namespace pgfn {

void validate(const LocalSearchConfig& cfg, const Environment& env) {
  if (cfg.K < 1 || cfg.K > env.max_depth())
    throw Error(Errc::BadSpec, "ls.K must lie in [1, " + std::to_string(env.max_depth()) + "]");
  if (cfg.I < 0) throw Error(Errc::BadSpec, "ls.I must be >= 0");
  if (cfg.m < 1) throw Error(Errc::BadSpec, "ls.batch must be >= 1");
}

void advance_walkers(const Environment& env, const Policy& policy, const RegionMask& mask,
                     std::span<Walker> walkers, double eps_uniform) {
  std::vector<Walker*> live;
  std::vector<State> states;
  std::vector<int> allowed;
  while (true) {
    live.clear();
    states.clear();
    for (Walker& w : walkers) {
      if (w.dead || env.is_terminal(w.path.states.back())) continue;
      live.push_back(&w);
      states.push_back(w.path.states.back());
    }
    if (live.empty()) return;
    const Matrix head =
        policy_forward_batch(policy.params, encode_batch(*policy.encoder, states));
    const auto n_actions = static_cast<std::size_t>(env.n_actions());
    for (std::size_t r = 0; r < live.size(); ++r) {
      Walker& w = *live[r];
      std::vector<Action> actions;
      try {
        actions = restrict_actions(mask, env.valid_actions(states[r]));
      } catch (const Error& e) {
        if (e.code() != Errc::DeadEnd) throw;
        w.dead = true;
        continue;
      }
      allowed.clear();
      for (const Action& a : actions) allowed.push_back(env.action_index(a));
      std::sort(allowed.begin(), allowed.end());
      const auto logits = head.row(static_cast<int>(r)).subspan(0, n_actions);
      const auto logprobs = masked_log_softmax(logits, allowed);
      const Action a = env.action_at(sample_action(logprobs, *w.rng, eps_uniform));
      w.path.states.push_back(env.apply(states[r], a));
      w.path.actions.push_back(a);
    }
  }
}

namespace {

PartialPath walk_one(const Environment& env, const Policy& policy, const RegionMask& mask,
                     const State& start, Rng& rng, double eps_uniform) {
  Walker w{PartialPath{{start}, {}}, &rng, false};
  advance_walkers(env, policy, mask, std::span<Walker>(&w, 1), eps_uniform);
  if (w.dead)
    throw Error(Errc::DeadEnd,
                "region leaves no action at " + env.to_string(w.path.states.back()));
  return std::move(w.path);
}

Trajectory to_trajectory(const Environment& env, PartialPath&& path) {
  Trajectory tau{std::move(path.states), std::move(path.actions), 0.0};
  tau.reward = env.reward(tau.terminal());
  return tau;
}

}  // namespace

Trajectory rollout(const Environment& env, const Policy& policy, const RegionMask& mask,
                   Rng& rng, double eps_uniform) {
  return to_trajectory(env, walk_one(env, policy, mask, env.initial(), rng, eps_uniform));
}

std::vector<std::optional<Trajectory>> rollout_batch(const Environment& env, const Policy& policy,
                                                     const RegionMask& mask,
                                                     std::span<Rng> rngs, double eps_uniform) {
  std::vector<Walker> walkers;
  walkers.reserve(rngs.size());
  for (Rng& rng : rngs) walkers.push_back(Walker{PartialPath{{env.initial()}, {}}, &rng, false});
  advance_walkers(env, policy, mask, walkers, eps_uniform);
  std::vector<std::optional<Trajectory>> out;
  out.reserve(walkers.size());
  for (Walker& w : walkers) {
    if (w.dead)
      out.emplace_back(std::nullopt);
    else
      out.emplace_back(to_trajectory(env, std::move(w.path)));
  }
  return out;
}

Backtrack backtrack_k(const Environment& env, const State& terminal, int K, Rng& rng) {
  if (K < 0 || terminal.depth < K)
    throw Error(Errc::DepthUnderflow, "cannot backtrack " + std::to_string(K) +
                                          " steps from depth " + std::to_string(terminal.depth));
  Backtrack bt{terminal, {terminal}};
  for (int step = 0; step < K; ++step) {
    auto parents = env.parents(bt.anchor);
    bt.anchor = std::move(parents[rng.below(parents.size())].state);
    bt.back_path.push_back(bt.anchor);
  }
  return bt;
}

PartialPath reconstruct_k(const Environment& env, const Policy& policy, const RegionMask& mask,
                          const State& anchor, Rng& rng, double eps_uniform) {
  return walk_one(env, policy, mask, anchor, rng, eps_uniform);
}

PartialPath complete_backtrack(const Environment& env, const State& anchor, Rng& rng) {
  PartialPath path{{anchor}, {}};
  State s = anchor;
  while (s.depth > 0) {
    auto parents = env.parents(s);
    Parent& chosen = parents[rng.below(parents.size())];
    path.actions.push_back(chosen.action);
    s = std::move(chosen.state);
    path.states.push_back(s);
  }
  std::reverse(path.states.begin(), path.states.end());
  std::reverse(path.actions.begin(), path.actions.end());
  return path;
}

Trajectory concatenate(const Environment& env, const PartialPath& prefix,
                       const PartialPath& suffix) {
  if (prefix.states.back() != suffix.states.front())
    throw Error(Errc::IllegalAction, "prefix and suffix do not meet");
  PartialPath joined = prefix;
  joined.states.insert(joined.states.end(), suffix.states.begin() + 1, suffix.states.end());
  joined.actions.insert(joined.actions.end(), suffix.actions.begin(), suffix.actions.end());
  return to_trajectory(env, std::move(joined));
}

namespace {

// The three draws of a refinement pass, split so Step B can batch the
// forward phase across passes without changing any stream's draw order.
struct PendingRefinement {
  std::size_t source = 0;
  Rng rng;
  Backtrack bt;
};

}  // namespace

std::optional<Refinement> refine_once(const Environment& env, const Policy& policy,
                                      const RegionMask& mask, const Trajectory& tau, int K,
                                      Rng& rng, double eps_uniform) {
  Backtrack bt = backtrack_k(env, tau.terminal(), K, rng);
  PartialPath suffix;
  try {
    suffix = reconstruct_k(env, policy, mask, bt.anchor, rng, eps_uniform);
  } catch (const Error& e) {
    if (e.code() != Errc::DeadEnd) throw;
    return std::nullopt;
  }
  PartialPath prefix = complete_backtrack(env, bt.anchor, rng);
  const std::size_t start = prefix.states.size() - 1;
  return Refinement{concatenate(env, prefix, suffix), start};
}

std::vector<Trajectory> refine(const Environment& env, const Policy& policy,
                               const RegionMask& mask, const Trajectory& tau,
                               const LocalSearchConfig& cfg, Rng& rng, double eps_uniform) {
  std::vector<Trajectory> out;
  for (int j = 0; j < cfg.I; ++j) {
    auto r = refine_once(env, policy, mask, tau, cfg.K, rng, eps_uniform);
    if (r && r->tau.reward > tau.reward) out.push_back(std::move(r->tau));
  }
  return out;
}

RunState make_run_state(EnvPtr env, Policy policy, const TrainConfig& cfg, double lr,
                        double lr_log_z, std::shared_ptr<ModeTracker> modes, int topk) {
  validate(cfg.ls, *env);
  RunState s;
  s.opt = OptimizerState::for_params(policy.params, lr, lr_log_z);
  s.scores = ScoreTable(env->n_astar());
  s.decision.min_steps = cfg.min_steps;
  s.decision.avg_source = cfg.avg_source;
  s.cfg = cfg;
  s.modes = std::move(modes);
  s.topk = TopK(topk);
  s.env = std::move(env);
  s.policy = std::move(policy);
  s.region = draw_region(s);
  return s;
}

RegionMask draw_region(RunState& state) {
  const std::uint64_t id = state.regions_drawn++;
  Rng rng = Rng::stream(state.cfg.seed, "region", {id});
  if (state.cfg.region.selection_mode == SelectionMode::Bernoulli)
    return sample_bernoulli_region(state.env->n_astar(), state.cfg.region, rng, id);
  return select_region(state.scores, state.cfg.region, rng, id);
}

IterationMetrics training_round(RunState& state) {
  const Environment& env = *state.env;
  const TrainConfig& cfg = state.cfg;
  const auto iter = static_cast<std::uint64_t>(state.iteration);
  const auto m = static_cast<std::size_t>(cfg.ls.m);
  IterationMetrics out;
  out.iter = state.iteration;

  // Step A
  std::vector<Rng> rollout_rngs;
  rollout_rngs.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    rollout_rngs.push_back(Rng::stream(cfg.seed, "rollout", {iter, i}));
  auto sampled = rollout_batch(env, state.policy, state.region, rollout_rngs, cfg.eps_uniform);
  state.samples_total += static_cast<long>(m);
  const bool dead = std::any_of(sampled.begin(), sampled.end(),
                                [](const auto& t) { return !t.has_value(); });
  if (dead) {
    out.aborted = true;
    state.region = draw_region(state);
    state.decision.step = 0;
    ++state.iteration;
    out.samples_total = state.samples_total;
    out.modes_total = state.modes ? state.modes->total() : 0;
    out.r_topk = state.topk.mean();
    out.region_id = state.region.id;
    out.switched = true;
    out.top_astar = state.scores.top();
    return out;
  }
  for (auto& t : sampled) out.sampled.push_back(std::move(*t));
  for (const auto& t : out.sampled) out.max_reward_sampled = std::max(out.max_reward_sampled, t.reward);

  // Step B
  const auto reps = static_cast<std::size_t>(cfg.ls.I);
  std::vector<PendingRefinement> pending;
  pending.reserve(m * reps);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < reps; ++j) {
      PendingRefinement p{i, Rng::stream(cfg.seed, "refine", {iter, i, j}), {}};
      p.bt = backtrack_k(env, out.sampled[i].terminal(), cfg.ls.K, p.rng);
      pending.push_back(std::move(p));
    }
  }
  std::vector<Walker> walkers;
  walkers.reserve(pending.size());
  for (auto& p : pending) walkers.push_back(Walker{PartialPath{{p.bt.anchor}, {}}, &p.rng, false});
  advance_walkers(env, state.policy, state.region, walkers, cfg.eps_uniform);
  state.samples_total += static_cast<long>(pending.size());
  for (std::size_t n = 0; n < pending.size(); ++n) {
    if (walkers[n].dead) continue;
    PendingRefinement& p = pending[n];
    PartialPath prefix = complete_backtrack(env, p.bt.anchor, p.rng);
    Refinement r{concatenate(env, prefix, walkers[n].path), prefix.states.size() - 1};
    if (r.tau.reward > out.sampled[p.source].reward) {
      out.accepted.push_back(std::move(r));
      out.accepted_source.push_back(p.source);
    }
  }

  std::vector<Trajectory> batch = out.sampled;
  for (const auto& r : out.accepted) batch.push_back(r.tau);
  out.max_reward_refined = out.max_reward_sampled;
  for (const auto& r : out.accepted)
    out.max_reward_refined = std::max(out.max_reward_refined, r.tau.reward);

  const int fresh = state.modes ? state.modes->observe(env, batch) : 0;
  state.topk.add(env, batch);

  // Step C
  const LossGrad lg = objective_gradient(env, state.policy, batch, cfg.objective);
  adam_step(state.opt, state.policy.params, lg.grad);

  // Step D
  update_scores(state.scores, out.sampled);
  observe_iteration(state.decision, static_cast<double>(fresh));
  out.switched = should_switch(state.decision);
  if (out.switched) {
    state.region = draw_region(state);
    state.decision.step = 0;
  }
  ++state.iteration;

  out.samples_total = state.samples_total;
  out.loss = lg.loss;
  out.modes_total = state.modes ? state.modes->total() : 0;
  out.modes_new = fresh;
  out.r_topk = state.topk.mean();
  out.region_id = state.region.id;
  out.top_astar = state.scores.top();
  return out;
}

}  // namespace pgfn
