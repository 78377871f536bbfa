#include "pgfn/env.hpp"

#include <cmath>

#include "pgfn/error.hpp"

namespace pgfn {

std::size_t StateHash::operator()(const State& s) const noexcept {
  std::size_t h = 0x9e3779b97f4a7c15ULL ^ static_cast<std::size_t>(s.depth);
  for (int c : s.cells) {
    h ^= static_cast<std::size_t>(c + 2) + 0x9e3779b97f4a7c15ULL + (h << 6) +
         (h >> 2);
  }
  return h;
}

State Environment::apply(const State& s, Action a) const {
  if (a.astar < 0 || a.astar >= n_astar() || a.aprime < 0 ||
      a.aprime >= n_aprime() || !is_valid(s, a)) {
    throw Error(Errc::IllegalAction,
                "action (" + std::to_string(a.astar) + "," +
                    std::to_string(a.aprime) + ") at state " + to_string(s));
  }
  return do_apply(s, a);
}

std::vector<Parent> Environment::parents(const State& s) const {
  if (s.depth == 0) throw Error(Errc::NoParent, "initial state");
  return do_parents(s);
}

double Environment::reward(const State& x) const {
  if (!is_terminal(x)) throw Error(Errc::NotTerminal, to_string(x));
  return do_reward(x);
}

std::string check_trajectory(const Environment& env, const Trajectory& tau) {
  if (tau.states.empty()) return "no states";
  if (tau.actions.size() + 1 != tau.states.size())
    return "len(actions) != len(states) - 1";
  if (!(tau.states.front() == env.initial())) return "does not start at s0";
  if (!env.is_terminal(tau.states.back())) return "does not end at a terminal";
  for (std::size_t i = 0; i < tau.actions.size(); ++i) {
    const State& s = tau.states[i];
    if (s.depth != static_cast<int>(i)) return "depth mismatch at " + std::to_string(i);
    if (!env.is_valid(s, tau.actions[i]))
      return "illegal action at step " + std::to_string(i);
    if (!(env.apply(s, tau.actions[i]) == tau.states[i + 1]))
      return "transition mismatch at step " + std::to_string(i);
  }
  if (!(tau.reward > 0.0) || !std::isfinite(tau.reward)) return "bad reward";
  if (tau.reward != env.reward(tau.states.back())) return "reward mismatch";
  return {};
}

}  // namespace pgfn
