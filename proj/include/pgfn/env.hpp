#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace pgfn {

// A factored move: `astar` is the state-agnostic component (the unit a region
// mask filters), `aprime` the state-dependent slot.
struct Action {
  int astar = 0;
  int aprime = 0;

  friend bool operator==(const Action&, const Action&) = default;
  friend auto operator<=>(const Action&, const Action&) = default;
};

// Environment-specific payload as a token vector. Unfilled slots hold -1.
struct State {
  std::vector<int> cells;
  int depth = 0;

  friend bool operator==(const State&, const State&) = default;
};

struct StateHash {
  std::size_t operator()(const State& s) const noexcept;
};

struct Parent {
  State state;
  Action action;
};

struct Trajectory {
  std::vector<State> states;
  std::vector<Action> actions;
  double reward = 0.0;

  const State& terminal() const { return states.back(); }
  std::size_t length() const { return actions.size(); }
};

// Deterministic sequential-construction environment. Public operations
// validate their preconditions and throw pgfn::Error; subclasses implement
// the unchecked do_* hooks.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual int n_astar() const = 0;
  virtual int n_aprime() const = 0;
  virtual int max_depth() const = 0;
  // Number of token slots and alphabet size used by the slot one-hot encoding.
  virtual int n_slots() const = 0;
  virtual int alphabet_size() const = 0;
  virtual std::string signature() const = 0;

  virtual State initial() const = 0;
  virtual bool is_terminal(const State& s) const = 0;
  virtual std::vector<Action> valid_actions(const State& s) const = 0;
  virtual bool is_valid(const State& s, Action a) const = 0;
  virtual std::string to_string(const State& s) const = 0;

  State apply(const State& s, Action a) const;
  std::vector<Parent> parents(const State& s) const;
  double reward(const State& x) const;

  int n_actions() const { return n_astar() * n_aprime(); }
  int action_index(Action a) const { return a.astar * n_aprime() + a.aprime; }
  Action action_at(int index) const {
    return Action{index / n_aprime(), index % n_aprime()};
  }

 protected:
  virtual State do_apply(const State& s, Action a) const = 0;
  virtual std::vector<Parent> do_parents(const State& s) const = 0;
  virtual double do_reward(const State& x) const = 0;
};

using EnvPtr = std::shared_ptr<const Environment>;

// Checks every Trajectory invariant; returns an empty string when valid,
// otherwise a description of the first violation.
std::string check_trajectory(const Environment& env, const Trajectory& tau);

}  // namespace pgfn
