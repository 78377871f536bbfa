#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pgfn/env.hpp"
#include "pgfn/policy.hpp"
#include "pgfn/region.hpp"

namespace pgfn {

inline constexpr std::size_t kDefaultStateBudget = 1'000'000;

struct Enumeration {
  std::vector<std::vector<State>> states_by_depth;
  std::vector<State> terminals;

  std::size_t total_states() const;
  std::vector<State> all_states() const;
};

// Breadth-first enumeration from s0 over restrict(mask, A(s)) (or A(s) with no
// mask), duplicate-free per depth, in first-discovery order. Throws
// BudgetExceeded once more than `budget` states are discovered.
Enumeration enumerate(const Environment& env, const RegionMask* mask = nullptr,
                      std::size_t budget = kDefaultStateBudget);

struct ExactTarget {
  std::vector<std::pair<std::string, double>> terminals;  // (terminal, reward)
  double z = 0.0;
  std::vector<double> probs;

  std::map<std::string, double> as_map() const;
};

ExactTarget exact_target(const Environment& env, const RegionMask* mask = nullptr,
                         std::size_t budget = kDefaultStateBudget);

// |S_l| (or exact |R_l| under a mask) for l = 0..max_depth.
std::vector<double> depth_profile(const Environment& env, const RegionMask* mask = nullptr,
                                  std::size_t budget = kDefaultStateBudget);

// Flows realizing P(x) proportional to R(x) under the uniform backward policy:
// F(x) = R(x); F(s -> s') = F(s') / |parents(s')|; F(s) = sum of outgoing edges.
struct ExactFlows {
  Enumeration space;
  std::unordered_map<State, double, StateHash> state_flow;
  // Per state: (logit index, edge flow) for every valid action.
  std::unordered_map<State, std::vector<std::pair<int, double>>, StateHash> edge_flow;
  double z = 0.0;
};

ExactFlows solve_exact_flows(const Environment& env, std::size_t budget = kDefaultStateBudget);

// A linear tabular policy whose heads reproduce `flows` exactly: logits and
// edge heads are log edge flows, the state-flow head is log F(s), log_z is
// log F(s0).
Policy exact_flow_policy(const Environment& env, const ExactFlows& flows);

// 0.5 * sum |p - q| over the union of supports. Throws BadDistribution when
// either side is not normalized within 1e-9.
double tv_distance(const std::map<std::string, double>& p, const std::map<std::string, double>& q);

}  // namespace pgfn
