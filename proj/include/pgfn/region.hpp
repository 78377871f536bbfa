#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "pgfn/env.hpp"
#include "pgfn/rng.hpp"

namespace pgfn {

enum class SelectionMode { Bernoulli, Proportional };

struct RegionConfig {
  double p = 1.0;
  SelectionMode selection_mode = SelectionMode::Proportional;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
};

// Valid subset of the state-agnostic action components. Never empty.
struct RegionMask {
  std::vector<std::uint8_t> valid;
  std::uint64_t id = 0;

  static RegionMask full(int n_astar, std::uint64_t id = 0);
  bool allows(int astar) const { return valid[static_cast<std::size_t>(astar)] != 0; }
  int popcount() const;
  bool is_full() const { return popcount() == static_cast<int>(valid.size()); }
};

// Each entry independently valid with probability cfg.p; an empty draw is
// resampled wholesale.
RegionMask sample_bernoulli_region(int n_astar, const RegionConfig& cfg, Rng& rng,
                                   std::uint64_t id = 0);

// Keeps the actions whose a* is valid. Throws DeadEnd when a nonempty input
// filters to nothing.
std::vector<Action> restrict_actions(const RegionMask& mask, std::span<const Action> actions);

// Membership in the partial region: s0, or reachable from s0 using only
// mask-valid a* components. Memoizes over the backward search.
class RegionMembership {
 public:
  RegionMembership(const Environment& env, const RegionMask& mask);
  bool contains(const State& s);

 private:
  const Environment& env_;
  const RegionMask& mask_;
  std::unordered_map<State, bool, StateHash> memo_;
};

bool region_contains(const Environment& env, const RegionMask& mask, const State& s);

// sum_l p^l |S_l| / sum_l |S_l|.
double expected_ratio(double p, std::span<const double> sizes_by_depth);

struct OverlapStats {
  double expected_common = 0.0;
  double expected_intersection = 0.0;
  double expected_union = 0.0;
  double indicator = 0.0;
};

// Expected overlap between successive proportionally selected regions with
// per-index selection distributions p1, p2. Depth sums run over l = 1..max_l.
// The union's inner depth sum is evaluated at the outer depth index unless
// `literal_union` asks for the nested-sum form.
OverlapStats overlap_stats(std::span<const double> p1, std::span<const double> p2, double p,
                           int n, int max_l, const RegionConfig& cfg,
                           bool literal_union = false);

}  // namespace pgfn
