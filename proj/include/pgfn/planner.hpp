#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pgfn/env.hpp"
#include "pgfn/region.hpp"
#include "pgfn/rng.hpp"

namespace pgfn {

// Historical reward sums and occurrence counts per a*.
struct ScoreTable {
  static constexpr double kInit = 0.01;

  std::vector<double> hr;
  std::vector<double> cnt;

  explicit ScoreTable(int n_astar = 0)
      : hr(static_cast<std::size_t>(n_astar), kInit),
        cnt(static_cast<std::size_t>(n_astar), kInit) {}

  int size() const { return static_cast<int>(hr.size()); }
  double score(int i) const { return (hr[i] + 1.0) / cnt[i]; }
  std::vector<double> scores() const;
  // Index of the highest score; ties go to the lowest index.
  int top() const;
  // 1-based rank of index i by descending score (ties share the better rank).
  int rank(int i) const;
};

// One increment per occurrence of each a* in each trajectory.
void update_scores(ScoreTable& table, std::span<const Trajectory> batch);

// p(i) = score(i) / sum_j score(j).
std::vector<double> action_distribution(const ScoreTable& table);

// Draws max(1, round(p * n)) distinct indices by weighted sampling without
// replacement under action_distribution(table).
RegionMask select_region(const ScoreTable& table, const RegionConfig& cfg, Rng& rng,
                         std::uint64_t id = 0);

enum class AvgSource { Diff, His };

struct DecisionState {
  int min_steps = 5;
  int step = 0;
  int iter = 0;
  std::vector<double> his;   // newly found modes per iteration
  std::vector<double> diff;  // difference array of his
  AvgSource avg_source = AvgSource::Diff;
};

// Appends to his, extends diff, increments iter and step.
void observe_iteration(DecisionState& ds, double new_modes);

// The switching rule on explicit inputs: `current` and `previous` are the two
// latest difference-array entries.
bool decide_switch(int step, int min_steps, double current, double previous, double avg);

// Applies decide_switch to the two latest entries of ds. Returns false until
// two iterations have been observed.
bool should_switch(const DecisionState& ds);

double history_average(const DecisionState& ds);

}  // namespace pgfn
