#include "pgfn/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pgfn/error.hpp"

namespace pgfn {

std::vector<double> ScoreTable::scores() const {
  std::vector<double> out(hr.size());
  for (int i = 0; i < size(); ++i) out[i] = score(i);
  return out;
}

int ScoreTable::top() const {
  int best = 0;
  for (int i = 1; i < size(); ++i)
    if (score(i) > score(best)) best = i;
  return best;
}

int ScoreTable::rank(int i) const {
  const double s = score(i);
  int better = 0;
  for (int j = 0; j < size(); ++j)
    if (score(j) > s) ++better;
  return better + 1;
}

void update_scores(ScoreTable& table, std::span<const Trajectory> batch) {
  for (const Trajectory& tau : batch) {
    for (const Action& a : tau.actions) {
      table.hr[a.astar] += tau.reward;
      table.cnt[a.astar] += 1.0;
    }
  }
}

std::vector<double> action_distribution(const ScoreTable& table) {
  std::vector<double> p = table.scores();
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= total;
  return p;
}

RegionMask select_region(const ScoreTable& table, const RegionConfig& cfg, Rng& rng,
                         std::uint64_t id) {
  const int n = table.size();
  if (n < 1) throw Error(Errc::BadSpec, "empty score table");
  const int draws =
      std::clamp(static_cast<int>(std::lround(cfg.p * static_cast<double>(n))), 1, n);
  std::vector<double> weight = action_distribution(table);
  RegionMask mask{std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0), id};
  for (int d = 0; d < draws; ++d) {
    double total = 0.0;
    for (int i = 0; i < n; ++i)
      if (!mask.valid[i]) total += weight[i];
    double u = rng.uniform() * total;
    int pick = -1;
    for (int i = 0; i < n; ++i) {
      if (mask.valid[i]) continue;
      pick = i;
      u -= weight[i];
      if (u < 0.0) break;
    }
    mask.valid[pick] = 1;
  }
  return mask;
}

void observe_iteration(DecisionState& ds, double new_modes) {
  if (ds.his.empty())
    ds.diff.push_back(new_modes);
  else
    ds.diff.push_back(new_modes - ds.his.back());
  ds.his.push_back(new_modes);
  ++ds.iter;
  ++ds.step;
}

bool decide_switch(int step, int min_steps, double current, double previous, double avg) {
  if (step < min_steps) return false;
  if (current > avg || current > previous) return false;
  if (current + previous > 2.0 * avg) return false;
  return true;
}

double history_average(const DecisionState& ds) {
  const auto& src = ds.avg_source == AvgSource::Diff ? ds.diff : ds.his;
  if (src.empty()) return 0.0;
  return std::accumulate(src.begin(), src.end(), 0.0) / static_cast<double>(src.size());
}

bool should_switch(const DecisionState& ds) {
  if (ds.step < ds.min_steps) return false;
  if (ds.diff.size() < 2) return false;
  const std::size_t cur = ds.diff.size() - 1;
  return decide_switch(ds.step, ds.min_steps, ds.diff[cur], ds.diff[cur - 1],
                       history_average(ds));
}

}  // namespace pgfn
