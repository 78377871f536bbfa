#include "pgfn/metrics.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "pgfn/error.hpp"
#include "pgfn/tasks.hpp"

namespace pgfn {

int count_modes_bitseq(std::span<const std::string> samples, std::span<const std::string> modes,
                       int d) {
  int count = 0;
  for (const auto& m : modes) {
    for (const auto& s : samples) {
      if (levenshtein(s, m) < d) {
        ++count;
        break;
      }
    }
  }
  return count;
}

BitSeqModeTracker::BitSeqModeTracker(std::vector<std::string> modes, int distance)
    : modes_(std::move(modes)), distance_(distance), found_(modes_.size(), false) {}

int BitSeqModeTracker::observe(const Environment& env, std::span<const Trajectory> batch) {
  if (total_ == static_cast<int>(modes_.size())) return 0;
  std::vector<std::string> samples;
  samples.reserve(batch.size());
  for (const auto& tau : batch) samples.push_back(env.to_string(tau.terminal()));
  int fresh = 0;
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (found_[i]) continue;
    for (const auto& s : samples) {
      if (levenshtein(s, modes_[i]) < distance_) {
        found_[i] = true;
        ++fresh;
        break;
      }
    }
  }
  total_ += fresh;
  return fresh;
}

std::unique_ptr<ModeTracker> BitSeqModeTracker::clone() const {
  return std::make_unique<BitSeqModeTracker>(*this);
}

int ThresholdModeTracker::observe(const Environment& env, std::span<const Trajectory> batch) {
  int fresh = 0;
  for (const auto& tau : batch)
    if (tau.reward > threshold_ && found_.insert(env.to_string(tau.terminal())).second) ++fresh;
  return fresh;
}

std::unique_ptr<ModeTracker> ThresholdModeTracker::clone() const {
  return std::make_unique<ThresholdModeTracker>(*this);
}

void TopK::add(const std::string& key, double reward) {
  if (k_ < 1) throw Error(Errc::BadSpec, "top-k requires k >= 1");
  if (!seen_.insert(key).second) return;
  if (static_cast<int>(top_.size()) < k_) {
    top_.insert(reward);
  } else if (reward > *top_.begin()) {
    top_.erase(top_.begin());
    top_.insert(reward);
  }
}

void TopK::add(const Environment& env, std::span<const Trajectory> batch) {
  for (const auto& tau : batch) add(env.to_string(tau.terminal()), tau.reward);
}

double TopK::mean() const {
  if (top_.empty()) return 0.0;
  return std::accumulate(top_.begin(), top_.end(), 0.0) / static_cast<double>(top_.size());
}

double r_topk(std::span<const double> rewards, int k) {
  if (k < 1) throw Error(Errc::BadSpec, "top-k requires k >= 1");
  if (rewards.empty()) return 0.0;
  std::vector<double> sorted(rewards.begin(), rewards.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t n = std::min(sorted.size(), static_cast<std::size_t>(k));
  // Ascending summation order matches TopK::mean.
  return std::accumulate(sorted.rend() - static_cast<long>(n), sorted.rend(), 0.0) /
         static_cast<double>(n);
}

}  // namespace pgfn
