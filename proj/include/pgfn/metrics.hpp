#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "pgfn/env.hpp"

namespace pgfn {

// Number of modes m with levenshtein(s, m) < d for some sample s.
int count_modes_bitseq(std::span<const std::string> samples, std::span<const std::string> modes,
                       int d);

// Cumulative mode discovery across a run; each mode is counted once.
class ModeTracker {
 public:
  virtual ~ModeTracker() = default;
  // Returns how many modes were found for the first time in this batch.
  virtual int observe(const Environment& env, std::span<const Trajectory> batch) = 0;
  virtual int total() const = 0;
  virtual std::unique_ptr<ModeTracker> clone() const = 0;
};

class BitSeqModeTracker final : public ModeTracker {
 public:
  BitSeqModeTracker(std::vector<std::string> modes, int distance);
  int observe(const Environment& env, std::span<const Trajectory> batch) override;
  int total() const override { return total_; }
  std::unique_ptr<ModeTracker> clone() const override;
  const std::vector<bool>& found() const { return found_; }

 private:
  std::vector<std::string> modes_;
  int distance_;
  std::vector<bool> found_;
  int total_ = 0;
};

// Distinct terminals with reward strictly above a threshold.
class ThresholdModeTracker final : public ModeTracker {
 public:
  explicit ThresholdModeTracker(double threshold) : threshold_(threshold) {}
  int observe(const Environment& env, std::span<const Trajectory> batch) override;
  int total() const override { return static_cast<int>(found_.size()); }
  std::unique_ptr<ModeTracker> clone() const override;

 private:
  double threshold_;
  std::unordered_set<std::string> found_;
};

// Mean reward of the k highest-reward distinct terminals seen so far.
class TopK {
 public:
  explicit TopK(int k = 100) : k_(k) {}
  void add(const std::string& key, double reward);
  void add(const Environment& env, std::span<const Trajectory> batch);
  double mean() const;
  std::size_t distinct() const { return seen_.size(); }

 private:
  int k_;
  std::unordered_set<std::string> seen_;
  std::multiset<double> top_;
};

// Same quantity over an explicit history of (distinct) rewards.
double r_topk(std::span<const double> rewards, int k);

}  // namespace pgfn
