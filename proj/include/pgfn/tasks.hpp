#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pgfn/env.hpp"
#include "pgfn/rng.hpp"

namespace pgfn {

// Unit-cost edit distance (insert, delete, substitute).
int levenshtein(std::string_view a, std::string_view b);

// ---------------------------------------------------------------------------
// k-bit fill binary sequences. a* picks a k-bit word, a' an unfilled position.
// ---------------------------------------------------------------------------

struct BitSeqSpec {
  int n = 16;
  int k = 4;
  std::vector<std::string> modes;
  // A mode counts as found when some sample is at edit distance < this.
  int mode_distance = 4;
};

// max over modes of exp(-levenshtein(x, m)).
double bitseq_reward(const BitSeqSpec& spec, std::string_view x);

// round(28 * n / 120), keeping the full-scale distance/length ratio.
int default_mode_distance(int n);

class BitSeqEnv final : public Environment {
 public:
  explicit BitSeqEnv(BitSeqSpec spec);

  int n_astar() const override { return 1 << spec_.k; }
  int n_aprime() const override { return positions_; }
  int max_depth() const override { return positions_; }
  int n_slots() const override { return positions_; }
  int alphabet_size() const override { return 1 << spec_.k; }
  std::string signature() const override;

  State initial() const override;
  bool is_terminal(const State& s) const override { return s.depth == positions_; }
  std::vector<Action> valid_actions(const State& s) const override;
  bool is_valid(const State& s, Action a) const override;
  // Bits per position, '.' for unfilled bits.
  std::string to_string(const State& s) const override;

  const BitSeqSpec& spec() const { return spec_; }
  std::string word_bits(int word) const;
  // Parses a complete bit string into a terminal state.
  State from_bits(std::string_view bits) const;

 protected:
  State do_apply(const State& s, Action a) const override;
  std::vector<Parent> do_parents(const State& s) const override;
  double do_reward(const State& x) const override;

 private:
  BitSeqSpec spec_;
  int positions_;
};

// Concatenations of draws from `basis`; duplicates are redrawn.
std::vector<std::string> synth_modes(const std::vector<std::string>& basis,
                                     int count, int n, Rng& rng);

// Basis strings used for the score-convergence experiment.
const std::vector<std::string>& paper_basis();

std::vector<std::string> load_modes(const std::string& path);

// ---------------------------------------------------------------------------
// Prepend/append nucleotide sequences (A, C, G, U).
// ---------------------------------------------------------------------------

struct PamdpSpec {
  int length = 14;
  std::unordered_map<std::string, double> reward_table;
  std::optional<double> reward_floor;
  // Optional analytic reward used for sequences missing from the table.
  std::function<double(const std::string&)> surrogate;
};

std::unordered_map<std::string, double> load_reward_table(const std::string& path);

class PamdpEnv final : public Environment {
 public:
  static constexpr int kPrepend = 0;
  static constexpr int kAppend = 1;
  static constexpr std::string_view kAlphabet = "ACGU";

  explicit PamdpEnv(PamdpSpec spec);

  int n_astar() const override { return 4; }
  int n_aprime() const override { return 2; }
  int max_depth() const override { return spec_.length; }
  int n_slots() const override { return spec_.length; }
  int alphabet_size() const override { return 4; }
  std::string signature() const override;

  State initial() const override { return State{}; }
  bool is_terminal(const State& s) const override { return s.depth == spec_.length; }
  std::vector<Action> valid_actions(const State& s) const override;
  bool is_valid(const State& s, Action a) const override;
  std::string to_string(const State& s) const override;
  State from_string(std::string_view seq) const;

 protected:
  State do_apply(const State& s, Action a) const override;
  std::vector<Parent> do_parents(const State& s) const override;
  double do_reward(const State& x) const override;

 private:
  PamdpSpec spec_;
};

// ---------------------------------------------------------------------------
// Tree of fixed branching and depth; unique parent per state.
// ---------------------------------------------------------------------------

struct ToyTreeSpec {
  int branching = 2;
  int depth = 3;
  // "constant" (1), "linear" (1 + leaf index), "peaked" (exp(-#nonzero
  // choices) + 0.01). Ignored when `rewards` is non-empty.
  std::string reward_fn = "linear";
  // Explicit per-leaf rewards in lexicographic leaf order.
  std::vector<double> rewards;
};

class ToyTreeEnv final : public Environment {
 public:
  explicit ToyTreeEnv(ToyTreeSpec spec);

  int n_astar() const override { return spec_.branching; }
  int n_aprime() const override { return 1; }
  int max_depth() const override { return spec_.depth; }
  int n_slots() const override { return spec_.depth; }
  int alphabet_size() const override { return spec_.branching; }
  std::string signature() const override;

  State initial() const override { return State{}; }
  bool is_terminal(const State& s) const override { return s.depth == spec_.depth; }
  std::vector<Action> valid_actions(const State& s) const override;
  bool is_valid(const State& s, Action a) const override;
  std::string to_string(const State& s) const override;

  std::size_t leaf_index(const State& x) const;

 protected:
  State do_apply(const State& s, Action a) const override;
  std::vector<Parent> do_parents(const State& s) const override;
  double do_reward(const State& x) const override;

 private:
  ToyTreeSpec spec_;
};

}  // namespace pgfn
