#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "pgfn/error.hpp"
#include "pgfn/oracle.hpp"
#include "pgfn/rng.hpp"
#include "pgfn/tasks.hpp"

using namespace pgfn;

namespace {

// Full-matrix recursion, kept separate from the library's two-row version.
int edit_distance_oracle(const std::string& a, const std::string& b) {
  std::vector<std::vector<int>> d(a.size() + 1, std::vector<int>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[a.size()][b.size()];
}

std::string random_bits(Rng& rng, std::size_t len) {
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += rng.below(2) ? '1' : '0';
  return s;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected pgfn::Error");
  return Errc::Io;
}

}  // namespace

TEST_CASE("levenshtein examples") {
  CHECK(levenshtein("kitten", "sitting") == 3);
  CHECK(levenshtein("abc", "abc") == 0);
  CHECK(levenshtein("0000", "1111") == 4);
  CHECK(levenshtein("", "101") == 3);
}

TEST_CASE("levenshtein matches the DP oracle and is a metric") {
  Rng rng(11);
  for (int t = 0; t < 300; ++t) {
    const auto a = random_bits(rng, rng.below(12));
    const auto b = random_bits(rng, rng.below(12));
    const auto c = random_bits(rng, rng.below(12));
    CHECK(levenshtein(a, b) == edit_distance_oracle(a, b));
    CHECK(levenshtein(a, b) == levenshtein(b, a));
    CHECK(levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c));
  }
}

TEST_CASE("bitseq reward") {
  BitSeqSpec spec{8, 4, {"11111111"}, 2};
  CHECK(bitseq_reward(spec, "11111111") == 1.0);
  CHECK(bitseq_reward(spec, "11110000") == doctest::Approx(0.018316).epsilon(1e-4));

  // Adding a mode never lowers a reward.
  Rng rng(5);
  BitSeqSpec more = spec;
  more.modes.push_back("00110011");
  for (int t = 0; t < 100; ++t) {
    const auto x = random_bits(rng, 8);
    CHECK(bitseq_reward(more, x) >= bitseq_reward(spec, x));
  }
}

TEST_CASE("bitseq shape") {
  BitSeqEnv env(BitSeqSpec{8, 4, {"10100101"}, 2});
  CHECK(env.n_astar() == 16);
  CHECK(env.n_aprime() == 2);
  CHECK(enumerate(env).terminals.size() == 256);
  CHECK(code_of([] { BitSeqEnv(BitSeqSpec{10, 4, {"1010101010"}, 2}); }) == Errc::BadSpec);
  CHECK(code_of([] { BitSeqEnv(BitSeqSpec{8, 4, {"1010"}, 2}); }) == Errc::BadSpec);
}

TEST_CASE("bitseq parents count equals filled positions; rewards in (0, 1]") {
  BitSeqEnv env(BitSeqSpec{12, 4, {"101001011111", "000011110000"}, 3});
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    State s = env.initial();
    const auto steps = rng.below(4);
    for (std::size_t i = 0; i < steps; ++i) {
      auto acts = env.valid_actions(s);
      s = env.apply(s, acts[rng.below(acts.size())]);
    }
    if (s.depth > 0) CHECK(env.parents(s).size() == static_cast<std::size_t>(s.depth));
    if (env.is_terminal(s)) {
      const double r = env.reward(s);
      CHECK(r > 0.0);
      CHECK(r <= 1.0);
      const auto bits = env.to_string(s);
      const bool is_mode =
          std::find(env.spec().modes.begin(), env.spec().modes.end(), bits) != env.spec().modes.end();
      CHECK((r == 1.0) == is_mode);
    }
  }
}

TEST_CASE("mode distance default keeps the full-scale ratio") {
  CHECK(default_mode_distance(120) == 28);
  CHECK(default_mode_distance(24) == 6);
  CHECK(default_mode_distance(16) == 4);
}

TEST_CASE("synth_modes") {
  Rng rng(1);
  auto single = synth_modes({"11111111"}, 1, 16, rng);
  REQUIRE(single.size() == 1);
  CHECK(single[0] == std::string(16, '1'));

  auto modes = synth_modes(paper_basis(), 20, 24, rng);
  CHECK(std::set<std::string>(modes.begin(), modes.end()).size() == 20);
  for (const auto& m : modes) CHECK(m.size() == 24);

  CHECK(code_of([&] { synth_modes({"11111111"}, 2, 16, rng); }) == Errc::Exhausted);
  CHECK(code_of([&] { synth_modes({"111"}, 1, 16, rng); }) == Errc::BadSpec);
}

TEST_CASE("1111 is the most frequent aligned word of the built-in basis") {
  std::map<std::string, int> freq;
  for (const auto& b : paper_basis())
    for (std::size_t i = 0; i < b.size(); i += 4) ++freq[b.substr(i, 4)];
  const auto top = std::max_element(freq.begin(), freq.end(),
                                    [](auto& a, auto& b) { return a.second < b.second; });
  CHECK(top->first == "1111");
  // Strings of the basis that contain it at an aligned position.
  int containing = 0;
  for (const auto& b : paper_basis())
    if (b.substr(0, 4) == "1111" || b.substr(4, 4) == "1111") ++containing;
  CHECK(containing == 3);
  for (const auto& [w, c] : freq)
    if (w != "1111") CHECK(c < top->second);
}

TEST_CASE("pamdp counting and DAG structure") {
  PamdpSpec spec;
  spec.length = 2;
  spec.reward_floor = 1.0;
  PamdpEnv env(spec);
  CHECK(enumerate(env).terminals.size() == 16);
  CHECK(env.parents(env.from_string("AC")).size() == 2);

  PamdpSpec missing;
  missing.length = 2;
  missing.reward_table = {{"AC", 1.0}};
  CHECK(code_of([&] { PamdpEnv{missing}; }) == Errc::MissingReward);
}

TEST_CASE("pamdp parent counts, exhaustive up to length 4") {
  for (int L = 2; L <= 4; ++L) {
    PamdpSpec spec;
    spec.length = L;
    spec.reward_floor = 1.0;
    PamdpEnv env(spec);
    // Brute force: count (state, action) pairs at depth L-1 that produce each terminal.
    std::map<std::string, int> producers;
    const Enumeration e = enumerate(env);
    for (const State& s : e.states_by_depth[static_cast<std::size_t>(L - 1)])
      for (const Action& a : env.valid_actions(s)) ++producers[env.to_string(env.apply(s, a))];
    CHECK(producers.size() == static_cast<std::size_t>(std::pow(4, L)));
    for (const auto& [seq, count] : producers) {
      const bool uniform = seq.find_first_not_of(seq[0]) == std::string::npos;
      CHECK(count == (uniform ? 1 : 2));
      CHECK(env.parents(env.from_string(seq)).size() == static_cast<std::size_t>(count));
    }
  }
}

TEST_CASE("toytree") {
  ToyTreeEnv env(ToyTreeSpec{2, 3, "constant", {}});
  const Enumeration e = enumerate(env);
  CHECK(e.terminals.size() == 8);
  for (std::size_t l = 0; l <= 3; ++l) CHECK(e.states_by_depth[l].size() == (1u << l));
  for (const State& s : e.all_states())
    if (s.depth > 0) CHECK(env.parents(s).size() == 1);
  CHECK(code_of([] { ToyTreeEnv(ToyTreeSpec{1, 3, "constant", {}}); }) == Errc::BadSpec);
  CHECK(code_of([] { ToyTreeEnv(ToyTreeSpec{2, 1, "constant", {1.0}}); }) == Errc::BadSpec);

  ToyTreeEnv peaked(ToyTreeSpec{3, 2, "peaked", {}});
  CHECK(peaked.reward(State{{0, 0}, 2}) == doctest::Approx(1.01));
  CHECK(peaked.reward(State{{2, 1}, 2}) == doctest::Approx(std::exp(-2.0) + 0.01));
}

TEST_CASE("file loaders") {
  const auto dir = std::filesystem::temp_directory_path() / "pgfn_test_tasks";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "modes.txt") << "1010\n\n0101  \n";
    std::ofstream(dir / "table.csv") << "sequence,reward\nAC,2.5\nGG,0.5\n";
    std::ofstream(dir / "bad.csv") << "sequence,reward\nAC,x\n";
  }
  CHECK(load_modes((dir / "modes.txt").string()) == std::vector<std::string>{"1010", "0101"});
  auto table = load_reward_table((dir / "table.csv").string());
  CHECK(table.size() == 2);
  CHECK(table.at("AC") == 2.5);
  CHECK(code_of([&] { load_reward_table((dir / "bad.csv").string()); }) == Errc::ParseError);
  CHECK(code_of([&] { load_modes((dir / "none.txt").string()); }) == Errc::Io);
  std::filesystem::remove_all(dir);
}
