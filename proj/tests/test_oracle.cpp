#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>

#include "pgfn/error.hpp"
#include "pgfn/local_search.hpp"
#include "pgfn/oracle.hpp"
#include "pgfn/tasks.hpp"

using namespace pgfn;

namespace {

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

TEST_CASE("depth profiles") {
  ToyTreeEnv tree(ToyTreeSpec{2, 3, "constant", {}});
  CHECK(depth_profile(tree) == std::vector<double>{1, 2, 4, 8});

  // Filled-position subsets times words per filled slot: C(2,l) * 16^l.
  BitSeqEnv bs(BitSeqSpec{8, 4, {"11111111"}, 2});
  CHECK(depth_profile(bs) == std::vector<double>{1, 32, 256});

  RegionMask m;
  m.valid.assign(16, 0);
  m.valid[3] = m.valid[9] = 1;
  const auto masked = depth_profile(bs, &m);
  const auto full = depth_profile(bs);
  for (std::size_t l = 0; l < full.size(); ++l) CHECK(masked[l] <= full[l]);
  CHECK(masked == std::vector<double>{1, 4, 4});

  BitSeqEnv big(BitSeqSpec{120, 4, {std::string(120, '1')}, 28});
  CHECK(code_of([&] { enumerate(big); }) == Errc::BudgetExceeded);
}

TEST_CASE("exact targets") {
  ToyTreeEnv flat(ToyTreeSpec{2, 3, "constant", {}});
  const auto t = exact_target(flat);
  CHECK(t.z == 8.0);
  for (double p : t.probs) CHECK(p == doctest::Approx(0.125));

  ToyTreeEnv two(ToyTreeSpec{2, 1, "constant", {1.0, 3.0}});
  const auto u = exact_target(two);
  CHECK(u.z == 4.0);
  CHECK(u.probs == std::vector<double>{0.25, 0.75});
}

TEST_CASE("exact flows conserve") {
  ToyTreeEnv two(ToyTreeSpec{2, 1, "constant", {1.0, 1.0}});
  auto f = solve_exact_flows(two);
  CHECK(f.z == 2.0);
  for (const auto& [a, flow] : f.edge_flow.at(two.initial())) CHECK(flow == 1.0);

  ToyTreeEnv skew(ToyTreeSpec{2, 1, "constant", {1.0, 3.0}});
  f = solve_exact_flows(skew);
  CHECK(f.z == 4.0);
  CHECK(f.edge_flow.at(skew.initial()) == std::vector<std::pair<int, double>>{{0, 1.0}, {1, 3.0}});

  // Conservation on the bitseq DAG, summed independently of the solver.
  BitSeqEnv bs(BitSeqSpec{8, 4, {"10100101", "00111100"}, 2});
  f = solve_exact_flows(bs);
  std::unordered_map<State, double, StateHash> inflow;
  for (const auto& [s, edges] : f.edge_flow)
    for (const auto& [a, flow] : edges) inflow[bs.apply(s, bs.action_at(a))] += flow;
  for (const auto& [s, flow] : f.state_flow) {
    if (s.depth == 0) continue;
    CHECK(std::abs(inflow.at(s) - flow) <= 1e-10 * std::max(1.0, flow));
    double out = 0.0;
    if (bs.is_terminal(s)) {
      out = bs.reward(s);
    } else {
      for (const auto& [a, ef] : f.edge_flow.at(s)) out += ef;
    }
    CHECK(std::abs(out - flow) <= 1e-10 * std::max(1.0, flow));
  }
  CHECK(f.z == doctest::Approx(exact_target(bs).z).epsilon(1e-12));
}

TEST_CASE("total variation") {
  const std::map<std::string, double> p{{"a", 0.5}, {"b", 0.5}}, q{{"a", 0.75}, {"b", 0.25}};
  CHECK(tv_distance(p, p) == 0.0);
  CHECK(tv_distance(p, q) == doctest::Approx(0.25));
  CHECK(tv_distance({{"a", 1.0}}, {{"b", 1.0}}) == 1.0);
  CHECK(code_of([&] { tv_distance({{"a", 0.7}}, p); }) == Errc::BadDistribution);
}

TEST_CASE("an exact-flow sampler matches the target law") {
  for (int which = 0; which < 2; ++which) {
    EnvPtr env;
    if (which == 0)
      env = std::make_shared<ToyTreeEnv>(ToyTreeSpec{4, 3, "peaked", {}});
    else
      env = std::make_shared<BitSeqEnv>(BitSeqSpec{8, 4, {"10100101", "11110000"}, 2});
    const Policy pol = exact_flow_policy(*env, solve_exact_flows(*env));
    const auto target = exact_target(*env).as_map();
    std::map<std::string, double> emp;
    const int n = 100000;
    const auto full = RegionMask::full(env->n_astar());
    std::vector<Rng> rngs;
    for (int i = 0; i < n; ++i) rngs.push_back(Rng::stream(17, "tv", {static_cast<std::uint64_t>(i)}));
    for (const auto& t : rollout_batch(*env, pol, full, rngs, 0.0))
      emp[env->to_string(t->terminal())] += 1.0 / n;
    double total = 0.0;
    for (auto& [k, v] : emp) total += v;
    for (auto& [k, v] : emp) v /= total;
    CHECK(tv_distance(emp, target) <= 0.02);
  }
}

TEST_CASE("a uniform policy with eps = 1 gives the construction-order marginal") {
  // Uniform forward choice over A(s): terminal probability is the number of
  // construction orders times the product of 1 / |A(s)| along each.
  PamdpSpec spec;
  spec.length = 3;
  spec.reward_floor = 1.0;
  PamdpEnv env(spec);
  std::map<std::string, double> exact;
  std::function<void(const State&, double)> walk = [&](const State& s, double p) {
    if (env.is_terminal(s)) {
      exact[env.to_string(s)] += p;
      return;
    }
    const auto acts = env.valid_actions(s);
    for (const Action& a : acts) walk(env.apply(s, a), p / acts.size());
  };
  walk(env.initial(), 1.0);

  auto enc = std::make_shared<SlotOneHotEncoder>(env);
  Rng init(1);
  Policy pol{enc, PolicyParams::initialize(NetShape{enc->dim(), {4}, env.n_actions()}, init)};
  std::vector<Rng> rngs;
  const int n = 100000;
  for (int i = 0; i < n; ++i) rngs.push_back(Rng::stream(5, "eps", {static_cast<std::uint64_t>(i)}));
  std::map<std::string, double> emp;
  for (const auto& t : rollout_batch(env, pol, RegionMask::full(4), rngs, 1.0))
    emp[env.to_string(t->terminal())] += 1.0 / n;
  double total = 0.0;
  for (auto& [k, v] : emp) total += v;
  for (auto& [k, v] : emp) v /= total;
  CHECK(tv_distance(emp, exact) <= 0.02);
}
