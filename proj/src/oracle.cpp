#include "pgfn/oracle.hpp"

#include <cmath>
#include <unordered_set>

#include "pgfn/error.hpp"

namespace pgfn {

std::size_t Enumeration::total_states() const {
  std::size_t n = 0;
  for (const auto& level : states_by_depth) n += level.size();
  return n;
}

std::vector<State> Enumeration::all_states() const {
  std::vector<State> out;
  out.reserve(total_states());
  for (const auto& level : states_by_depth) out.insert(out.end(), level.begin(), level.end());
  return out;
}

Enumeration enumerate(const Environment& env, const RegionMask* mask, std::size_t budget) {
  Enumeration out;
  out.states_by_depth.push_back({env.initial()});
  std::size_t total = 1;
  while (true) {
    const auto& frontier = out.states_by_depth.back();
    std::vector<State> next;
    std::unordered_set<State, StateHash> seen;
    for (const State& s : frontier) {
      if (env.is_terminal(s)) {
        out.terminals.push_back(s);
        continue;
      }
      std::vector<Action> actions = env.valid_actions(s);
      if (mask) actions = restrict_actions(*mask, actions);
      for (const Action& a : actions) {
        State child = env.apply(s, a);
        if (seen.insert(child).second) {
          if (++total > budget)
            throw Error(Errc::BudgetExceeded,
                        "enumeration exceeds " + std::to_string(budget) + " states");
          next.push_back(std::move(child));
        }
      }
    }
    if (next.empty()) break;
    out.states_by_depth.push_back(std::move(next));
  }
  return out;
}

std::map<std::string, double> ExactTarget::as_map() const {
  std::map<std::string, double> m;
  for (std::size_t i = 0; i < terminals.size(); ++i) m[terminals[i].first] = probs[i];
  return m;
}

ExactTarget exact_target(const Environment& env, const RegionMask* mask, std::size_t budget) {
  Enumeration e = enumerate(env, mask, budget);
  ExactTarget t;
  for (const State& x : e.terminals) {
    const double r = env.reward(x);
    t.terminals.emplace_back(env.to_string(x), r);
    t.z += r;
  }
  for (const auto& [name, r] : t.terminals) t.probs.push_back(r / t.z);
  return t;
}

std::vector<double> depth_profile(const Environment& env, const RegionMask* mask,
                                  std::size_t budget) {
  Enumeration e = enumerate(env, mask, budget);
  std::vector<double> out(static_cast<std::size_t>(env.max_depth()) + 1, 0.0);
  for (std::size_t l = 0; l < e.states_by_depth.size() && l < out.size(); ++l)
    out[l] = static_cast<double>(e.states_by_depth[l].size());
  return out;
}

ExactFlows solve_exact_flows(const Environment& env, std::size_t budget) {
  ExactFlows f;
  f.space = enumerate(env, nullptr, budget);
  for (std::size_t l = f.space.states_by_depth.size(); l-- > 0;) {
    for (const State& s : f.space.states_by_depth[l]) {
      if (env.is_terminal(s)) {
        f.state_flow[s] = env.reward(s);
        continue;
      }
      double total = 0.0;
      auto& edges = f.edge_flow[s];
      for (const Action& a : env.valid_actions(s)) {
        const State child = env.apply(s, a);
        const double share =
            f.state_flow.at(child) / static_cast<double>(env.parents(child).size());
        edges.emplace_back(env.action_index(a), share);
        total += share;
      }
      f.state_flow[s] = total;
    }
  }
  f.z = f.state_flow.at(env.initial());
  return f;
}

Policy exact_flow_policy(const Environment& env, const ExactFlows& flows) {
  auto encoder = std::make_shared<TabularEncoder>(flows.space.all_states());
  NetShape shape{encoder->dim(), {}, env.n_actions()};
  PolicyParams params(shape);
  auto logits = params.block_values("head_logits.weight");
  auto flow = params.block_values("head_flow.weight");
  auto edge = params.block_values("head_edge.weight");
  const std::size_t cols = static_cast<std::size_t>(encoder->dim());
  for (const auto& [s, f] : flows.state_flow) {
    const auto col = static_cast<std::size_t>(encoder->index_of(s));
    flow[col] = std::log(f);
    auto it = flows.edge_flow.find(s);
    if (it == flows.edge_flow.end()) continue;
    for (const auto& [a, ef] : it->second) {
      logits[static_cast<std::size_t>(a) * cols + col] = std::log(ef);
      edge[static_cast<std::size_t>(a) * cols + col] = std::log(ef);
    }
  }
  params.set_log_z(std::log(flows.z));
  return Policy{std::move(encoder), std::move(params)};
}

double tv_distance(const std::map<std::string, double>& p,
                   const std::map<std::string, double>& q) {
  auto check = [](const std::map<std::string, double>& m, const char* name) {
    double total = 0.0;
    for (const auto& [k, v] : m) {
      if (!(v >= 0.0)) throw Error(Errc::BadDistribution, std::string(name) + " has negative mass");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw Error(Errc::BadDistribution, std::string(name) + " is not normalized");
  };
  check(p, "p");
  check(q, "q");
  double sum = 0.0;
  for (const auto& [k, v] : p) {
    auto it = q.find(k);
    sum += std::abs(v - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : q)
    if (!p.count(k)) sum += v;
  return 0.5 * sum;
}

}  // namespace pgfn
