#include "pgfn/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <unordered_map>

#include "pgfn/error.hpp"

namespace pgfn {

ObjectiveKind parse_objective_kind(std::string_view name) {
  if (name == "fm") return ObjectiveKind::FM;
  if (name == "db") return ObjectiveKind::DB;
  if (name == "tb") return ObjectiveKind::TB;
  if (name == "subtb") return ObjectiveKind::SubTB;
  throw Error(Errc::ParseError, "unknown objective '" + std::string(name) + "'");
}

std::string_view objective_name(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::FM: return "fm";
    case ObjectiveKind::DB: return "db";
    case ObjectiveKind::TB: return "tb";
    case ObjectiveKind::SubTB: return "subtb";
  }
  return "?";
}

namespace {

// Non-terminal states the network is evaluated at, deduplicated in first-seen
// order, with their full valid-action index sets.
struct RowSet {
  std::unordered_map<State, int, StateHash> index;
  std::vector<State> states;
  std::vector<std::vector<int>> allowed;

  int add(const Environment& env, const State& s) {
    auto [it, inserted] = index.emplace(s, static_cast<int>(states.size()));
    if (inserted) {
      states.push_back(s);
      std::vector<int> idx;
      for (const Action& a : env.valid_actions(s)) idx.push_back(env.action_index(a));
      allowed.push_back(std::move(idx));
    }
    return it->second;
  }
};

// One forward decision: row of the source state and chosen logit index.
struct Step {
  int row = 0;
  int action = 0;
  double log_pb = 0.0;
};

struct TrajData {
  std::vector<Step> steps;
  double log_reward = 0.0;
};

// Log-softmax of each row's logits over its allowed set.
struct RowSoftmax {
  std::vector<double> lse;

  RowSoftmax(const Matrix& head, const RowSet& rows) : lse(rows.states.size()) {
    for (std::size_t r = 0; r < rows.states.size(); ++r) {
      const auto& allowed = rows.allowed[r];
      double mx = -std::numeric_limits<double>::infinity();
      for (int i : allowed) mx = std::max(mx, head(static_cast<int>(r), i));
      double sum = 0.0;
      for (int i : allowed) sum += std::exp(head(static_cast<int>(r), i) - mx);
      lse[r] = mx + std::log(sum);
    }
  }
  double log_pf(const Matrix& head, const Step& s) const {
    return head(s.row, s.action) - lse[static_cast<std::size_t>(s.row)];
  }
  // Adds coef * d(log_pf)/d(logits) into d_head.
  void backprop(const Matrix& head, const RowSet& rows, const Step& s, double coef,
                Matrix& d_head) const {
    d_head(s.row, s.action) += coef;
    const double l = lse[static_cast<std::size_t>(s.row)];
    for (int i : rows.allowed[static_cast<std::size_t>(s.row)])
      d_head(s.row, i) -= coef * std::exp(head(s.row, i) - l);
  }
};

struct Shared {
  RowSet rows;
  std::vector<TrajData> trajs;
  // Per trajectory: row of each state, -1 for the terminal.
  std::vector<std::vector<int>> state_rows;
  int n_actions = 0;
};

std::shared_ptr<Shared> collect(const Environment& env, std::span<const Trajectory> batch,
                                bool need_pb) {
  if (batch.empty()) throw Error(Errc::EmptyBatch, "empty trajectory batch");
  auto sh = std::make_shared<Shared>();
  sh->n_actions = env.n_actions();
  for (const Trajectory& tau : batch) {
    TrajData td;
    std::vector<int> srows;
    for (std::size_t t = 0; t < tau.actions.size(); ++t) {
      Step st;
      st.row = sh->rows.add(env, tau.states[t]);
      st.action = env.action_index(tau.actions[t]);
      if (need_pb)
        st.log_pb = -std::log(static_cast<double>(env.parents(tau.states[t + 1]).size()));
      td.steps.push_back(st);
      srows.push_back(st.row);
    }
    srows.push_back(-1);
    td.log_reward = std::log(tau.reward);
    sh->trajs.push_back(std::move(td));
    sh->state_rows.push_back(std::move(srows));
  }
  return sh;
}

ObjectiveProblem finish(const Encoder& encoder, std::shared_ptr<Shared> sh, HeadLoss loss) {
  ObjectiveProblem p;
  p.features = encode_batch(encoder, sh->rows.states);
  p.loss = std::move(loss);
  return p;
}

ObjectiveProblem build_tb(const Environment& env, const Encoder& encoder,
                          std::span<const Trajectory> batch) {
  auto sh = collect(env, batch, true);
  HeadLoss loss = [sh](const Matrix& head, double log_z, Matrix* d_head, double* d_log_z) {
    RowSoftmax sm(head, sh->rows);
    const double inv_n = 1.0 / static_cast<double>(sh->trajs.size());
    double total = 0.0;
    for (const TrajData& td : sh->trajs) {
      double r = log_z - td.log_reward;
      for (const Step& s : td.steps) r += sm.log_pf(head, s) - s.log_pb;
      total += r * r;
      if (d_head) {
        const double coef = 2.0 * r * inv_n;
        *d_log_z += coef;
        for (const Step& s : td.steps) sm.backprop(head, sh->rows, s, coef, *d_head);
      }
    }
    return total * inv_n;
  };
  return finish(encoder, sh, std::move(loss));
}

// log F at state index t of trajectory j: the flow head, or log R at the end.
double log_flow(const Shared& sh, const Matrix& head, std::size_t j, std::size_t t) {
  const int row = sh.state_rows[j][t];
  return row < 0 ? sh.trajs[j].log_reward : head(row, sh.n_actions);
}

void add_log_flow_grad(const Shared& sh, std::size_t j, std::size_t t, double coef,
                       Matrix& d_head) {
  const int row = sh.state_rows[j][t];
  if (row >= 0) d_head(row, sh.n_actions) += coef;
}

ObjectiveProblem build_db(const Environment& env, const Encoder& encoder,
                          std::span<const Trajectory> batch) {
  auto sh = collect(env, batch, true);
  std::size_t transitions = 0;
  for (const auto& td : sh->trajs) transitions += td.steps.size();
  if (transitions == 0) throw Error(Errc::EmptyBatch, "batch has no transitions");
  HeadLoss loss = [sh, transitions](const Matrix& head, double, Matrix* d_head, double*) {
    RowSoftmax sm(head, sh->rows);
    const double inv_n = 1.0 / static_cast<double>(transitions);
    double total = 0.0;
    for (std::size_t j = 0; j < sh->trajs.size(); ++j) {
      const TrajData& td = sh->trajs[j];
      for (std::size_t t = 0; t < td.steps.size(); ++t) {
        const Step& s = td.steps[t];
        const double r = log_flow(*sh, head, j, t) + sm.log_pf(head, s) -
                         log_flow(*sh, head, j, t + 1) - s.log_pb;
        total += r * r;
        if (d_head) {
          const double coef = 2.0 * r * inv_n;
          add_log_flow_grad(*sh, j, t, coef, *d_head);
          add_log_flow_grad(*sh, j, t + 1, -coef, *d_head);
          sm.backprop(head, sh->rows, s, coef, *d_head);
        }
      }
    }
    return total * inv_n;
  };
  return finish(encoder, sh, std::move(loss));
}

ObjectiveProblem build_subtb(const Environment& env, const Encoder& encoder,
                             std::span<const Trajectory> batch, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw Error(Errc::BadSpec, "lambda must lie in (0, 1]");
  auto sh = collect(env, batch, true);
  HeadLoss loss = [sh, lambda](const Matrix& head, double, Matrix* d_head, double*) {
    RowSoftmax sm(head, sh->rows);
    const double inv_n = 1.0 / static_cast<double>(sh->trajs.size());
    double total = 0.0;
    for (std::size_t j = 0; j < sh->trajs.size(); ++j) {
      const TrajData& td = sh->trajs[j];
      const std::size_t n = td.steps.size();
      if (n == 0) continue;
      // Prefix sums of (log P_F - log P_B).
      std::vector<double> cum(n + 1, 0.0);
      for (std::size_t t = 0; t < n; ++t)
        cum[t + 1] = cum[t] + sm.log_pf(head, td.steps[t]) - td.steps[t].log_pb;
      std::vector<double> lf(n + 1);
      for (std::size_t t = 0; t <= n; ++t) lf[t] = log_flow(*sh, head, j, t);

      double wsum = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = i + 1; k <= n; ++k) wsum += std::pow(lambda, static_cast<double>(k - i));

      double traj_loss = 0.0;
      std::vector<double> step_coef(n + 1, 0.0);  // difference array over steps
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = i + 1; k <= n; ++k) {
          const double w = std::pow(lambda, static_cast<double>(k - i)) / wsum;
          const double r = lf[i] + cum[k] - cum[i] - lf[k];
          traj_loss += w * r * r;
          if (d_head) {
            const double coef = 2.0 * w * r * inv_n;
            add_log_flow_grad(*sh, j, i, coef, *d_head);
            add_log_flow_grad(*sh, j, k, -coef, *d_head);
            step_coef[i] += coef;
            step_coef[k] -= coef;
          }
        }
      }
      total += traj_loss;
      if (d_head) {
        double run = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
          run += step_coef[t];
          if (run != 0.0) sm.backprop(head, sh->rows, td.steps[t], run, *d_head);
        }
      }
    }
    return total * inv_n;
  };
  return finish(encoder, sh, std::move(loss));
}

ObjectiveProblem build_fm(const Environment& env, const Encoder& encoder,
                          std::span<const Trajectory> batch, double eps) {
  if (!(eps > 0.0)) throw Error(Errc::BadSpec, "log_epsilon must be positive");
  if (batch.empty()) throw Error(Errc::EmptyBatch, "empty trajectory batch");

  struct Edge {
    int row;
    int action;
  };
  struct Node {
    std::vector<Edge> in;
    std::vector<Edge> out;
    double reward = 0.0;  // R(s') at terminals, 0 otherwise
  };
  struct FmData {
    RowSet rows;
    std::vector<Node> nodes;
    int n_actions = 0;
  };
  auto d = std::make_shared<FmData>();
  d->n_actions = env.n_actions();
  for (const Trajectory& tau : batch) {
    for (std::size_t t = 1; t < tau.states.size(); ++t) {
      const State& s = tau.states[t];
      Node node;
      for (const Parent& p : env.parents(s))
        node.in.push_back({d->rows.add(env, p.state), env.action_index(p.action)});
      if (env.is_terminal(s)) {
        node.reward = tau.reward;
      } else {
        const int row = d->rows.add(env, s);
        for (int a : d->rows.allowed[static_cast<std::size_t>(row)]) node.out.push_back({row, a});
      }
      d->nodes.push_back(std::move(node));
    }
  }
  if (d->nodes.empty()) throw Error(Errc::EmptyBatch, "batch has no non-initial states");

  HeadLoss loss = [d, eps](const Matrix& head, double, Matrix* d_head, double*) {
    const int base = d->n_actions + 1;  // edge head offset in a head row
    const double inv_n = 1.0 / static_cast<double>(d->nodes.size());
    double total = 0.0;
    for (const Node& node : d->nodes) {
      double in = 0.0, out = node.reward;
      for (const Edge& e : node.in) in += std::exp(head(e.row, base + e.action));
      for (const Edge& e : node.out) out += std::exp(head(e.row, base + e.action));
      const double r = std::log(eps + in) - std::log(eps + out);
      total += r * r;
      if (d_head) {
        const double coef = 2.0 * r * inv_n;
        for (const Edge& e : node.in)
          (*d_head)(e.row, base + e.action) += coef * std::exp(head(e.row, base + e.action)) / (eps + in);
        for (const Edge& e : node.out)
          (*d_head)(e.row, base + e.action) -= coef * std::exp(head(e.row, base + e.action)) / (eps + out);
      }
    }
    const double value = total * inv_n;
    if (!std::isfinite(value)) throw Error(Errc::NonFinite, "flow-matching loss overflow");
    return value;
  };
  ObjectiveProblem p;
  p.features = encode_batch(encoder, d->rows.states);
  p.loss = std::move(loss);
  return p;
}

double loss_of(const Environment& env, const Policy& policy, std::span<const Trajectory> batch,
               ObjectiveConfig cfg, ObjectiveKind kind) {
  cfg.kind = kind;
  return objective_loss(env, policy, batch, cfg);
}

}  // namespace

ObjectiveProblem build_objective(const Environment& env, const Encoder& encoder,
                                 std::span<const Trajectory> batch, const ObjectiveConfig& cfg) {
  switch (cfg.kind) {
    case ObjectiveKind::FM: return build_fm(env, encoder, batch, cfg.log_epsilon);
    case ObjectiveKind::DB: return build_db(env, encoder, batch);
    case ObjectiveKind::TB: return build_tb(env, encoder, batch);
    case ObjectiveKind::SubTB: return build_subtb(env, encoder, batch, cfg.lambda);
  }
  throw Error(Errc::BadSpec, "unknown objective");
}

double objective_loss(const Environment& env, const Policy& policy,
                      std::span<const Trajectory> batch, const ObjectiveConfig& cfg) {
  ObjectiveProblem p = build_objective(env, *policy.encoder, batch, cfg);
  const double value = evaluate_loss(policy.params, p.features, p.loss);
  if (!std::isfinite(value)) throw Error(Errc::NonFinite, "loss is not finite");
  return value;
}

LossGrad objective_gradient(const Environment& env, const Policy& policy,
                            std::span<const Trajectory> batch, const ObjectiveConfig& cfg) {
  ObjectiveProblem p = build_objective(env, *policy.encoder, batch, cfg);
  return gradient(policy.params, p.features, p.loss);
}

double loss_fm(const Environment& env, const Policy& policy, std::span<const Trajectory> batch,
               const ObjectiveConfig& cfg) {
  return loss_of(env, policy, batch, cfg, ObjectiveKind::FM);
}
double loss_db(const Environment& env, const Policy& policy, std::span<const Trajectory> batch,
               const ObjectiveConfig& cfg) {
  return loss_of(env, policy, batch, cfg, ObjectiveKind::DB);
}
double loss_tb(const Environment& env, const Policy& policy, std::span<const Trajectory> batch,
               const ObjectiveConfig& cfg) {
  return loss_of(env, policy, batch, cfg, ObjectiveKind::TB);
}
double loss_subtb(const Environment& env, const Policy& policy,
                  std::span<const Trajectory> batch, const ObjectiveConfig& cfg) {
  return loss_of(env, policy, batch, cfg, ObjectiveKind::SubTB);
}

}  // namespace pgfn
