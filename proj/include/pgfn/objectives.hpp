#pragma once

#include <span>
#include <string_view>

#include "pgfn/env.hpp"
#include "pgfn/policy.hpp"

namespace pgfn {

enum class ObjectiveKind { FM, DB, TB, SubTB };

ObjectiveKind parse_objective_kind(std::string_view name);
std::string_view objective_name(ObjectiveKind kind);

struct ObjectiveConfig {
  ObjectiveKind kind = ObjectiveKind::TB;
  double lambda = 0.9;        // SubTB geometric weight
  double log_epsilon = 1e-6;  // FM log-domain stabilizer
};

// The states a loss evaluates the network at, and the loss as a function of
// the resulting head outputs. Every objective ranges over the full action set
// A(s); region masks never enter.
struct ObjectiveProblem {
  Matrix features;
  HeadLoss loss;
};

// Throws EmptyBatch on an empty batch.
ObjectiveProblem build_objective(const Environment& env, const Encoder& encoder,
                                 std::span<const Trajectory> batch, const ObjectiveConfig& cfg);

double objective_loss(const Environment& env, const Policy& policy,
                      std::span<const Trajectory> batch, const ObjectiveConfig& cfg);
LossGrad objective_gradient(const Environment& env, const Policy& policy,
                            std::span<const Trajectory> batch, const ObjectiveConfig& cfg);

// Mean over non-initial states of the squared log residual between total
// inflow and reward-plus-outflow, with edge flows exp(edge head).
double loss_fm(const Environment& env, const Policy& policy, std::span<const Trajectory> batch,
               const ObjectiveConfig& cfg);
// Mean over transitions of (log F(s) + log P_F(s'|s) - log F(s') - log P_B(s|s'))^2,
// with F pinned to R at terminals.
double loss_db(const Environment& env, const Policy& policy, std::span<const Trajectory> batch,
               const ObjectiveConfig& cfg);
// Mean over trajectories of (log Z + sum log P_F - log R - sum log P_B)^2.
double loss_tb(const Environment& env, const Policy& policy, std::span<const Trajectory> batch,
               const ObjectiveConfig& cfg);
// Per trajectory, lambda^(j-i)-weighted mean over sub-trajectories i < j of the
// DB-style residual; mean over trajectories.
double loss_subtb(const Environment& env, const Policy& policy,
                  std::span<const Trajectory> batch, const ObjectiveConfig& cfg);

}  // namespace pgfn
