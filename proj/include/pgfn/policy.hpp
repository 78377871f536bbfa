#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pgfn/env.hpp"
#include "pgfn/kernels.hpp"
#include "pgfn/rng.hpp"

namespace pgfn {

// ---------------------------------------------------------------------------
// State encoders
// ---------------------------------------------------------------------------

class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual int dim() const = 0;
  virtual void encode(const State& s, std::span<double> out) const = 0;
};

// Per-slot one-hot over (alphabet + unfilled); length n_slots * (alphabet + 1).
class SlotOneHotEncoder final : public Encoder {
 public:
  SlotOneHotEncoder(int n_slots, int alphabet) : slots_(n_slots), alphabet_(alphabet) {}
  explicit SlotOneHotEncoder(const Environment& env)
      : SlotOneHotEncoder(env.n_slots(), env.alphabet_size()) {}
  int dim() const override { return slots_ * (alphabet_ + 1); }
  void encode(const State& s, std::span<double> out) const override;

 private:
  int slots_;
  int alphabet_;
};

// One-hot over an explicit list of states; lets a linear policy represent an
// arbitrary per-state table (used to load exact flow solutions).
class TabularEncoder final : public Encoder {
 public:
  explicit TabularEncoder(const std::vector<State>& states);
  int dim() const override { return static_cast<int>(index_.size()); }
  void encode(const State& s, std::span<double> out) const override;
  int index_of(const State& s) const;

 private:
  std::unordered_map<State, int, StateHash> index_;
};

std::vector<double> encode_state(const Environment& env, const State& s);

// Encodes each state as one row.
Matrix encode_batch(const Encoder& encoder, std::span<const State> states);

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct NetShape {
  int input = 0;
  std::vector<int> hidden;
  int n_actions = 0;

  int trunk_width() const { return hidden.empty() ? input : hidden.back(); }
  // Head output row: [logits (A) | log state flow (1) | edge log flows (A)].
  int head_width() const { return 2 * n_actions + 1; }
};

struct ParamBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

// MLP trunk with tanh hidden units, three affine heads sharing the trunk, and
// a global log-partition scalar. All values live in one flat vector; the
// gradient uses the same layout.
class PolicyParams {
 public:
  PolicyParams() = default;
  explicit PolicyParams(NetShape shape);  // all zeros

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  static PolicyParams initialize(NetShape shape, Rng& rng);

  const NetShape& shape() const { return shape_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block(const std::string& name) const;
  std::span<double> block_values(const std::string& name);
  std::span<const double> block_values(const std::string& name) const;

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  double log_z() const { return values_[log_z_offset_]; }
  void set_log_z(double v) { values_[log_z_offset_] = v; }
  std::size_t log_z_offset() const { return log_z_offset_; }

  // Offsets of layer l (0..hidden.size()) weight and bias; layer hidden.size()
  // is the concatenated head.
  std::size_t weight_offset(std::size_t layer) const { return weight_offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return bias_offsets_[layer]; }

 private:
  NetShape shape_;
  std::vector<ParamBlock> blocks_;
  std::vector<double> values_;
  std::vector<std::size_t> weight_offsets_;
  std::vector<std::size_t> bias_offsets_;
  std::size_t log_z_offset_ = 0;
};

struct PolicyOutput {
  std::vector<double> action_logits;
  double log_state_flow = 0.0;
  std::vector<double> edge_log_flows;
};

struct ForwardCache {
  // activations[0] is the input batch, activations[l + 1] the l-th hidden layer.
  std::vector<Matrix> activations;
  Matrix head;
};

struct Policy {
  std::shared_ptr<const Encoder> encoder;
  PolicyParams params;
};

// Head outputs for every row of `features` (batch x input).
Matrix policy_forward_batch(const PolicyParams& params, const Matrix& features,
                            ForwardCache* cache = nullptr);
PolicyOutput policy_forward(const PolicyParams& params, std::span<const double> features);

// Accumulates d(loss)/d(params) into grad given d(loss)/d(head outputs).
void policy_backward(const PolicyParams& params, const ForwardCache& cache,
                     const Matrix& d_head, std::span<double> grad);

// Log-probabilities over the full logit vector: -inf outside `allowed`.
std::vector<double> masked_log_softmax(std::span<const double> logits,
                                       std::span<const int> allowed);

// With probability eps_uniform samples uniformly over the support (finite
// entries), otherwise from the distribution.
int sample_action(std::span<const double> logprobs, Rng& rng, double eps_uniform);

// Uniform backward policy: log(1 / |parents(s)|).
double backward_log_prob(const Environment& env, const State& s, int chosen_parent);

// ---------------------------------------------------------------------------
// Differentiation
// ---------------------------------------------------------------------------

// Scalar loss of the head outputs (one row per evaluated state) and log_z.
// When d_head is non-null the callee also writes the partials of the loss
// with respect to every head output and to log_z.
using HeadLoss = std::function<double(const Matrix& head, double log_z, Matrix* d_head,
                                      double* d_log_z)>;

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

double evaluate_loss(const PolicyParams& params, const Matrix& features, const HeadLoss& loss);
// Exact reverse-mode gradient. Throws NonFinite on a NaN/inf loss or gradient.
LossGrad gradient(const PolicyParams& params, const Matrix& features, const HeadLoss& loss);

// Central finite differences; returns the per-entry numerical gradient.
std::vector<double> numerical_gradient(const PolicyParams& params, const Matrix& features,
                                       const HeadLoss& loss, double h = 1e-5);

// |a - n| / max(|a|, |n|, floor), maximized over entries.
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                          double floor = 1e-6);

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct OptimizerState {
  double lr = 1e-3;
  double lr_log_z = 1e-1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<double> m;
  std::vector<double> v;

  static OptimizerState for_params(const PolicyParams& params, double lr, double lr_log_z);
};

// Bias-corrected adaptive-moment update, in place.
void adam_step(OptimizerState& opt, PolicyParams& params, std::span<const double> grad);

}  // namespace pgfn
