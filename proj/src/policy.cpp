#include "pgfn/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pgfn/error.hpp"

namespace pgfn {

// ---------------------------------------------------------------------------

void SlotOneHotEncoder::encode(const State& s, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const int width = alphabet_ + 1;
  for (int slot = 0; slot < slots_; ++slot) {
    int symbol = alphabet_;  // unfilled
    if (slot < static_cast<int>(s.cells.size()) && s.cells[slot] >= 0) symbol = s.cells[slot];
    out[static_cast<std::size_t>(slot) * width + symbol] = 1.0;
  }
}

TabularEncoder::TabularEncoder(const std::vector<State>& states) {
  for (const State& s : states) index_.emplace(s, static_cast<int>(index_.size()));
}

int TabularEncoder::index_of(const State& s) const {
  auto it = index_.find(s);
  if (it == index_.end()) throw Error(Errc::ShapeMismatch, "state not in tabular encoder");
  return it->second;
}

void TabularEncoder::encode(const State& s, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  out[static_cast<std::size_t>(index_of(s))] = 1.0;
}

std::vector<double> encode_state(const Environment& env, const State& s) {
  SlotOneHotEncoder enc(env);
  std::vector<double> out(static_cast<std::size_t>(enc.dim()));
  enc.encode(s, out);
  return out;
}

Matrix encode_batch(const Encoder& encoder, std::span<const State> states) {
  Matrix x(static_cast<int>(states.size()), encoder.dim());
  for (int r = 0; r < x.rows; ++r) encoder.encode(states[r], x.row(r));
  return x;
}

// ---------------------------------------------------------------------------

PolicyParams::PolicyParams(NetShape shape) : shape_(std::move(shape)) {
  if (shape_.input < 1 || shape_.n_actions < 1)
    throw Error(Errc::ShapeMismatch, "network needs input and action dimensions");
  std::size_t offset = 0;
  auto add = [&](std::string name, int rows, int cols) {
    blocks_.push_back({std::move(name), rows, cols, offset});
    offset += blocks_.back().size();
    return blocks_.back().offset;
  };
  int in = shape_.input;
  for (std::size_t l = 0; l < shape_.hidden.size(); ++l) {
    const int out = shape_.hidden[l];
    if (out < 1) throw Error(Errc::ShapeMismatch, "hidden width must be positive");
    weight_offsets_.push_back(add("layer" + std::to_string(l) + ".weight", out, in));
    bias_offsets_.push_back(add("layer" + std::to_string(l) + ".bias", 1, out));
    in = out;
  }
  const int a = shape_.n_actions;
  weight_offsets_.push_back(add("head_logits.weight", a, in));
  add("head_flow.weight", 1, in);
  add("head_edge.weight", a, in);
  bias_offsets_.push_back(add("head_logits.bias", 1, a));
  add("head_flow.bias", 1, 1);
  add("head_edge.bias", 1, a);
  log_z_offset_ = add("log_z", 1, 1);
  values_.assign(offset, 0.0);
}

PolicyParams PolicyParams::initialize(NetShape shape, Rng& rng) {
  PolicyParams p(std::move(shape));
  for (const ParamBlock& b : p.blocks_) {
    if (b.name.find(".weight") == std::string::npos) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(b.cols));
    for (std::size_t j = 0; j < b.size(); ++j)
      p.values_[b.offset + j] = (2.0 * rng.uniform() - 1.0) * bound;
  }
  return p;
}

const ParamBlock& PolicyParams::block(const std::string& name) const {
  for (const ParamBlock& b : blocks_)
    if (b.name == name) return b;
  throw Error(Errc::ShapeMismatch, "no parameter block '" + name + "'");
}

std::span<double> PolicyParams::block_values(const std::string& name) {
  const ParamBlock& b = block(name);
  return {values_.data() + b.offset, b.size()};
}

std::span<const double> PolicyParams::block_values(const std::string& name) const {
  const ParamBlock& b = block(name);
  return {values_.data() + b.offset, b.size()};
}

// ---------------------------------------------------------------------------

Matrix policy_forward_batch(const PolicyParams& params, const Matrix& features,
                            ForwardCache* cache) {
  const NetShape& shape = params.shape();
  if (features.cols != shape.input)
    throw Error(Errc::ShapeMismatch, "feature length " + std::to_string(features.cols) +
                                         " != input " + std::to_string(shape.input));
  const auto& v = params.values();
  const int batch = features.rows;
  const std::size_t layers = shape.hidden.size();

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.activations.assign(1, features);
  int in = shape.input;
  for (std::size_t l = 0; l < layers; ++l) {
    const int out = shape.hidden[l];
    Matrix y(batch, out);
    kernels::affine_forward(c.activations.back().data, batch, in,
                            {v.data() + params.weight_offset(l), static_cast<std::size_t>(out) * in},
                            {v.data() + params.bias_offset(l), static_cast<std::size_t>(out)}, out,
                            y.data);
    kernels::tanh_inplace(y.data);
    c.activations.push_back(std::move(y));
    in = out;
  }
  const int hw = shape.head_width();
  Matrix head(batch, hw);
  kernels::affine_forward(
      c.activations.back().data, batch, in,
      {v.data() + params.weight_offset(layers), static_cast<std::size_t>(hw) * in},
      {v.data() + params.bias_offset(layers), static_cast<std::size_t>(hw)}, hw, head.data);
  if (cache) c.head = head;
  return head;
}

PolicyOutput policy_forward(const PolicyParams& params, std::span<const double> features) {
  Matrix x(1, static_cast<int>(features.size()));
  std::copy(features.begin(), features.end(), x.data.begin());
  Matrix head = policy_forward_batch(params, x);
  const int a = params.shape().n_actions;
  PolicyOutput out;
  out.action_logits.assign(head.data.begin(), head.data.begin() + a);
  out.log_state_flow = head.data[a];
  out.edge_log_flows.assign(head.data.begin() + a + 1, head.data.end());
  return out;
}

void policy_backward(const PolicyParams& params, const ForwardCache& cache,
                     const Matrix& d_head, std::span<double> grad) {
  const NetShape& shape = params.shape();
  const auto& v = params.values();
  const int batch = d_head.rows;
  const std::size_t layers = shape.hidden.size();

  Matrix upstream = d_head;
  for (std::size_t layer = layers + 1; layer-- > 0;) {
    const Matrix& input = cache.activations[layer];
    const int in = input.cols;
    const int out = upstream.cols;
    kernels::affine_backward_params(
        upstream.data, input.data, batch, in, out,
        grad.subspan(params.weight_offset(layer), static_cast<std::size_t>(out) * in),
        grad.subspan(params.bias_offset(layer), static_cast<std::size_t>(out)));
    if (layer == 0) break;
    Matrix dx(batch, in);
    kernels::affine_backward_input(
        upstream.data, {v.data() + params.weight_offset(layer), static_cast<std::size_t>(out) * in},
        batch, in, out, dx.data);
    kernels::tanh_backward(input.data, dx.data);
    upstream = std::move(dx);
  }
}

// ---------------------------------------------------------------------------

std::vector<double> masked_log_softmax(std::span<const double> logits,
                                       std::span<const int> allowed) {
  if (allowed.empty()) throw Error(Errc::EmptyMask, "no allowed actions");
  double mx = -std::numeric_limits<double>::infinity();
  for (int i : allowed) mx = std::max(mx, logits[i]);
  double sum = 0.0;
  for (int i : allowed) sum += std::exp(logits[i] - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(logits.size(), -std::numeric_limits<double>::infinity());
  for (int i : allowed) out[i] = logits[i] - lse;
  return out;
}

int sample_action(std::span<const double> logprobs, Rng& rng, double eps_uniform) {
  const double branch = rng.uniform();
  const double u = rng.uniform();
  std::vector<int> support;
  for (std::size_t i = 0; i < logprobs.size(); ++i)
    if (std::isfinite(logprobs[i])) support.push_back(static_cast<int>(i));
  if (support.empty()) throw Error(Errc::EmptyMask, "empty support");
  if (branch < eps_uniform) {
    auto k = static_cast<std::size_t>(u * static_cast<double>(support.size()));
    return support[std::min(k, support.size() - 1)];
  }
  double acc = 0.0;
  for (int i : support) {
    acc += std::exp(logprobs[i]);
    if (u < acc) return i;
  }
  return support.back();
}

double backward_log_prob(const Environment& env, const State& s, int chosen_parent) {
  const auto parents = env.parents(s);
  if (chosen_parent < 0 || chosen_parent >= static_cast<int>(parents.size()))
    throw Error(Errc::NoParent, "parent index out of range");
  return -std::log(static_cast<double>(parents.size()));
}

// ---------------------------------------------------------------------------

double evaluate_loss(const PolicyParams& params, const Matrix& features, const HeadLoss& loss) {
  Matrix head = features.rows > 0 ? policy_forward_batch(params, features)
                                  : Matrix(0, params.shape().head_width());
  return loss(head, params.log_z(), nullptr, nullptr);
}

LossGrad gradient(const PolicyParams& params, const Matrix& features, const HeadLoss& loss) {
  LossGrad out;
  out.grad.assign(params.size(), 0.0);
  ForwardCache cache;
  Matrix head = features.rows > 0 ? policy_forward_batch(params, features, &cache)
                                  : Matrix(0, params.shape().head_width());
  Matrix d_head(head.rows, head.cols);
  double d_log_z = 0.0;
  out.loss = loss(head, params.log_z(), &d_head, &d_log_z);
  if (!std::isfinite(out.loss)) throw Error(Errc::NonFinite, "loss is not finite");
  if (features.rows > 0) policy_backward(params, cache, d_head, out.grad);
  out.grad[params.log_z_offset()] += d_log_z;
  for (double g : out.grad)
    if (!std::isfinite(g)) throw Error(Errc::NonFinite, "gradient entry is not finite");
  return out;
}

std::vector<double> numerical_gradient(const PolicyParams& params, const Matrix& features,
                                       const HeadLoss& loss, double h) {
  PolicyParams probe = params;
  std::vector<double> out(params.size());
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double orig = probe.values()[j];
    probe.values()[j] = orig + h;
    const double up = evaluate_loss(probe, features, loss);
    probe.values()[j] = orig - h;
    const double down = evaluate_loss(probe, features, loss);
    probe.values()[j] = orig;
    out[j] = (up - down) / (2.0 * h);
  }
  return out;
}

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                          double floor) {
  double worst = 0.0;
  for (std::size_t j = 0; j < analytic.size(); ++j) {
    const double a = analytic[j], n = numeric[j];
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

// ---------------------------------------------------------------------------

OptimizerState OptimizerState::for_params(const PolicyParams& params, double lr,
                                          double lr_log_z) {
  OptimizerState s;
  s.lr = lr;
  s.lr_log_z = lr_log_z;
  s.m.assign(params.size(), 0.0);
  s.v.assign(params.size(), 0.0);
  return s;
}

void adam_step(OptimizerState& opt, PolicyParams& params, std::span<const double> grad) {
  if (grad.size() != params.size() || opt.m.size() != params.size())
    throw Error(Errc::ShapeMismatch, "optimizer/parameter shapes differ");
  ++opt.step;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  auto& v = params.values();
  const std::size_t z = params.log_z_offset();
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double g = grad[j];
    opt.m[j] = opt.beta1 * opt.m[j] + (1.0 - opt.beta1) * g;
    opt.v[j] = opt.beta2 * opt.v[j] + (1.0 - opt.beta2) * g * g;
    const double mhat = opt.m[j] / c1;
    const double vhat = opt.v[j] / c2;
    const double lr = j == z ? opt.lr_log_z : opt.lr;
    v[j] -= lr * mhat / (std::sqrt(vhat) + opt.eps);
  }
}

}  // namespace pgfn
