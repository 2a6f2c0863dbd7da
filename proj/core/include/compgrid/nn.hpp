#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "compgrid/rng.hpp"

namespace compgrid::nn {

/// Dense row-major tensor of doubles with a fixed shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : size() / rows(); }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  void fill(double v);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Ordered collection of named tensors. Shapes are fixed once added.
class ParamSet {
 public:
  Tensor& add(const std::string& name, std::vector<std::size_t> shape);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t count() const noexcept { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& tensor(std::size_t i) { return tensors_[i]; }
  const Tensor& tensor(std::size_t i) const { return tensors_[i]; }

  /// Same names and shapes, all zeros.
  ParamSet zeros_like() const;
  /// Throws ShapeError unless names and shapes match one-to-one.
  void check_compatible(const ParamSet& other) const;
  std::size_t scalar_count() const;
  bool all_finite() const;
  void set_zero();

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

/// Network parameters plus the seed used to initialise them.
struct NetParams {
  ParamSet tensors;
  std::uint64_t seed = 0;
  /// Scalar training metadata stored alongside the tensors.
  std::map<std::string, double> info;

  friend bool operator==(const NetParams&, const NetParams&) = default;
};
using Gradients = ParamSet;

/// Uniform fan-in initialisation: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_uniform_fan_in(Tensor& t, std::size_t fan_in, Rng& rng);

enum class Activation : std::uint8_t { Identity, Relu, Sigmoid, Tanh };

double activate(Activation a, double x);
/// Derivative expressed through the activation output y = f(x).
double activate_grad_from_output(Activation a, double y);

// ---------------------------------------------------------------------------
// Dense layer: y = f(W x + b), W is out x in.

struct DenseCache {
  std::vector<double> input;
  std::vector<double> output;  ///< post-activation
};

std::vector<double> dense_forward(const Tensor& weight, const Tensor& bias, std::span<const double> input,
                                  Activation act, DenseCache* cache = nullptr);

/// Accumulates into grad_weight/grad_bias; returns dL/dinput.
std::vector<double> dense_backward(const Tensor& weight, const DenseCache& cache, Activation act,
                                   std::span<const double> grad_output, Tensor& grad_weight, Tensor& grad_bias);

// ---------------------------------------------------------------------------
// 2-D cross-correlation with same padding on a 7x7 grid (channel-major).
// weight: K x C x kh x kw (odd kh, kw); bias: K.

struct ConvCache {
  std::vector<double> input;
  std::vector<double> output;
  std::size_t in_channels = 0;
};

std::vector<double> conv_forward(const Tensor& weight, const Tensor& bias, std::span<const double> input,
                                 Activation act, ConvCache* cache = nullptr);

std::vector<double> conv_backward(const Tensor& weight, const ConvCache& cache, Activation act,
                                  std::span<const double> grad_output, Tensor& grad_weight, Tensor& grad_bias);

// ---------------------------------------------------------------------------
// LSTM cell. Gate rows are ordered input, forget, candidate, output.
// w_input: 4H x I, w_hidden: 4H x H, bias: 4H.

struct LstmCache {
  std::vector<double> input;
  std::vector<double> hidden_prev;
  std::vector<double> cell_prev;
  std::vector<double> gates;  ///< activated i, f, g, o (4H)
  std::vector<double> cell;
  std::vector<double> cell_tanh;
};

struct LstmState {
  std::vector<double> hidden;
  std::vector<double> cell;

  static LstmState zeros(std::size_t hidden_size) {
    return {std::vector<double>(hidden_size, 0.0), std::vector<double>(hidden_size, 0.0)};
  }
  friend bool operator==(const LstmState&, const LstmState&) = default;
};

/// Returns the new state; the cell output equals the new hidden state.
LstmState lstm_step(const Tensor& w_input, const Tensor& w_hidden, const Tensor& bias,
                    std::span<const double> input, const LstmState& state, LstmCache* cache = nullptr);

struct LstmGrads {
  std::vector<double> input;
  std::vector<double> hidden_prev;
  std::vector<double> cell_prev;
};

/// Backprop through one step given dL/dh and dL/dc flowing into this step's outputs.
LstmGrads lstm_backward(const Tensor& w_input, const Tensor& w_hidden, const LstmCache& cache,
                        std::span<const double> grad_hidden, std::span<const double> grad_cell,
                        Tensor& grad_w_input, Tensor& grad_w_hidden, Tensor& grad_bias);

// ---------------------------------------------------------------------------
// Losses and distributions.

inline constexpr double kProbabilityEpsilon = 1e-12;

double sigmoid(double x);
/// Binary cross entropy on a probability clamped to [eps, 1 - eps].
double bce_loss(double probability, double label);
/// dL/dp at the clamped probability.
double bce_grad(double probability, double label);
/// BCE computed from a logit (numerically stable); gradient w.r.t. the logit is sigmoid(z) - y.
double bce_with_logit(double logit, double label);

std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);
double entropy(std::span<const double> probabilities);

// ---------------------------------------------------------------------------
// Optimisers.

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(const ParamSet& params, AdamConfig config);
  /// Throws DivergenceError on non-finite gradients (params untouched).
  void step(ParamSet& params, const Gradients& grads);
  std::int64_t steps() const noexcept { return t_; }

 private:
  AdamConfig config_;
  ParamSet m_;
  ParamSet v_;
  std::int64_t t_ = 0;
};

/// RMSProp with the squared-gradient average; used for the agent by default.
struct RmsPropConfig {
  double alpha = 0.99;
  double epsilon = 1e-5;
};

class RmsProp {
 public:
  RmsProp(const ParamSet& params, RmsPropConfig config);
  void step(ParamSet& params, const Gradients& grads, double learning_rate);

 private:
  RmsPropConfig config_;
  ParamSet square_avg_;
};

/// params -= learning_rate * grads. Throws DivergenceError on non-finite gradients.
void sgd_step(ParamSet& params, const Gradients& grads, double learning_rate);

/// lr(t) = lr0 * (1 - t / total), clamped at zero.
double linear_schedule(double initial, std::int64_t t, std::int64_t total);

double global_norm(const Gradients& grads);
/// Rescales so the global norm is at most max_norm; returns the pre-clip norm.
double clip_global_norm(Gradients& grads, double max_norm);
bool all_finite(const Gradients& grads);

// ---------------------------------------------------------------------------
// Checkpoints: line records, header {"format","version","kind","seed","info"} then one
// {"name","shape","values"} per tensor. Values round-trip exactly.

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const NetParams& params,
                     const std::string& kind, const std::string& header_json = {});
NetParams load_checkpoint(const std::filesystem::path& path, const std::string& expected_kind);

}  // namespace compgrid::nn
