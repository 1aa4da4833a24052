#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "optbench/matrix.hpp"
#include "optbench/rng.hpp"

namespace optbench {

// The fixed benchmark architecture: six hidden layers in an hourglass shape
// plus a single sigmoid output unit. The input layer carries no parameters
// and is not counted, so layer_count() is hidden_sizes.size() + 1.
struct NetworkConfig {
  std::size_t input_dim = 10;
  std::vector<std::size_t> hidden_sizes = {16, 32, 64, 32, 16, 8};
  double dropout_rate = 0.0;

  std::size_t layer_count() const { return hidden_sizes.size() + 1; }
  void validate() const;  // throws ConfigError
};

// Per-layer weight matrices of shape (fan_out, fan_in) and bias vectors.
// Doubles also as the shape family for gradients and optimizer slots.
struct Params {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  std::size_t layer_count() const { return weights.size(); }
  friend bool operator==(const Params&, const Params&) = default;
};

using Gradients = Params;

// Canonical byte layout: magic, layer count, per-layer (rows, cols) header,
// then per layer the row-major weight entries followed by the bias entries,
// all little-endian 64-bit. Stable across runs and platforms; used for
// snapshot equality, content hashing and checkpoint files.
std::vector<std::uint8_t> serialize_params(const Params& params);
Params deserialize_params(std::span<const std::uint8_t> bytes);
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t params_hash(const Params& params);

Params zero_like(const Params& shape);
bool same_shape(const Params& a, const Params& b);
bool params_all_finite(const Params& params);

enum class RunMode { kTrain, kEval };

// Everything the backward pass needs: activations[0] is the input batch,
// activations[l] the post-activation of layer l, the last one the sigmoid
// probabilities. Dropout masks hold the survivor scale 1/(1-p) (0 for a
// dropped unit) and are recorded only for a train-mode pass with p > 0.
struct ForwardTrace {
  std::vector<Matrix> pre_activations;   // z^(l), l = 1..L
  std::vector<Matrix> activations;       // a^(0)..a^(L)
  std::vector<Matrix> dropout_masks;     // one per hidden layer when present
  bool training = false;

  std::size_t batch_size() const { return activations.empty() ? 0 : activations.front().rows(); }
  const Matrix& output() const { return activations.back(); }
  std::vector<double> predictions() const;
};

double relu(double z);
// Branching form: never evaluates exp on a positive argument, so large |z|
// saturates instead of overflowing.
double sigmoid(double z);

// Uniform(-limit, limit) weights with limit = sqrt(6 / (fan_in + fan_out)),
// zero biases. Entries are drawn layer by layer in row-major order, so a
// given seed yields bit-identical parameters.
Params glorot_init(const NetworkConfig& config, std::uint64_t seed);

// Hidden layers: affine, ReLU, then inverted dropout when training with
// p > 0 (mask drawn per entry in row-major order: keep iff uniform() >= p,
// survivors scaled by 1/(1-p)). Output layer: affine + sigmoid. Eval mode
// applies no dropout and no scaling.
ForwardTrace forward(const Params& params, const Matrix& batch, RunMode mode,
                     double dropout_rate = 0.0, Rng* rng = nullptr);

// Mean binary cross-entropy with predictions clamped to
// [1e-7, 1 - 1e-7]; labels must be exactly 0 or 1.
double bce_loss(std::span<const double> y, std::span<const double> y_hat);
inline constexpr double kBceClamp = 1e-7;

// Analytic gradients of the mean BCE over the batch. Uses the sigmoid+BCE
// simplification dL/dz_out = (y_hat - y)/N, ReLU subgradient 0 at z = 0,
// and replays the dropout masks recorded in the trace.
Gradients backward(const Params& params, const ForwardTrace& trace,
                   std::span<const double> y);

// Central-difference check of backward: perturbs every parameter by +/-h
// (eval-mode loss) and returns the max over parameters of
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
double gradient_check(const Params& params, const Matrix& batch,
                      std::span<const double> y, double h);

}  // namespace optbench
