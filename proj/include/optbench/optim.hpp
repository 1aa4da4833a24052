#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "optbench/network.hpp"

namespace optbench {

enum class OptimizerKind {
  kSgd,
  kSgdNesterov,
  kRmsprop,
  kAdagrad,
  kAdadelta,
  kAdam,
  kAdamw,
  kAdamax,
  kAmsgrad,
  kNadam,
};

inline constexpr OptimizerKind kAllOptimizers[] = {
    OptimizerKind::kSgd,     OptimizerKind::kSgdNesterov, OptimizerKind::kRmsprop,
    OptimizerKind::kAdagrad, OptimizerKind::kAdadelta,    OptimizerKind::kAdam,
    OptimizerKind::kAdamw,   OptimizerKind::kAdamax,      OptimizerKind::kAmsgrad,
    OptimizerKind::kNadam,
};

std::string_view kind_name(OptimizerKind kind);
std::optional<OptimizerKind> kind_from_name(std::string_view name);

// eta doubles as alpha for the Adam family; rho is both the RMSprop beta
// and the Adadelta rho; lambda is the AdamW decoupled weight decay. The
// canonical flag switches a step rule from the transcription used by the
// benchmark to the commonly implemented textbook form.
struct HyperParams {
  double eta = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho = 0.9;
  double mu = 0.9;
  double epsilon = 1e-7;
  double lambda = 0.0;
  bool canonical = false;

  void validate(OptimizerKind kind) const;  // throws ConfigError
};

HyperParams default_hyperparams(OptimizerKind kind);

// Mutable per-run state. Slots are parameter-shaped and allocated only for
// the kinds that use them; t counts completed steps.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kSgd;
  std::uint64_t t = 0;
  Params m;         // first moment (adam family)
  Params v;         // second moment (adam family)
  Params v_max;     // running max of v (amsgrad)
  Params u;         // infinity-norm estimate (adamax)
  Params r;         // squared-gradient accumulator (adagrad, rmsprop)
  Params eg2;       // E[g^2] (adadelta)
  Params edx2;      // E[dtheta^2] (adadelta)
  Params velocity;  // momentum buffer (sgd_nesterov)
};

OptimizerState make_state(OptimizerKind kind, const Params& shape);

// Look-ahead point for gradient evaluation. Identity for every kind except
// sgd_nesterov, where it returns theta - mu * velocity without touching
// the state.
Params lookahead(const OptimizerState& state, const HyperParams& hp, const Params& params);

// Applies one update elementwise across every parameter tensor, advancing
// t by exactly one. grads must be the gradient at lookahead() for
// sgd_nesterov and at params for everything else.
void step(OptimizerState& state, const HyperParams& hp, Params& params,
          const Gradients& grads);

}  // namespace optbench
