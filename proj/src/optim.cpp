#include "optbench/optim.hpp"

#include <cmath>
#include <string>

#include "optbench/errors.hpp"

namespace optbench {

namespace {

struct NamedKind {
  std::string_view name;
  OptimizerKind kind;
};

constexpr NamedKind kKindNames[] = {
    {"sgd", OptimizerKind::kSgd},
    {"sgd_nesterov", OptimizerKind::kSgdNesterov},
    {"rmsprop", OptimizerKind::kRmsprop},
    {"adagrad", OptimizerKind::kAdagrad},
    {"adadelta", OptimizerKind::kAdadelta},
    {"adam", OptimizerKind::kAdam},
    {"adamw", OptimizerKind::kAdamw},
    {"adamax", OptimizerKind::kAdamax},
    {"amsgrad", OptimizerKind::kAmsgrad},
    {"nadam", OptimizerKind::kNadam},
};

// Entry views over every tensor of a parameter bundle, layer-major with the
// weight block before the bias block. All zipped bundles share this order.
std::vector<std::span<double>> entry_spans(Params& p) {
  std::vector<std::span<double>> spans;
  spans.reserve(p.weights.size() * 2);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    spans.push_back(p.weights[l].flat());
    spans.push_back(std::span<double>(p.biases[l]));
  }
  return spans;
}

std::vector<std::span<const double>> entry_spans(const Params& p) {
  std::vector<std::span<const double>> spans;
  spans.reserve(p.weights.size() * 2);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    spans.push_back(p.weights[l].flat());
    spans.push_back(std::span<const double>(p.biases[l]));
  }
  return spans;
}

bool uses_slot_m(OptimizerKind k) {
  return k == OptimizerKind::kAdam || k == OptimizerKind::kAdamw ||
         k == OptimizerKind::kAdamax || k == OptimizerKind::kAmsgrad ||
         k == OptimizerKind::kNadam;
}

bool uses_slot_v(OptimizerKind k) {
  return k == OptimizerKind::kAdam || k == OptimizerKind::kAdamw ||
         k == OptimizerKind::kAmsgrad || k == OptimizerKind::kNadam;
}

void require(bool ok, const char* what) {
  if (!ok) throw ConsistencyError(what);
}

}  // namespace

std::string_view kind_name(OptimizerKind kind) {
  for (const auto& entry : kKindNames) {
    if (entry.kind == kind) return entry.name;
  }
  throw ConfigError("unknown optimizer kind");
}

std::optional<OptimizerKind> kind_from_name(std::string_view name) {
  for (const auto& entry : kKindNames) {
    if (entry.name == name) return entry.kind;
  }
  return std::nullopt;
}

void HyperParams::validate(OptimizerKind kind) const {
  if (!(eta > 0.0)) throw ConfigError("optim: learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optim: beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optim: beta2 must lie in [0, 1)");
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("optim: rho must lie in [0, 1)");
  if (!(mu >= 0.0 && mu < 1.0)) throw ConfigError("optim: mu must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("optim: epsilon must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("optim: lambda must be non-negative");
  (void)kind;
}

HyperParams default_hyperparams(OptimizerKind kind) {
  HyperParams hp;
  switch (kind) {
    case OptimizerKind::kSgd:
    case OptimizerKind::kSgdNesterov:
      hp.eta = 0.01;
      hp.mu = 0.9;
      break;
    case OptimizerKind::kRmsprop:
      hp.eta = 0.001;
      hp.rho = 0.9;
      break;
    case OptimizerKind::kAdagrad:
      hp.eta = 0.001;
      break;
    case OptimizerKind::kAdadelta:
      // No learning-rate multiplier in the transcribed rule; eta = 1 keeps
      // the canonical variant equivalent unless overridden.
      hp.eta = 1.0;
      hp.rho = 0.95;
      hp.epsilon = 1e-6;
      break;
    case OptimizerKind::kAdam:
    case OptimizerKind::kAdamax:
    case OptimizerKind::kAmsgrad:
    case OptimizerKind::kNadam:
      hp.eta = 0.001;
      break;
    case OptimizerKind::kAdamw:
      hp.eta = 0.001;
      hp.lambda = 0.004;
      break;
  }
  return hp;
}

OptimizerState make_state(OptimizerKind kind, const Params& shape) {
  switch (kind) {
    case OptimizerKind::kSgd:
    case OptimizerKind::kSgdNesterov:
    case OptimizerKind::kRmsprop:
    case OptimizerKind::kAdagrad:
    case OptimizerKind::kAdadelta:
    case OptimizerKind::kAdam:
    case OptimizerKind::kAdamw:
    case OptimizerKind::kAdamax:
    case OptimizerKind::kAmsgrad:
    case OptimizerKind::kNadam:
      break;
    default:
      throw ConfigError("make_state: unknown optimizer kind");
  }
  OptimizerState st;
  st.kind = kind;
  st.t = 0;
  if (uses_slot_m(kind)) st.m = zero_like(shape);
  if (uses_slot_v(kind)) st.v = zero_like(shape);
  if (kind == OptimizerKind::kAmsgrad) st.v_max = zero_like(shape);
  if (kind == OptimizerKind::kAdamax) st.u = zero_like(shape);
  if (kind == OptimizerKind::kRmsprop || kind == OptimizerKind::kAdagrad) st.r = zero_like(shape);
  if (kind == OptimizerKind::kAdadelta) {
    st.eg2 = zero_like(shape);
    st.edx2 = zero_like(shape);
  }
  if (kind == OptimizerKind::kSgdNesterov) st.velocity = zero_like(shape);
  return st;
}

Params lookahead(const OptimizerState& state, const HyperParams& hp, const Params& params) {
  Params ahead = params;
  if (state.kind != OptimizerKind::kSgdNesterov) return ahead;
  require(same_shape(state.velocity, params), "lookahead: state does not match parameters");
  auto theta = entry_spans(ahead);
  const auto vel = entry_spans(state.velocity);
  for (std::size_t s = 0; s < theta.size(); ++s) {
    for (std::size_t i = 0; i < theta[s].size(); ++i) {
      theta[s][i] -= hp.mu * vel[s][i];
    }
  }
  return ahead;
}

void step(OptimizerState& state, const HyperParams& hp, Params& params,
          const Gradients& grads) {
  require(same_shape(params, grads), "step: gradient shapes do not match parameters");
  hp.validate(state.kind);

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double eps = hp.epsilon;

  auto theta = entry_spans(params);
  const auto g = entry_spans(grads);

  switch (state.kind) {
    case OptimizerKind::kSgd: {
      for (std::size_t s = 0; s < theta.size(); ++s)
        for (std::size_t i = 0; i < theta[s].size(); ++i) theta[s][i] -= hp.eta * g[s][i];
      break;
    }
    case OptimizerKind::kSgdNesterov: {
      require(same_shape(state.velocity, params), "step: state does not match parameters");
      auto vel = entry_spans(state.velocity);
      for (std::size_t s = 0; s < theta.size(); ++s) {
        for (std::size_t i = 0; i < theta[s].size(); ++i) {
          vel[s][i] = hp.mu * vel[s][i] + hp.eta * g[s][i];
          theta[s][i] -= vel[s][i];
        }
      }
      break;
    }
    case OptimizerKind::kRmsprop: {
      require(same_shape(state.r, params), "step: state does not match parameters");
      auto r = entry_spans(state.r);
      for (std::size_t s = 0; s < theta.size(); ++s) {
        for (std::size_t i = 0; i < theta[s].size(); ++i) {
          r[s][i] = hp.rho * r[s][i] + (1.0 - hp.rho) * g[s][i] * g[s][i];
          const double denom =
              hp.canonical ? std::sqrt(r[s][i] + eps) : std::sqrt(r[s][i]) + eps;
          theta[s][i] -= hp.eta * g[s][i] / denom;
        }
      }
      break;
    }
    case OptimizerKind::kAdagrad: {
      require(same_shape(state.r, params), "step: state does not match parameters");
      auto r = entry_spans(state.r);
      for (std::size_t s = 0; s < theta.size(); ++s) {
        for (std::size_t i = 0; i < theta[s].size(); ++i) {
          r[s][i] += g[s][i] * g[s][i];
          const double denom =
              hp.canonical ? std::sqrt(r[s][i] + eps) : std::sqrt(r[s][i]) + eps;
          theta[s][i] -= hp.eta * g[s][i] / denom;
        }
      }
      break;
    }
    case OptimizerKind::kAdadelta: {
      require(same_shape(state.eg2, params), "step: state does not match parameters");
      auto eg2 = entry_spans(state.eg2);
      auto edx2 = entry_spans(state.edx2);
      for (std::size_t s = 0; s < theta.size(); ++s) {
        for (std::size_t i = 0; i < theta[s].size(); ++i) {
          eg2[s][i] = hp.rho * eg2[s][i] + (1.0 - hp.rho) * g[s][i] * g[s][i];
          const double delta =
              -std::sqrt(edx2[s][i] + eps) / std::sqrt(eg2[s][i] + eps) * g[s][i];
          edx2[s][i] = hp.rho * edx2[s][i] + (1.0 - hp.rho) * delta * delta;
          // The transcribed rule has no learning-rate multiplier; the
          // canonical variant scales the update by eta.
          theta[s][i] += hp.canonical ? hp.eta * delta : delta;
        }
      }
      break;
    }
    case OptimizerKind::kAdam:
    case OptimizerKind::kAdamw: {
      require(same_shape(state.m, params), "step: state does not match parameters");
      auto m = entry_spans(state.m);
      auto v = entry_spans(state.v);
      const double bc1 = 1.0 - std::pow(hp.beta1, t);
      const double bc2 = 1.0 - std::pow(hp.beta2, t);
      const bool decay = state.kind == OptimizerKind::kAdamw;
      for (std::size_t s = 0; s < theta.size(); ++s) {
        for (std::size_t i = 0; i < theta[s].size(); ++i) {
          m[s][i] = hp.beta1 * m[s][i] + (1.0 - hp.beta1) * g[s][i];
          v[s][i] = hp.beta2 * v[s][i] + (1.0 - hp.beta2) * g[s][i] * g[s][i];
          const double m_hat = m[s][i] / bc1;
          const double v_hat = v[s][i] / bc2;
          const double base = m_hat / (std::sqrt(v_hat) + eps);
          theta[s][i] -= decay ? hp.eta * (base + hp.lambda * theta[s][i]) : hp.eta * base;
        }
      }
      break;
    }
    case OptimizerKind::kAdamax: {
      require(same_shape(state.m, params), "step: state does not match parameters");
      auto m = entry_spans(state.m);
      auto u = entry_spans(state.u);
      // Canonical Adamax bias-corrects the first moment; the transcribed
      // rule does not.
      const double scale = hp.canonical ? hp.eta / (1.0 - std::pow(hp.beta1, t)) : hp.eta;
      for (std::size_t s = 0; s < theta.size(); ++s) {
        for (std::size_t i = 0; i < theta[s].size(); ++i) {
          m[s][i] = hp.beta1 * m[s][i] + (1.0 - hp.beta1) * g[s][i];
          u[s][i] = std::max(hp.beta2 * u[s][i], std::abs(g[s][i]));
          theta[s][i] -= scale / (u[s][i] + eps) * m[s][i];
        }
      }
      break;
    }
    case OptimizerKind::kAmsgrad: {
      require(same_shape(state.m, params), "step: state does not match parameters");
      auto m = entry_spans(state.m);
      auto v = entry_spans(state.v);
      auto vm = entry_spans(state.v_max);
      const double bc1 = 1.0 - std::pow(hp.beta1, t);
      const double bc2 = 1.0 - std::pow(hp.beta2, t);
      for (std::size_t s = 0; s < theta.size(); ++s) {
        for (std::size_t i = 0; i < theta[s].size(); ++i) {
          m[s][i] = hp.beta1 * m[s][i] + (1.0 - hp.beta1) * g[s][i];
          v[s][i] = hp.beta2 * v[s][i] + (1.0 - hp.beta2) * g[s][i] * g[s][i];
          vm[s][i] = std::max(vm[s][i], v[s][i]);
          if (hp.canonical) {
            // Textbook form: bias-corrected moments against the running max.
            theta[s][i] -= hp.eta * (m[s][i] / bc1) / (std::sqrt(vm[s][i] / bc2) + eps);
          } else {
            theta[s][i] -= hp.eta * m[s][i] / (std::sqrt(vm[s][i]) + eps);
          }
        }
      }
      break;
    }
    case OptimizerKind::kNadam: {
      require(same_shape(state.m, params), "step: state does not match parameters");
      auto m = entry_spans(state.m);
      auto v = entry_spans(state.v);
      const double bc1 = 1.0 - std::pow(hp.beta1, t);
      const double bc1_next = 1.0 - std::pow(hp.beta1, t + 1.0);
      const double bc2 = 1.0 - std::pow(hp.beta2, t);
      for (std::size_t s = 0; s < theta.size(); ++s) {
        for (std::size_t i = 0; i < theta[s].size(); ++i) {
          m[s][i] = hp.beta1 * m[s][i] + (1.0 - hp.beta1) * g[s][i];
          v[s][i] = hp.beta2 * v[s][i] + (1.0 - hp.beta2) * g[s][i] * g[s][i];
          if (hp.canonical) {
            const double inner =
                hp.beta1 * (m[s][i] / bc1_next) + (1.0 - hp.beta1) * g[s][i] / bc1;
            theta[s][i] -= hp.eta * inner / (std::sqrt(v[s][i] / bc2) + eps);
          } else {
            // As transcribed: epsilon inside the root, no second-moment
            // bias correction.
            const double inner = hp.beta1 * m[s][i] + (1.0 - hp.beta1) * g[s][i] / bc1;
            theta[s][i] -= hp.eta / std::sqrt(v[s][i] + eps) * inner;
          }
        }
      }
      break;
    }
  }
}

}  // namespace optbench
