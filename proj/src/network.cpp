#include "optbench/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "optbench/errors.hpp"

namespace optbench {

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

std::uint64_t take_u64(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (pos + 8 > bytes.size()) throw ConsistencyError("parameter blob truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
  pos += 8;
  return v;
}

double take_f64(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  const std::uint64_t bits = take_u64(bytes, pos);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

constexpr std::uint8_t kParamsMagic[8] = {'O', 'B', 'P', 'A', 'R', 'A', 'M', '1'};

}  // namespace

void NetworkConfig::validate() const {
  if (input_dim == 0) throw ConfigError("network: input_dim must be positive");
  if (hidden_sizes.empty()) throw ConfigError("network: hidden_sizes must be non-empty");
  for (std::size_t s : hidden_sizes) {
    if (s == 0) throw ConfigError("network: hidden layer width must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("network: dropout_rate must lie in [0, 1)");
  }
}

std::vector<std::uint8_t> serialize_params(const Params& params) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), std::begin(kParamsMagic), std::end(kParamsMagic));
  put_u64(out, params.weights.size());
  for (const Matrix& w : params.weights) {
    put_u64(out, w.rows());
    put_u64(out, w.cols());
  }
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    for (double v : params.weights[l].flat()) put_f64(out, v);
    for (double v : params.biases[l]) put_f64(out, v);
  }
  return out;
}

Params deserialize_params(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  if (bytes.size() < 8 || !std::equal(std::begin(kParamsMagic), std::end(kParamsMagic), bytes.begin())) {
    throw ConsistencyError("parameter blob: bad magic");
  }
  pos = 8;
  const std::uint64_t layers = take_u64(bytes, pos);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> shapes(layers);
  for (auto& [r, c] : shapes) {
    r = take_u64(bytes, pos);
    c = take_u64(bytes, pos);
  }
  Params p;
  for (const auto& [r, c] : shapes) {
    Matrix w(r, c);
    for (double& v : w.flat()) v = take_f64(bytes, pos);
    std::vector<double> b(r);
    for (double& v : b) v = take_f64(bytes, pos);
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  if (pos != bytes.size()) throw ConsistencyError("parameter blob: trailing bytes");
  return p;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t params_hash(const Params& params) {
  const auto bytes = serialize_params(params);
  return fnv1a64(bytes);
}

Params zero_like(const Params& shape) {
  Params p;
  p.weights.reserve(shape.weights.size());
  p.biases.reserve(shape.biases.size());
  for (std::size_t l = 0; l < shape.weights.size(); ++l) {
    p.weights.emplace_back(shape.weights[l].rows(), shape.weights[l].cols());
    p.biases.emplace_back(shape.biases[l].size(), 0.0);
  }
  return p;
}

bool same_shape(const Params& a, const Params& b) {
  if (a.weights.size() != b.weights.size()) return false;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if (a.weights[l].rows() != b.weights[l].rows()) return false;
    if (a.weights[l].cols() != b.weights[l].cols()) return false;
    if (a.biases[l].size() != b.biases[l].size()) return false;
  }
  return true;
}

bool params_all_finite(const Params& params) {
  for (const Matrix& w : params.weights) {
    if (!w.all_finite()) return false;
  }
  for (const auto& b : params.biases) {
    for (double v : b) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

std::vector<double> ForwardTrace::predictions() const {
  const Matrix& out = output();
  std::vector<double> y(out.rows());
  for (std::size_t i = 0; i < out.rows(); ++i) y[i] = out(i, 0);
  return y;
}

double relu(double z) { return z > 0.0 ? z : 0.0; }

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Params glorot_init(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  std::vector<std::size_t> dims;
  dims.push_back(config.input_dim);
  dims.insert(dims.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
  dims.push_back(1);

  Rng rng(seed);
  Params p;
  for (std::size_t l = 1; l < dims.size(); ++l) {
    const std::size_t fan_in = dims[l - 1];
    const std::size_t fan_out = dims[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (double& v : w.flat()) v = rng.uniform(-limit, limit);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(fan_out, 0.0);
  }
  return p;
}

ForwardTrace forward(const Params& params, const Matrix& batch, RunMode mode,
                     double dropout_rate, Rng* rng) {
  const std::size_t layers = params.layer_count();
  if (layers == 0) throw DimensionError("forward: empty parameter set");
  const bool training = mode == RunMode::kTrain;
  const bool use_dropout = training && dropout_rate > 0.0;
  if (use_dropout && rng == nullptr) {
    throw ConsistencyError("forward: dropout requires a generator in train mode");
  }

  ForwardTrace trace;
  trace.training = training;
  trace.activations.push_back(batch);

  const Matrix* current = &trace.activations.front();
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& w = params.weights[l];
    const std::vector<double>& b = params.biases[l];
    if (current->cols() != w.cols()) {
      throw DimensionError("forward: layer " + std::to_string(l + 1) + " expects input width " +
                           std::to_string(w.cols()) + ", got " + std::to_string(current->cols()));
    }
    const std::size_t n = current->rows();
    Matrix z(n, w.rows());
    for (std::size_t i = 0; i < n; ++i) {
      const auto in_row = current->row(i);
      for (std::size_t o = 0; o < w.rows(); ++o) {
        const auto w_row = w.row(o);
        double acc = b[o];
        for (std::size_t k = 0; k < w_row.size(); ++k) acc += in_row[k] * w_row[k];
        z(i, o) = acc;
      }
    }

    Matrix a(n, w.rows());
    const bool is_output = l + 1 == layers;
    if (is_output) {
      for (std::size_t i = 0; i < z.size(); ++i) a.flat()[i] = sigmoid(z.flat()[i]);
    } else if (use_dropout) {
      const double keep_scale = 1.0 / (1.0 - dropout_rate);
      Matrix mask(n, w.rows());
      for (std::size_t i = 0; i < z.size(); ++i) {
        mask.flat()[i] = rng->uniform() >= dropout_rate ? keep_scale : 0.0;
        a.flat()[i] = relu(z.flat()[i]) * mask.flat()[i];
      }
      trace.dropout_masks.push_back(std::move(mask));
    } else {
      for (std::size_t i = 0; i < z.size(); ++i) a.flat()[i] = relu(z.flat()[i]);
    }
    trace.pre_activations.push_back(std::move(z));
    trace.activations.push_back(std::move(a));
    current = &trace.activations.back();
  }
  return trace;
}

double bce_loss(std::span<const double> y, std::span<const double> y_hat) {
  if (y.empty() || y.size() != y_hat.size()) {
    throw DomainError("bce_loss: labels and predictions must have equal positive length");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw DomainError("bce_loss: label at index " + std::to_string(i) + " is not 0 or 1");
    }
    const double p = std::clamp(y_hat[i], kBceClamp, 1.0 - kBceClamp);
    acc += y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
  }
  return -acc / static_cast<double>(y.size());
}

Gradients backward(const Params& params, const ForwardTrace& trace,
                   std::span<const double> y) {
  const std::size_t layers = params.layer_count();
  if (trace.activations.size() != layers + 1 || trace.pre_activations.size() != layers) {
    throw ConsistencyError("backward: trace does not match parameter layout");
  }
  for (std::size_t l = 0; l < layers; ++l) {
    if (trace.pre_activations[l].cols() != params.weights[l].rows() ||
        trace.activations[l].cols() != params.weights[l].cols()) {
      throw ConsistencyError("backward: trace shape mismatch at layer " + std::to_string(l + 1));
    }
  }
  const std::size_t n = trace.batch_size();
  if (y.size() != n) throw ConsistencyError("backward: label count does not match batch");
  const bool masked = !trace.dropout_masks.empty();
  if (masked && trace.dropout_masks.size() != layers - 1) {
    throw ConsistencyError("backward: dropout mask count does not match hidden layers");
  }

  Gradients grads = zero_like(params);

  // dL/dz at the sigmoid output for mean BCE.
  Matrix delta(n, 1);
  const Matrix& y_hat = trace.output();
  for (std::size_t i = 0; i < n; ++i) {
    delta(i, 0) = (y_hat(i, 0) - y[i]) / static_cast<double>(n);
  }

  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& a_prev = trace.activations[l];
    Matrix& dw = grads.weights[l];
    std::vector<double>& db = grads.biases[l];
    for (std::size_t i = 0; i < n; ++i) {
      const auto d_row = delta.row(i);
      const auto a_row = a_prev.row(i);
      for (std::size_t o = 0; o < d_row.size(); ++o) {
        db[o] += d_row[o];
        const auto w_row = dw.row(o);
        for (std::size_t k = 0; k < a_row.size(); ++k) w_row[k] += d_row[o] * a_row[k];
      }
    }
    if (l == 0) break;

    const Matrix& w = params.weights[l];
    const Matrix& z_prev = trace.pre_activations[l - 1];
    Matrix next(n, w.cols());
    for (std::size_t i = 0; i < n; ++i) {
      const auto d_row = delta.row(i);
      const auto out_row = next.row(i);
      for (std::size_t k = 0; k < w.cols(); ++k) {
        double acc = 0.0;
        for (std::size_t o = 0; o < w.rows(); ++o) acc += d_row[o] * w(o, k);
        // ReLU subgradient is 0 at z == 0.
        if (z_prev(i, k) <= 0.0) acc = 0.0;
        if (masked) acc *= trace.dropout_masks[l - 1](i, k);
        out_row[k] = acc;
      }
    }
    delta = std::move(next);
  }
  return grads;
}

double gradient_check(const Params& params, const Matrix& batch,
                      std::span<const double> y, double h) {
  if (h <= 0.0) throw DomainError("gradient_check: step must be positive");
  if (batch.rows() == 0) throw DomainError("gradient_check: batch must be non-empty");

  const ForwardTrace trace = forward(params, batch, RunMode::kEval);
  const Gradients analytic = backward(params, trace, y);

  Params probe = params;
  const auto loss_at = [&](void) {
    const ForwardTrace t = forward(probe, batch, RunMode::kEval);
    return bce_loss(y, t.predictions());
  };

  double worst = 0.0;
  const auto check_entry = [&](double& value, double grad) {
    const double saved = value;
    value = saved + h;
    const double up = loss_at();
    value = saved - h;
    const double down = loss_at();
    value = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max(1e-8, std::abs(grad) + std::abs(numeric));
    worst = std::max(worst, std::abs(grad - numeric) / denom);
  };

  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    auto w = probe.weights[l].flat();
    const auto gw = analytic.weights[l].flat();
    for (std::size_t i = 0; i < w.size(); ++i) check_entry(w[i], gw[i]);
    auto& b = probe.biases[l];
    const auto& gb = analytic.biases[l];
    for (std::size_t i = 0; i < b.size(); ++i) check_entry(b[i], gb[i]);
  }
  return worst;
}

}  // namespace optbench
