#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "optbench/errors.hpp"
#include "optbench/network.hpp"

using namespace optbench;

namespace {

// A 1-input, 1-hidden-unit, 1-output net small enough to evaluate by hand.
Params toy_net(double w1, double b1, double w2, double b2) {
  Params p;
  p.weights.push_back(Matrix::from_rows({{w1}}));
  p.biases.push_back({b1});
  p.weights.push_back(Matrix::from_rows({{w2}}));
  p.biases.push_back({b2});
  return p;
}

// A bare sigmoid unit: one affine layer straight into the output sigmoid.
Params sigmoid_unit(double w, double b) {
  Params p;
  p.weights.push_back(Matrix::from_rows({{w}}));
  p.biases.push_back({b});
  return p;
}

double loss_of(const Params& params, const Matrix& batch, const std::vector<double>& y) {
  const auto trace = forward(params, batch, RunMode::kEval);
  return bce_loss(y, trace.predictions());
}

// Test-side central differences with the same max-relative reduction the
// library uses; lets us compare against a deliberately corrupted gradient.
double compare_to_numeric(const Params& params, const Matrix& batch,
                          const std::vector<double>& y, const Gradients& analytic,
                          double h) {
  double worst = 0.0;
  Params probe = params;
  auto update = [&](double a, double& slot) {
    const double saved = slot;
    slot = saved + h;
    const double hi = loss_of(probe, batch, y);
    slot = saved - h;
    const double lo = loss_of(probe, batch, y);
    slot = saved;
    const double numeric = (hi - lo) / (2.0 * h);
    const double rel = std::fabs(a - numeric) /
                       std::max(1e-8, std::fabs(a) + std::fabs(numeric));
    worst = std::max(worst, rel);
  };
  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    for (std::size_t i = 0; i < probe.weights[l].size(); ++i) {
      update(analytic.weights[l].flat()[i], probe.weights[l].flat()[i]);
    }
    for (std::size_t i = 0; i < probe.biases[l].size(); ++i) {
      update(analytic.biases[l][i], probe.biases[l][i]);
    }
  }
  return worst;
}

// Smallest |pre-activation| across the hidden layers. Central differences
// are only trustworthy when every ReLU input sits clear of the kink.
double min_hidden_preact(const Params& params, const Matrix& batch) {
  const auto trace = forward(params, batch, RunMode::kEval);
  double closest = 1e300;
  for (std::size_t l = 0; l + 1 < trace.pre_activations.size(); ++l) {
    for (double z : trace.pre_activations[l].flat()) {
      closest = std::min(closest, std::fabs(z));
    }
  }
  return closest;
}

}  // namespace

TEST_CASE("config validation rejects degenerate settings") {
  NetworkConfig ok;
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.layer_count() == 7);

  NetworkConfig zero_input;
  zero_input.input_dim = 0;
  CHECK_THROWS_AS(zero_input.validate(), ConfigError);

  NetworkConfig no_hidden;
  no_hidden.hidden_sizes.clear();
  CHECK_THROWS_AS(no_hidden.validate(), ConfigError);

  NetworkConfig zero_width;
  zero_width.hidden_sizes = {16, 0, 8};
  CHECK_THROWS_AS(zero_width.validate(), ConfigError);

  NetworkConfig full_dropout;
  full_dropout.dropout_rate = 1.0;
  CHECK_THROWS_AS(full_dropout.validate(), ConfigError);
}

TEST_CASE("initialization produces the hourglass shape chain") {
  const NetworkConfig config;
  const Params p = glorot_init(config, 1);
  REQUIRE(p.weights.size() == 7);
  REQUIRE(p.biases.size() == 7);
  const std::size_t want[7][2] = {{16, 10}, {32, 16}, {64, 32}, {32, 64},
                                  {16, 32}, {8, 16},  {1, 8}};
  for (std::size_t l = 0; l < 7; ++l) {
    CHECK(p.weights[l].rows() == want[l][0]);
    CHECK(p.weights[l].cols() == want[l][1]);
    CHECK(p.biases[l].size() == want[l][0]);
  }
}

TEST_CASE("initialization is bounded, zero-biased, and seed-deterministic") {
  const NetworkConfig config;
  const Params a = glorot_init(config, 42);
  const Params b = glorot_init(config, 42);
  const Params c = glorot_init(config, 43);
  CHECK(serialize_params(a) == serialize_params(b));
  CHECK(serialize_params(a) != serialize_params(c));

  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    const double fan_out = static_cast<double>(a.weights[l].rows());
    const double fan_in = static_cast<double>(a.weights[l].cols());
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double w : a.weights[l].flat()) CHECK(std::fabs(w) <= limit);
    for (double bias : a.biases[l]) CHECK(bias == 0.0);
  }
}

TEST_CASE("parameter serialization round-trips and rejects damaged blobs") {
  const Params p = glorot_init(NetworkConfig{}, 99);
  const auto bytes = serialize_params(p);
  CHECK(deserialize_params(bytes) == p);
  CHECK(params_hash(p) == fnv1a64(bytes));

  auto bad_magic = bytes;
  bad_magic[0] ^= 0xFF;
  CHECK_THROWS_AS(deserialize_params(bad_magic), ConsistencyError);

  auto truncated = bytes;
  truncated.resize(truncated.size() - 5);
  CHECK_THROWS_AS(deserialize_params(truncated), ConsistencyError);

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(deserialize_params(trailing), ConsistencyError);

  Params q = p;
  q.weights[3](0, 0) += 1e-9;
  CHECK(params_hash(q) != params_hash(p));
}

TEST_CASE("fnv1a64 matches the published reference vectors") {
  CHECK(fnv1a64({}) == 0xcbf29ce484222325ULL);
  const std::uint8_t a[] = {'a'};
  CHECK(fnv1a64(a) == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("relu clips negatives and is identity on positives") {
  CHECK(relu(-1.0) == 0.0);
  CHECK(relu(0.0) == 0.0);
  CHECK(relu(2.5) == 2.5);
}

TEST_CASE("sigmoid is centered, symmetric, and saturation-safe") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(2.0) + sigmoid(-2.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sigmoid(40.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::isfinite(sigmoid(1000.0)));
  CHECK(std::isfinite(sigmoid(-1000.0)));
  CHECK(sigmoid(-1000.0) >= 0.0);
}

TEST_CASE("forward with all-zero parameters predicts 0.5 everywhere") {
  const NetworkConfig config;
  const Params zeros = zero_like(glorot_init(config, 1));
  Matrix batch(4, 10);
  for (std::size_t i = 0; i < batch.size(); ++i) batch.flat()[i] = double(i) - 7.0;
  const auto trace = forward(zeros, batch, RunMode::kEval);
  REQUIRE(trace.predictions().size() == 4);
  for (double y_hat : trace.predictions()) CHECK(y_hat == 0.5);
}

TEST_CASE("forward keeps predictions strictly inside (0,1)") {
  const NetworkConfig config;
  const Params p = glorot_init(config, 5);
  Rng rng(6);
  Matrix batch(16, 10);
  for (auto& v : batch.flat()) v = rng.normal(0.0, 3.0);
  const auto trace = forward(p, batch, RunMode::kEval);
  REQUIRE(trace.pre_activations.size() == 7);
  REQUIRE(trace.activations.size() == 8);
  CHECK(trace.activations.front() == batch);
  for (double y_hat : trace.predictions()) {
    CHECK(y_hat > 0.0);
    CHECK(y_hat < 1.0);
  }
}

TEST_CASE("forward names the offending layer on a width mismatch") {
  const Params p = glorot_init(NetworkConfig{}, 3);
  const Matrix narrow(2, 3);
  CHECK_THROWS_WITH_AS(forward(p, narrow, RunMode::kEval),
                       "forward: layer 1 expects input width 10, got 3",
                       DimensionError);
}

TEST_CASE("eval-mode forward is bit-identical across calls") {
  const Params p = glorot_init(NetworkConfig{}, 8);
  Rng rng(9);
  Matrix batch(5, 10);
  for (auto& v : batch.flat()) v = rng.normal(0.0, 1.0);
  const auto a = forward(p, batch, RunMode::kEval);
  const auto b = forward(p, batch, RunMode::kEval);
  CHECK(a.output() == b.output());
  CHECK(a.pre_activations == b.pre_activations);
  CHECK(a.dropout_masks.empty());
  CHECK(b.dropout_masks.empty());
}

TEST_CASE("batched forward equals row-by-row forward bitwise") {
  const Params p = glorot_init(NetworkConfig{}, 14);
  Rng rng(15);
  Matrix batch(3, 10);
  for (auto& v : batch.flat()) v = rng.normal(0.0, 1.0);
  const auto whole = forward(p, batch, RunMode::kEval);
  for (std::size_t r = 0; r < 3; ++r) {
    Matrix one(1, 10);
    for (std::size_t c = 0; c < 10; ++c) one(0, c) = batch(r, c);
    const auto single = forward(p, one, RunMode::kEval);
    CHECK(single.output()(0, 0) == whole.output()(r, 0));
  }
}

TEST_CASE("train-mode dropout matches a hand-applied mask on a toy net") {
  const Params p = toy_net(1.5, 0.25, 2.0, -0.3);
  const Matrix x = Matrix::from_rows({{0.8}});
  const double rate = 0.2;

  // Find one seed per branch so both the kept and the dropped path run.
  std::uint64_t keep_seed = 0, drop_seed = 0;
  bool have_keep = false, have_drop = false;
  for (std::uint64_t s = 1; !(have_keep && have_drop); ++s) {
    const double u = Rng(s).uniform();
    if (u >= rate && !have_keep) {
      keep_seed = s;
      have_keep = true;
    }
    if (u < rate && !have_drop) {
      drop_seed = s;
      have_drop = true;
    }
  }

  const std::pair<std::uint64_t, bool> branches[] = {{keep_seed, true}, {drop_seed, false}};
  for (const auto& [seed, kept] : branches) {
    Rng rng(seed);
    const auto trace = forward(p, x, RunMode::kTrain, rate, &rng);
    REQUIRE(trace.dropout_masks.size() == 1);
    const double mask = kept ? 1.0 / (1.0 - rate) : 0.0;
    CHECK(trace.dropout_masks[0](0, 0) == mask);
    const double z1 = 0.25 + 1.5 * 0.8;
    const double a1 = relu(z1) * mask;
    const double z2 = -0.3 + 2.0 * a1;
    CHECK(trace.output()(0, 0) == sigmoid(z2));
  }
}

TEST_CASE("train-mode dropout without a generator is rejected") {
  const Params p = toy_net(1.0, 0.0, 1.0, 0.0);
  const Matrix x = Matrix::from_rows({{1.0}});
  CHECK_THROWS_AS(forward(p, x, RunMode::kTrain, 0.2, nullptr), ConsistencyError);
  // Zero rate never draws, so no generator is needed.
  CHECK_NOTHROW(forward(p, x, RunMode::kTrain, 0.0, nullptr));
  // Eval mode ignores the rate entirely.
  const auto eval_trace = forward(p, x, RunMode::kEval, 0.2, nullptr);
  CHECK(eval_trace.dropout_masks.empty());
}

TEST_CASE("inverted dropout preserves activations in expectation") {
  // One identical row repeated 100k times gives 200k mask draws over the
  // two hidden units; the survivor scale must cancel the drop rate.
  Params p;
  p.weights.push_back(Matrix::from_rows({{1.0}, {0.5}}));
  p.biases.push_back({0.2, 0.4});
  p.weights.push_back(Matrix::from_rows({{1.0, 1.0}}));
  p.biases.push_back({0.0});

  constexpr std::size_t kRows = 100000;
  Matrix batch(kRows, 1, 2.0);
  const double rate = 0.25;
  Rng rng(31);
  const auto noisy = forward(p, batch, RunMode::kTrain, rate, &rng);
  const auto clean = forward(p, Matrix::from_rows({{2.0}}), RunMode::kEval);

  for (std::size_t unit = 0; unit < 2; ++unit) {
    double sum = 0.0;
    for (std::size_t r = 0; r < kRows; ++r) sum += noisy.activations[1](r, unit);
    const double expect = clean.activations[1](0, unit);
    CHECK(sum / kRows == doctest::Approx(expect).epsilon(0.01));
  }
}

TEST_CASE("bce_loss reproduces hand-computed values") {
  const std::vector<double> one = {1.0};
  CHECK(bce_loss(one, std::vector<double>{0.5}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const std::vector<double> y = {1.0, 0.0};
  const std::vector<double> y_hat = {0.9, 0.1};
  CHECK(bce_loss(y, y_hat) == doctest::Approx(-std::log(0.9)).epsilon(1e-12));
  CHECK(bce_loss(y, y_hat) == doctest::Approx(0.105361).epsilon(1e-5));
}

TEST_CASE("bce_loss clamps predictions at the probability extremes") {
  const std::vector<double> one = {1.0};
  const std::vector<double> zero = {0.0};
  // Confident and right: loss is positive but vanishing.
  const double near_zero = bce_loss(one, std::vector<double>{1.0});
  CHECK(near_zero == doctest::Approx(-std::log(1.0 - kBceClamp)).epsilon(1e-9));
  CHECK(near_zero > 0.0);
  CHECK(near_zero < 1e-6);
  // Confident and wrong: loss is capped by the clamp, not infinite.
  const double worst = bce_loss(one, std::vector<double>{0.0});
  CHECK(worst == doctest::Approx(-std::log(kBceClamp)).epsilon(1e-12));
  // The mirror case clamps at 1 - clamp, whose complement is only almost
  // the clamp in floating point, so the symmetry is near-exact.
  CHECK(bce_loss(zero, std::vector<double>{1.0}) == doctest::Approx(worst).epsilon(1e-9));
}

TEST_CASE("bce_loss rejects malformed inputs") {
  CHECK_THROWS_AS(bce_loss({}, {}), DomainError);
  CHECK_THROWS_AS(bce_loss(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}),
                  DomainError);
  CHECK_THROWS_AS(bce_loss(std::vector<double>{0.5}, std::vector<double>{0.5}),
                  DomainError);
}

TEST_CASE("backward on a bare sigmoid unit matches the hand result") {
  const Params p = sigmoid_unit(0.0, 0.0);
  const Matrix x = Matrix::from_rows({{1.0}});
  const auto trace = forward(p, x, RunMode::kEval);
  REQUIRE(trace.output()(0, 0) == 0.5);
  const auto grads = backward(p, trace, std::vector<double>{1.0});
  CHECK(grads.weights[0](0, 0) == -0.5);
  CHECK(grads.biases[0][0] == -0.5);
}

TEST_CASE("backward vanishes when predictions equal the labels") {
  const Params p = glorot_init(NetworkConfig{}, 17);
  Rng rng(18);
  Matrix batch(6, 10);
  for (auto& v : batch.flat()) v = rng.normal(0.0, 1.0);
  const auto trace = forward(p, batch, RunMode::kEval);
  // Feeding the predictions back as targets lands exactly on the loss
  // minimum, so every gradient entry must be zero.
  const auto grads = backward(p, trace, trace.predictions());
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    for (double g : grads.weights[l].flat()) CHECK(std::fabs(g) < 1e-12);
    for (double g : grads.biases[l]) CHECK(std::fabs(g) < 1e-12);
  }
}

TEST_CASE("backward agrees with central differences on a small net") {
  NetworkConfig config;
  config.input_dim = 10;
  config.hidden_sizes = {3};
  const Params p = glorot_init(config, 23);
  Rng rng(24);
  Matrix batch(4, 10);
  for (auto& v : batch.flat()) v = rng.normal(0.0, 1.0);
  const std::vector<double> y = {1.0, 0.0, 1.0, 1.0};
  REQUIRE(min_hidden_preact(p, batch) > 1e-3);
  CHECK(gradient_check(p, batch, y, 1e-5) < 1e-5);
}

TEST_CASE("gradient_check is tight on a smooth toy configuration") {
  // All-zero weights with a positive bias keep every ReLU input at 0.1,
  // safely away from the kink.
  Params p;
  p.weights.push_back(Matrix(2, 2, 0.0));
  p.biases.push_back({0.1, 0.1});
  p.weights.push_back(Matrix(1, 2, 0.0));
  p.biases.push_back({0.1});
  const Matrix batch = Matrix::from_rows({{1.0, -1.0}});
  CHECK(gradient_check(p, batch, std::vector<double>{1.0}, 1e-5) < 1e-6);
}

TEST_CASE("a corrupted gradient is flagged by the numeric comparison") {
  const Params p = sigmoid_unit(0.0, 0.0);
  const Matrix x = Matrix::from_rows({{1.0}});
  const std::vector<double> y = {1.0};
  auto grads = backward(p, forward(p, x, RunMode::kEval), y);
  CHECK(compare_to_numeric(p, x, y, grads, 1e-5) < 1e-6);
  grads.weights[0](0, 0) *= 2.0;  // -0.5 becomes -1.0
  CHECK(compare_to_numeric(p, x, y, grads, 1e-5) > 0.3);
}

TEST_CASE("gradient_check passes on a zero-input batch with positive biases") {
  NetworkConfig config;
  config.input_dim = 3;
  config.hidden_sizes = {4};
  Params p = glorot_init(config, 29);
  for (auto& layer : p.biases) {
    for (auto& b : layer) b = 0.1;
  }
  const Matrix batch(2, 3, 0.0);
  const std::vector<double> y = {1.0, 0.0};
  CHECK(gradient_check(p, batch, y, 1e-5) < 1e-5);
}

TEST_CASE("backward matches finite differences across many random nets") {
  Rng meta(4242);
  int checked = 0;
  for (std::uint64_t attempt = 0; attempt < 60 && checked < 20; ++attempt) {
    NetworkConfig config;
    config.input_dim = 2 + meta.below(5);
    config.hidden_sizes = {2 + meta.below(4), 2 + meta.below(3)};
    const Params p = glorot_init(config, 1000 + attempt);
    Rng rng(2000 + attempt);
    Matrix batch(3, config.input_dim);
    for (auto& v : batch.flat()) v = rng.normal(0.0, 1.0);
    std::vector<double> y(3);
    for (auto& label : y) label = rng.uniform() < 0.5 ? 0.0 : 1.0;
    // Skip draws whose ReLU inputs sit near the kink; central differences
    // are meaningless there and the subgradient choice is arbitrary.
    if (min_hidden_preact(p, batch) < 1e-3) continue;
    CHECK(gradient_check(p, batch, y, 1e-5) < 1e-5);
    ++checked;
  }
  CHECK(checked == 20);
}
