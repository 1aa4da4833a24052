#include "optbench/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

#include "optbench/errors.hpp"
#include "optbench/rng.hpp"

namespace optbench {
namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Which hyperparameter fields mean anything for a given optimizer; the
// config echo writes exactly these.
std::vector<std::string_view> relevant_fields(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd: return {"eta"};
    case OptimizerKind::kSgdNesterov: return {"eta", "mu"};
    case OptimizerKind::kRmsprop: return {"eta", "rho", "epsilon"};
    case OptimizerKind::kAdagrad: return {"eta", "epsilon"};
    case OptimizerKind::kAdadelta: return {"eta", "rho", "epsilon"};
    case OptimizerKind::kAdamw: return {"eta", "beta1", "beta2", "epsilon", "lambda"};
    default: return {"eta", "beta1", "beta2", "epsilon"};
  }
}

double field_value(const HyperParams& hp, std::string_view field) {
  if (field == "eta") return hp.eta;
  if (field == "beta1") return hp.beta1;
  if (field == "beta2") return hp.beta2;
  if (field == "rho") return hp.rho;
  if (field == "mu") return hp.mu;
  if (field == "epsilon") return hp.epsilon;
  return hp.lambda;
}

// Runs fn(0..count-1) on a worker pool; results must be written to
// pre-sized slots so scheduling order cannot leak into the output.
void parallel_runs(std::size_t count, std::size_t jobs,
                   const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, count);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (std::size_t j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) break;
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void require_disjoint(const SplitIndices& splits, std::size_t n) {
  std::vector<char> seen(n, 0);
  for (const auto* part : {&splits.train, &splits.validation, &splits.test}) {
    for (const std::size_t i : *part) {
      if (i >= n || seen[i])
        throw SplitError("split parts overlap or index " + std::to_string(i) +
                         " is out of range");
      seen[i] = 1;
    }
  }
}

double mean_of(std::span<const double> values) {
  double sum = 0.0;
  for (const double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = mean_of(values);
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace

void ExperimentConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  network.validate();
  if (optimizers.empty()) throw ConfigError("at least one optimizer must be configured");
  for (const auto& spec : optimizers) spec.hyper.validate(spec.kind);
  if (enhanced.lr_grid.empty()) throw ConfigError("enhanced.lr_grid must be non-empty");
  for (const double rate : enhanced.lr_grid)
    if (!(rate > 0.0)) throw ConfigError("enhanced.lr_grid rates must be positive");
  if (enhanced.folds < 2) throw ConfigError("enhanced.folds must be at least 2");
  if (enhanced.dropout_rate < 0.0 || enhanced.dropout_rate >= 1.0)
    throw ConfigError("enhanced.dropout_rate must lie in [0, 1)");
  if (enhanced.patience < 1) throw ConfigError("enhanced.patience must be at least 1");
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig cfg;
  cfg.optimizers.reserve(std::size(kAllOptimizers));
  for (const OptimizerKind kind : kAllOptimizers)
    cfg.optimizers.push_back({kind, default_hyperparams(kind)});
  return cfg;
}

ExperimentConfig ExperimentConfig::from_kv(const KvFile& kv) {
  ExperimentConfig cfg;
  cfg.epochs = kv.get_u64_or("epochs", cfg.epochs);
  cfg.batch_size = kv.get_u64_or("batch_size", cfg.batch_size);
  cfg.seeds.init = kv.get_u64_or("seeds.init", cfg.seeds.init);
  cfg.seeds.shuffle = kv.get_u64_or("seeds.shuffle", cfg.seeds.shuffle);
  cfg.seeds.dropout = kv.get_u64_or("seeds.dropout", cfg.seeds.dropout);
  cfg.seeds.split = kv.get_u64_or("seeds.split", cfg.seeds.split);

  const std::string mode = kv.get_string_or("pipeline.mode", "leakage_safe");
  if (mode == "paper_faithful") {
    cfg.pipeline_mode = PipelineMode::kPaperFaithful;
  } else if (mode == "leakage_safe") {
    cfg.pipeline_mode = PipelineMode::kLeakageSafe;
  } else {
    throw ConfigError("pipeline.mode must be paper_faithful or leakage_safe, got '" +
                      mode + "'");
  }

  std::vector<OptimizerKind> kinds;
  if (kv.has("optimizers")) {
    for (const auto& name : kv.get_list("optimizers")) {
      const auto kind = kind_from_name(name);
      if (!kind) throw ConfigError("unknown optimizer '" + name + "'");
      kinds.push_back(*kind);
    }
  } else {
    kinds.assign(std::begin(kAllOptimizers), std::end(kAllOptimizers));
  }
  for (const OptimizerKind kind : kinds) {
    OptimizerSpec spec{kind, default_hyperparams(kind)};
    const std::string prefix = "optim." + std::string(kind_name(kind)) + ".";
    spec.hyper.eta = kv.get_double_or(prefix + "eta", spec.hyper.eta);
    spec.hyper.beta1 = kv.get_double_or(prefix + "beta1", spec.hyper.beta1);
    spec.hyper.beta2 = kv.get_double_or(prefix + "beta2", spec.hyper.beta2);
    spec.hyper.rho = kv.get_double_or(prefix + "rho", spec.hyper.rho);
    spec.hyper.mu = kv.get_double_or(prefix + "mu", spec.hyper.mu);
    spec.hyper.epsilon = kv.get_double_or(prefix + "epsilon", spec.hyper.epsilon);
    spec.hyper.lambda = kv.get_double_or(prefix + "lambda", spec.hyper.lambda);
    spec.hyper.canonical = kv.get_bool_or(prefix + "canonical", spec.hyper.canonical);
    cfg.optimizers.push_back(spec);
  }

  const std::string enhanced_name = kv.get_string_or("enhanced.optimizer", "rmsprop");
  const auto enhanced_kind = kind_from_name(enhanced_name);
  if (!enhanced_kind)
    throw ConfigError("unknown optimizer '" + enhanced_name + "' for enhanced.optimizer");
  cfg.enhanced.optimizer = *enhanced_kind;
  cfg.enhanced.dropout_rate =
      kv.get_double_or("enhanced.dropout_rate", cfg.enhanced.dropout_rate);
  cfg.enhanced.patience = kv.get_u64_or("enhanced.patience", cfg.enhanced.patience);
  cfg.enhanced.folds = kv.get_u64_or("enhanced.folds", cfg.enhanced.folds);
  if (kv.has("enhanced.lr_grid")) cfg.enhanced.lr_grid = kv.get_double_list("enhanced.lr_grid");

  cfg.validate();
  return cfg;
}

KvFile ExperimentConfig::to_kv() const {
  KvFile kv;
  kv.set("epochs", std::to_string(epochs));
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("seeds.init", std::to_string(seeds.init));
  kv.set("seeds.shuffle", std::to_string(seeds.shuffle));
  kv.set("seeds.dropout", std::to_string(seeds.dropout));
  kv.set("seeds.split", std::to_string(seeds.split));
  kv.set("pipeline.mode", pipeline_mode_name(pipeline_mode));

  std::string names;
  for (const auto& spec : optimizers) {
    if (!names.empty()) names += ',';
    names += std::string(kind_name(spec.kind));
  }
  kv.set("optimizers", names);
  for (const auto& spec : optimizers) {
    const std::string prefix = "optim." + std::string(kind_name(spec.kind)) + ".";
    for (const auto field : relevant_fields(spec.kind))
      kv.set(prefix + std::string(field), format_double(field_value(spec.hyper, field)));
    kv.set(prefix + "canonical", spec.hyper.canonical ? "true" : "false");
  }

  kv.set("enhanced.optimizer", std::string(kind_name(enhanced.optimizer)));
  kv.set("enhanced.dropout_rate", format_double(enhanced.dropout_rate));
  kv.set("enhanced.patience", std::to_string(enhanced.patience));
  kv.set("enhanced.folds", std::to_string(enhanced.folds));
  std::string grid;
  for (const double rate : enhanced.lr_grid) {
    if (!grid.empty()) grid += ',';
    grid += format_double(rate);
  }
  kv.set("enhanced.lr_grid", grid);
  return kv;
}

EarlyStopper::EarlyStopper(std::size_t patience) : patience_(patience) {
  if (patience < 1) throw ConfigError("early-stopping patience must be at least 1");
}

bool EarlyStopper::observe(std::size_t epoch, double val_loss) {
  if (val_loss < best_loss_) {
    best_loss_ = val_loss;
    best_epoch_ = epoch;
    counter_ = 0;
    improved_last_ = true;
    return false;
  }
  improved_last_ = false;
  ++counter_;
  if (counter_ >= patience_) {
    triggered_ = true;
    return true;
  }
  return false;
}

Snapshot snapshot_init(const NetworkConfig& network, std::uint64_t seed) {
  network.validate();
  Snapshot snapshot;
  snapshot.theta0 = glorot_init(network, seed);
  snapshot.bytes = serialize_params(snapshot.theta0);
  snapshot.hash = fnv1a64(snapshot.bytes);
  return snapshot;
}

RunReport train_run(const Snapshot& snapshot, const OptimizerSpec& spec,
                    const Dataset& train, const Dataset& validation,
                    const Dataset* eval_set, const TrainOptions& opts,
                    const Seeds& seeds) {
  if (opts.batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (opts.dropout_rate < 0.0 || opts.dropout_rate >= 1.0)
    throw ConfigError("dropout_rate must lie in [0, 1)");
  spec.hyper.validate(spec.kind);
  if (params_hash(snapshot.theta0) != snapshot.hash)
    throw ConsistencyError("snapshot hash does not match its parameters");
  if (train.size() == 0) throw DomainError("train_run: empty training set");

  const auto started = std::chrono::steady_clock::now();

  RunReport report;
  report.kind = spec.kind;
  report.hyper = spec.hyper;
  report.theta0_hash = snapshot.hash;

  Params params = snapshot.theta0;
  OptimizerState state = make_state(spec.kind, params);
  Rng dropout_rng(mix_seed(seeds.dropout, opts.dropout_stream));
  EarlyStopper stopper(opts.early_stopping.enabled ? opts.early_stopping.patience : 1);
  Params best_params;
  const bool track_best = opts.early_stopping.enabled && opts.early_stopping.restore_best;

  const std::size_t n = train.size();
  std::vector<std::size_t> order(n);
  Matrix xb;
  std::vector<double> yb;

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng(mix_seed(seeds.shuffle, epoch)).shuffle(order);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += opts.batch_size) {
      const std::size_t end = std::min(start + opts.batch_size, n);
      const std::size_t rows = end - start;
      xb = Matrix(rows, train.X.cols());
      yb.resize(rows);
      for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t r = order[start + i];
        for (std::size_t c = 0; c < train.X.cols(); ++c) xb(i, c) = train.X(r, c);
        yb[i] = train.y[r];
      }

      // Nesterov evaluates the gradient at the look-ahead point; every
      // other rule evaluates it at the current parameters.
      const Params* at = &params;
      Params ahead;
      if (spec.kind == OptimizerKind::kSgdNesterov) {
        ahead = lookahead(state, spec.hyper, params);
        at = &ahead;
      }
      Rng* mask_rng = opts.dropout_rate > 0.0 ? &dropout_rng : nullptr;
      const ForwardTrace trace =
          forward(*at, xb, RunMode::kTrain, opts.dropout_rate, mask_rng);
      const std::vector<double> preds = trace.predictions();
      loss_sum += bce_loss(yb, preds);
      ++batches;
      const Gradients grads = backward(*at, trace, yb);
      step(state, spec.hyper, params, grads);
    }

    const double train_loss = loss_sum / static_cast<double>(batches);
    const ForwardTrace val_trace = forward(params, validation.X, RunMode::kEval);
    const double val_loss = bce_loss(validation.y, val_trace.predictions());
    report.log.train_loss.push_back(train_loss);
    report.log.val_loss.push_back(val_loss);

    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      report.diverged = true;
      report.divergence_epoch = epoch;
      break;
    }
    if (opts.early_stopping.enabled) {
      const bool stop = stopper.observe(epoch, val_loss);
      if (track_best && stopper.improved_last()) best_params = params;
      if (stop) {
        report.early_stopped = true;
        break;
      }
    }
  }

  std::size_t final_epoch = report.log.epochs() == 0 ? 0 : report.log.epochs() - 1;
  if (track_best && !report.diverged && report.log.epochs() > 0) {
    params = best_params;
    report.best_epoch = stopper.best_epoch();
    final_epoch = report.best_epoch;
  }
  report.final_params = params;

  if (!report.diverged && report.log.epochs() > 0) {
    report.final_train_loss = report.log.train_loss[final_epoch];
    report.final_val_loss = report.log.val_loss[final_epoch];
    report.convergence_epoch = convergence_epoch(report.log);
    report.stability = report.log.epochs() >= 2 ? stability(report.log) : 0.0;
  }
  if (eval_set && !report.diverged) {
    const ForwardTrace eval_trace = forward(params, eval_set->X, RunMode::kEval);
    const std::vector<double> scores = eval_trace.predictions();
    const ConfusionCounts counts = confusion(eval_set->y, scores);
    report.precision = precision(counts);
    report.recall = recall(counts);
    report.auc = roc_auc(eval_set->y, scores);
    report.evaluated = true;
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

std::vector<RunReport> run_benchmark(const ExperimentConfig& config, const Dataset& data,
                                     const SplitIndices& splits, std::size_t jobs) {
  config.validate();
  require_disjoint(splits, data.size());

  const Dataset train = slice(data, splits.train);
  const Dataset validation = slice(data, splits.validation);
  const Dataset test = slice(data, splits.test);
  const Snapshot snapshot = snapshot_init(config.network, config.seeds.init);

  TrainOptions opts;
  opts.epochs = config.epochs;
  opts.batch_size = config.batch_size;

  std::vector<RunReport> reports(config.optimizers.size());
  parallel_runs(config.optimizers.size(), jobs, [&](std::size_t i) {
    reports[i] =
        train_run(snapshot, config.optimizers[i], train, validation, &test, opts,
                  config.seeds);
  });
  return reports;
}

std::size_t pick_best_rate(std::span<const GridPoint> points) {
  if (points.empty()) throw GridError("learning-rate grid is empty");
  std::size_t best = points.size();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].diverged) continue;
    if (best == points.size() || points[i].final_val_loss < points[best].final_val_loss ||
        (points[i].final_val_loss == points[best].final_val_loss &&
         points[i].rate < points[best].rate)) {
      best = i;
    }
  }
  if (best == points.size()) throw GridError("every learning rate diverged");
  return best;
}

GridResult grid_search(const ExperimentConfig& config, const Snapshot& snapshot,
                       OptimizerKind kind, const Dataset& train,
                       const Dataset& validation, std::size_t jobs) {
  config.validate();
  HyperParams base = default_hyperparams(kind);
  for (const auto& spec : config.optimizers)
    if (spec.kind == kind) base = spec.hyper;

  TrainOptions opts;
  opts.epochs = config.epochs;
  opts.batch_size = config.batch_size;
  opts.dropout_rate = config.enhanced.dropout_rate;
  opts.early_stopping = {true, config.enhanced.patience, true};

  GridResult result;
  result.points.resize(config.enhanced.lr_grid.size());
  parallel_runs(config.enhanced.lr_grid.size(), jobs, [&](std::size_t i) {
    HyperParams hp = base;
    hp.eta = config.enhanced.lr_grid[i];
    const RunReport run =
        train_run(snapshot, {kind, hp}, train, validation, nullptr, opts, config.seeds);
    GridPoint& point = result.points[i];
    point.rate = hp.eta;
    point.diverged = run.diverged;
    point.final_val_loss =
        run.diverged ? std::numeric_limits<double>::infinity() : run.final_val_loss;
    point.epochs_run = run.log.epochs();
    point.best_epoch = run.best_epoch;
  });
  result.best_index = pick_best_rate(result.points);
  result.best_rate = result.points[result.best_index].rate;
  return result;
}

CvSummary cross_validate(const ExperimentConfig& config, OptimizerKind kind,
                         const HyperParams& hyper, const Dataset& pool,
                         const Dataset& test, std::size_t jobs) {
  config.validate();
  const auto folds =
      stratified_kfold(pool.y, config.enhanced.folds, mix_seed(config.seeds.split, 31));
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto [zeros, ones] = class_distribution(slice(pool, folds[f]).y);
    if (zeros == 0 || ones == 0)
      throw FoldError("fold " + std::to_string(f) + " lacks one of the classes");
  }

  TrainOptions opts;
  opts.epochs = config.epochs;
  opts.batch_size = config.batch_size;
  opts.dropout_rate = config.enhanced.dropout_rate;
  opts.early_stopping = {true, config.enhanced.patience, true};

  CvSummary summary;
  summary.fold_runs.resize(folds.size());
  parallel_runs(folds.size(), jobs, [&](std::size_t f) {
    std::vector<char> in_fold(pool.size(), 0);
    for (const std::size_t i : folds[f]) in_fold[i] = 1;
    std::vector<std::size_t> train_idx;
    train_idx.reserve(pool.size() - folds[f].size());
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (!in_fold[i]) train_idx.push_back(i);

    const Dataset fold_train = slice(pool, train_idx);
    const Dataset fold_val = slice(pool, folds[f]);
    const Snapshot fold_snapshot =
        snapshot_init(config.network, mix_seed(config.seeds.init, f + 1));
    TrainOptions fold_opts = opts;
    fold_opts.dropout_stream = f + 1;
    summary.fold_runs[f] = train_run(fold_snapshot, {kind, hyper}, fold_train, fold_val,
                                     &fold_val, fold_opts, config.seeds);
  });

  std::vector<double> aucs, precisions, recalls, conv_epochs;
  for (const RunReport& run : summary.fold_runs) {
    if (run.diverged) continue;
    aucs.push_back(run.auc);
    precisions.push_back(run.precision.value);
    recalls.push_back(run.recall.value);
    conv_epochs.push_back(static_cast<double>(run.convergence_epoch));
  }
  if (aucs.empty()) throw FoldError("every cross-validation fold diverged");
  summary.mean_auc = mean_of(aucs);
  summary.std_auc = sample_std(aucs);
  summary.mean_precision = mean_of(precisions);
  summary.std_precision = sample_std(precisions);
  summary.mean_recall = mean_of(recalls);
  summary.std_recall = sample_std(recalls);
  summary.mean_convergence_epoch = mean_of(conv_epochs);

  summary.retrain_epochs =
      static_cast<std::size_t>(std::llround(summary.mean_convergence_epoch)) + 1;
  const Snapshot final_snapshot =
      snapshot_init(config.network, mix_seed(config.seeds.init, 0));
  TrainOptions final_opts;
  final_opts.epochs = summary.retrain_epochs;
  final_opts.batch_size = config.batch_size;
  final_opts.dropout_rate = config.enhanced.dropout_rate;
  // The final run has fixed length, so the test series it logs is
  // monitoring only; no training decision depends on it.
  summary.final_run = train_run(final_snapshot, {kind, hyper}, pool, test, &test,
                                final_opts, config.seeds);
  return summary;
}

}  // namespace optbench
