#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "optbench/config.hpp"
#include "optbench/data.hpp"
#include "optbench/metrics.hpp"
#include "optbench/network.hpp"
#include "optbench/optim.hpp"

namespace optbench {

// Every random choice in an experiment flows from these four values; no
// ambient entropy anywhere.
struct Seeds {
  std::uint64_t init = 20240101;
  std::uint64_t shuffle = 20240102;
  std::uint64_t dropout = 20240103;
  std::uint64_t split = 20240104;
};

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::kSgd;
  HyperParams hyper;
};

struct EnhancedConfig {
  OptimizerKind optimizer = OptimizerKind::kRmsprop;
  double dropout_rate = 0.2;
  std::size_t patience = 15;
  std::vector<double> lr_grid = {0.001, 0.01, 0.1};
  std::size_t folds = 5;
};

struct ExperimentConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  Seeds seeds;
  NetworkConfig network;
  std::vector<OptimizerSpec> optimizers;  // run order; defaults to all ten
  EnhancedConfig enhanced;
  PipelineMode pipeline_mode = PipelineMode::kLeakageSafe;

  void validate() const;  // throws ConfigError
  static ExperimentConfig defaults();
  static ExperimentConfig from_kv(const KvFile& kv);
  KvFile to_kv() const;  // full echo; from_kv(to_kv()) round-trips
};

struct EarlyStoppingOptions {
  bool enabled = false;
  std::size_t patience = 15;
  bool restore_best = true;
};

struct TrainOptions {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double dropout_rate = 0.0;
  EarlyStoppingOptions early_stopping;
  std::uint64_t dropout_stream = 0;  // distinguishes mask streams across runs
};

// Patience counter over a validation-loss series. Only a strict new
// minimum resets the counter; stop fires once `patience` consecutive
// epochs pass without one.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience);

  // Returns true when training should stop after this epoch.
  bool observe(std::size_t epoch, double val_loss);

  bool improved_last() const { return improved_last_; }
  bool triggered() const { return triggered_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t counter_ = 0;
  std::size_t best_epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
  bool triggered_ = false;
  bool improved_last_ = false;
};

// Frozen initial parameters plus their canonical bytes and content hash;
// every run of a comparison restores from the same snapshot.
struct Snapshot {
  Params theta0;
  std::vector<std::uint8_t> bytes;
  std::uint64_t hash = 0;
};

Snapshot snapshot_init(const NetworkConfig& network, std::uint64_t seed);

struct RunReport {
  OptimizerKind kind = OptimizerKind::kSgd;
  HyperParams hyper;
  std::uint64_t theta0_hash = 0;

  EpochLog log;
  bool diverged = false;
  std::size_t divergence_epoch = 0;  // 0-based, valid when diverged
  bool early_stopped = false;
  std::size_t best_epoch = 0;  // epoch of the restored weights, when restoring

  // Summary values derived from the log; "final" refers to the weights the
  // run ends with, i.e. the best epoch when early stopping restores them.
  double final_train_loss = 0.0;
  double final_val_loss = 0.0;
  std::size_t convergence_epoch = 0;
  double stability = 0.0;

  // Test-set metrics (present when an evaluation set was supplied).
  bool evaluated = false;
  RatioMetric precision;
  RatioMetric recall;
  double auc = 0.0;

  double wall_seconds = 0.0;  // console display only, never serialized
  Params final_params;
};

// Restores theta0 from the snapshot, trains for opts.epochs (less with
// early stopping), logs per-epoch train loss (mean over mini-batch losses)
// and full-set validation loss, then computes threshold metrics and AUC on
// eval_set when given. A non-finite loss aborts the run and flags
// divergence instead of throwing.
RunReport train_run(const Snapshot& snapshot, const OptimizerSpec& spec,
                    const Dataset& train, const Dataset& validation,
                    const Dataset* eval_set, const TrainOptions& opts,
                    const Seeds& seeds);

// One train_run per configured optimizer, all restored from one snapshot
// built with seeds.init; plain 50-epoch protocol (no dropout, no early
// stopping). jobs = 0 means one worker per processor.
std::vector<RunReport> run_benchmark(const ExperimentConfig& config,
                                     const Dataset& data, const SplitIndices& splits,
                                     std::size_t jobs = 0);

struct GridPoint {
  double rate = 0.0;
  double final_val_loss = 0.0;
  bool diverged = false;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
};

struct GridResult {
  std::vector<GridPoint> points;  // in lr_grid order
  std::size_t best_index = 0;
  double best_rate = 0.0;
};

// Lowest final validation loss wins, ties broken toward the lower rate;
// diverged points never win. Throws GridError when every point diverged.
std::size_t pick_best_rate(std::span<const GridPoint> points);

// Early-stopped, dropout-enabled runs (one per grid rate) from a shared
// snapshot; the rate overrides the optimizer's eta.
GridResult grid_search(const ExperimentConfig& config, const Snapshot& snapshot,
                       OptimizerKind kind, const Dataset& train,
                       const Dataset& validation, std::size_t jobs = 0);

struct CvSummary {
  std::vector<RunReport> fold_runs;  // evaluated on the held-out fold
  double mean_auc = 0.0;
  double std_auc = 0.0;
  double mean_precision = 0.0;
  double std_precision = 0.0;
  double mean_recall = 0.0;
  double std_recall = 0.0;
  double mean_convergence_epoch = 0.0;
  std::size_t retrain_epochs = 0;
  RunReport final_run;  // retrained on the full pool, evaluated on test
};

// Stratified k-fold over the train+validation pool with a fresh seeded
// init per fold, then a final retrain on the whole pool for
// round(mean fold convergence epoch) + 1 epochs, evaluated once on test.
CvSummary cross_validate(const ExperimentConfig& config, OptimizerKind kind,
                         const HyperParams& hyper, const Dataset& pool,
                         const Dataset& test, std::size_t jobs = 0);

}  // namespace optbench
