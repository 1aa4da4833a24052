#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace optbench {

// Per-epoch loss series for one training run; epoch indices are 0-based.
struct EpochLog {
  std::vector<double> train_loss;
  std::vector<double> val_loss;

  std::size_t epochs() const { return val_loss.size(); }
};

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
};

// A ratio that can be undefined; value is 0 with the degenerate flag set
// when the denominator is empty.
struct RatioMetric {
  double value = 0.0;
  bool degenerate = false;
};

// Predict positive iff y_hat >= threshold (ties count positive).
ConfusionCounts confusion(std::span<const double> y, std::span<const double> y_hat,
                          double threshold = 0.5);

RatioMetric precision(const ConfusionCounts& c);  // TP / (TP + FP)
RatioMetric recall(const ConfusionCounts& c);     // TP / (TP + FN)

// Mann-Whitney statistic: the fraction of (positive, negative) pairs ranked
// correctly, ties credited one half. Computed from tie-aware ranks in
// integer arithmetic, so it matches direct pair counting exactly.
// Throws DomainError unless both classes are present.
double roc_auc(std::span<const double> y, std::span<const double> scores);

// 0-based index of the minimum validation loss; earliest index on ties.
std::size_t convergence_epoch(const EpochLog& log);

// Sample standard deviation (divisor n-1) of the validation loss over all
// recorded epochs. Throws DomainError with fewer than 2 epochs.
double stability(const EpochLog& log);

}  // namespace optbench
