#include "optbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "optbench/errors.hpp"

namespace optbench {

ConfusionCounts confusion(std::span<const double> y, std::span<const double> y_hat,
                          double threshold) {
  if (y.empty() || y.size() != y_hat.size()) {
    throw DomainError("confusion: labels and predictions must have equal positive length");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool predicted = y_hat[i] >= threshold;
    const bool actual = y[i] != 0.0;
    if (predicted && actual) ++c.tp;
    else if (predicted && !actual) ++c.fp;
    else if (!predicted && actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

RatioMetric precision(const ConfusionCounts& c) {
  const std::uint64_t denom = c.tp + c.fp;
  if (denom == 0) return {0.0, true};
  return {static_cast<double>(c.tp) / static_cast<double>(denom), false};
}

RatioMetric recall(const ConfusionCounts& c) {
  const std::uint64_t denom = c.tp + c.fn;
  if (denom == 0) return {0.0, true};
  return {static_cast<double>(c.tp) / static_cast<double>(denom), false};
}

double roc_auc(std::span<const double> y, std::span<const double> scores) {
  const std::size_t n = y.size();
  if (n == 0 || scores.size() != n) {
    throw DomainError("roc_auc: labels and scores must have equal positive length");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the 1-based midrank per element, kept integral across tie groups.
  std::vector<std::uint64_t> rank2(n);
  std::size_t lo = 0;
  while (lo < n) {
    std::size_t hi = lo + 1;
    while (hi < n && scores[order[hi]] == scores[order[lo]]) ++hi;
    for (std::size_t k = lo; k < hi; ++k) rank2[order[k]] = lo + 1 + hi;
    lo = hi;
  }

  std::uint64_t positives = 0;
  std::uint64_t rank2_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] != 0.0) {
      ++positives;
      rank2_sum += rank2[i];
    }
  }
  const std::uint64_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw DomainError("roc_auc: both classes must be present");
  }
  // rank2_sum - n1*(n1+1) equals twice the pair count (ties at half).
  const std::uint64_t twice_pairs = rank2_sum - positives * (positives + 1);
  return static_cast<double>(twice_pairs) /
         (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

std::size_t convergence_epoch(const EpochLog& log) {
  if (log.val_loss.empty()) throw DomainError("convergence_epoch: empty log");
  std::size_t best = 0;
  for (std::size_t i = 1; i < log.val_loss.size(); ++i) {
    if (log.val_loss[i] < log.val_loss[best]) best = i;
  }
  return best;
}

double stability(const EpochLog& log) {
  const std::size_t n = log.val_loss.size();
  if (n < 2) throw DomainError("stability: needs at least 2 epochs");
  double mean = 0.0;
  for (double v : log.val_loss) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : log.val_loss) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace optbench
