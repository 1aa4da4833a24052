#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "optbench/matrix.hpp"

namespace optbench {

// The twelve raw column names, in file order. The last one is the target.
inline constexpr std::array<std::string_view, 12> kRawHeader = {
    "age",          "sex",       "chest pain type", "resting bp s",
    "cholesterol",  "fasting blood sugar", "resting ecg", "max heart rate",
    "exercise angina", "oldpeak", "ST slope",        "target",
};

inline constexpr std::string_view kDroppedFeature = "fasting blood sugar";
inline constexpr std::array<std::string_view, 2> kImputedFeatures = {"cholesterol",
                                                                     "resting bp s"};

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t find_column(std::string_view name) const;  // npos when absent
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// Comma-delimited, one header row; the header must match kRawHeader
// exactly. Parse failures carry row/column context.
RawTable load_csv(const std::filesystem::path& path);

RawTable drop_feature(const RawTable& table, std::string_view name);

// Removes rows that are bitwise identical across all columns, keeping the
// first occurrence and the original relative order.
RawTable deduplicate(const RawTable& table);

// Replaces zero entries in the named columns with the column mean. The
// mean is taken over non-zero entries by default (literal_mean uses all
// entries), computed before any replacement.
RawTable impute_zeros_with_mean(const RawTable& table,
                                std::span<const std::string_view> columns,
                                bool literal_mean = false);

// Per-feature (x - median) / IQR with quantiles by linear interpolation.
struct ScalerParams {
  std::vector<double> median;
  std::vector<double> iqr;
  std::vector<bool> zero_iqr;  // flagged features were divided by 1
};

// Fits on fit_rows only, then scales every row of X in place.
ScalerParams robust_scale(Matrix& X, std::span<const std::size_t> fit_rows);

struct Dataset {
  Matrix X;
  std::vector<double> y;
  std::vector<std::string> feature_names;
  ScalerParams scaler;

  std::size_t size() const { return y.size(); }
};

Dataset slice(const Dataset& dataset, std::span<const std::size_t> rows);

struct SplitSpec {
  double test_fraction = 0.30;
  double validation_fraction_of_train = 0.20;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Per-class counts land within one sample of the exact fractions; the
// validation part is carved from the train portion. Row order within each
// part is shuffled by the seed. Throws SplitError when a class has fewer
// than 3 samples.
SplitIndices stratified_split(std::span<const double> y, const SplitSpec& spec);

// Stratified k near-equal folds; returns the index set of each fold.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const double> y,
                                                       std::size_t folds,
                                                       std::uint64_t seed);

// (count of y == 0, count of y == 1)
std::pair<std::size_t, std::size_t> class_distribution(std::span<const double> y);

enum class PipelineMode { kLeakageSafe, kPaperFaithful };

std::string_view pipeline_mode_name(PipelineMode mode);

struct StageCounts {
  std::size_t rows_in = 0;
  std::size_t columns_in = 0;
  std::size_t columns_after_drop = 0;
  std::size_t rows_after_dedup = 0;
  std::size_t duplicates_removed = 0;
  std::vector<std::pair<std::string, std::size_t>> imputed_zeros;  // per column
  std::size_t class0 = 0;
  std::size_t class1 = 0;
};

struct PipelineResult {
  Dataset dataset;  // X fully scaled
  SplitIndices splits;
  StageCounts counts;
  PipelineMode mode = PipelineMode::kLeakageSafe;
  std::uint64_t split_seed = 0;
};

// drop -> dedup -> impute, then split-before-scale (leakage-safe: scaler
// fit on the train part only) or scale-before-split (paper-faithful:
// scaler fit on all rows).
PipelineResult run_pipeline(const RawTable& raw, PipelineMode mode,
                            std::uint64_t split_seed);

// Binary dataset file (magic, dims, row-major X, y) plus a plain-text
// sidecar at <path>.meta holding names, scaler parameters, split indices
// and stage counts.
void save_dataset(const std::filesystem::path& path, const PipelineResult& result);
PipelineResult load_dataset(const std::filesystem::path& path);

}  // namespace optbench
