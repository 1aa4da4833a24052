#include "optbench/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "optbench/errors.hpp"
#include "optbench/rng.hpp"

namespace optbench {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

double parse_number(const std::string& cell, const std::filesystem::path& path,
                    std::size_t line_no, const std::string& column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || cell.empty()) {
    throw IngestError(path.string() + ":" + std::to_string(line_no) + ": column '" +
                      column + "': cannot parse '" + cell + "' as a number");
  }
  return value;
}

std::string row_key(const std::vector<double>& row) {
  std::string key(row.size() * sizeof(double), '\0');
  std::memcpy(key.data(), row.data(), key.size());
  return key;
}

// Quantile of a sorted sample with linear interpolation between order
// statistics: h = (n-1)q, result = s[floor(h)] + frac(h) * (s[floor(h)+1] - s[floor(h)]).
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = static_cast<double>(n - 1) * q;
  const auto lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

void require_binary_labels(std::span<const double> y, const char* who) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw DomainError(std::string(who) + ": label at row " + std::to_string(i) +
                        " is " + std::to_string(y[i]) + ", expected 0 or 1");
    }
  }
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(out, bits);
}

std::uint64_t take_u64(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw ConsistencyError("dataset file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 8;
  return v;
}

double take_f64(const std::string& in, std::size_t& pos) {
  const std::uint64_t bits = take_u64(in, pos);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

constexpr char kDatasetMagic[8] = {'O', 'B', 'D', 'A', 'T', 'A', '0', '1'};

}  // namespace

std::size_t RawTable::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return npos;
}

RawTable load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;

  RawTable table;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);

    if (table.header.empty()) {
      if (fields.size() != kRawHeader.size()) {
        throw IngestError(path.string() + ": header has " +
                          std::to_string(fields.size()) + " columns, expected " +
                          std::to_string(kRawHeader.size()));
      }
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] != kRawHeader[i]) {
          throw IngestError(path.string() + ": header column " + std::to_string(i + 1) +
                            " is '" + fields[i] + "', expected '" +
                            std::string(kRawHeader[i]) + "'");
        }
      }
      table.header = std::move(fields);
      continue;
    }

    if (fields.size() != table.header.size()) {
      throw IngestError(path.string() + ":" + std::to_string(line_no) + ": row has " +
                        std::to_string(fields.size()) + " columns, expected " +
                        std::to_string(table.header.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i)
      row[i] = parse_number(fields[i], path, line_no, table.header[i]);
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw IngestError("'" + path.string() + "' is empty");
  if (table.rows.empty())
    throw IngestError("'" + path.string() + "' has a header but no data rows");
  return table;
}

RawTable drop_feature(const RawTable& table, std::string_view name) {
  const std::size_t col = table.find_column(name);
  if (col == RawTable::npos)
    throw ConfigError("cannot drop unknown column '" + std::string(name) + "'");
  RawTable out;
  out.header.reserve(table.header.size() - 1);
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (i != col) out.header.push_back(table.header[i]);
  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    std::vector<double> kept;
    kept.reserve(row.size() - 1);
    for (std::size_t i = 0; i < row.size(); ++i)
      if (i != col) kept.push_back(row[i]);
    out.rows.push_back(std::move(kept));
  }
  return out;
}

RawTable deduplicate(const RawTable& table) {
  RawTable out;
  out.header = table.header;
  std::unordered_set<std::string> seen;
  seen.reserve(table.rows.size() * 2);
  for (const auto& row : table.rows)
    if (seen.insert(row_key(row)).second) out.rows.push_back(row);
  return out;
}

RawTable impute_zeros_with_mean(const RawTable& table,
                                std::span<const std::string_view> columns,
                                bool literal_mean) {
  RawTable out = table;
  for (const auto& name : columns) {
    const std::size_t col = out.find_column(name);
    if (col == RawTable::npos)
      throw ImputeError("cannot impute unknown column '" + std::string(name) + "'");

    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& row : out.rows) {
      if (literal_mean || row[col] != 0.0) {
        sum += row[col];
        ++count;
      }
    }
    if (count == 0) {
      throw ImputeError("column '" + std::string(name) +
                        "' is entirely zero; its non-zero mean is undefined");
    }
    const double mean = sum / static_cast<double>(count);
    for (auto& row : out.rows)
      if (row[col] == 0.0) row[col] = mean;
  }
  return out;
}

ScalerParams robust_scale(Matrix& X, std::span<const std::size_t> fit_rows) {
  if (fit_rows.empty()) throw DomainError("robust_scale: no rows to fit on");
  for (const auto r : fit_rows) {
    if (r >= X.rows())
      throw DomainError("robust_scale: fit row " + std::to_string(r) + " out of range");
  }

  ScalerParams params;
  params.median.resize(X.cols());
  params.iqr.resize(X.cols());
  params.zero_iqr.assign(X.cols(), false);

  std::vector<double> column(fit_rows.size());
  for (std::size_t c = 0; c < X.cols(); ++c) {
    for (std::size_t k = 0; k < fit_rows.size(); ++k) column[k] = X(fit_rows[k], c);
    std::sort(column.begin(), column.end());
    params.median[c] = quantile_sorted(column, 0.50);
    params.iqr[c] = quantile_sorted(column, 0.75) - quantile_sorted(column, 0.25);
    params.zero_iqr[c] = params.iqr[c] == 0.0;
    const double denom = params.zero_iqr[c] ? 1.0 : params.iqr[c];
    for (std::size_t r = 0; r < X.rows(); ++r)
      X(r, c) = (X(r, c) - params.median[c]) / denom;
  }
  return params;
}

Dataset slice(const Dataset& dataset, std::span<const std::size_t> rows) {
  Dataset out;
  out.feature_names = dataset.feature_names;
  out.scaler = dataset.scaler;
  out.X = Matrix(rows.size(), dataset.X.cols());
  out.y.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    if (r >= dataset.size())
      throw DomainError("slice: row " + std::to_string(r) + " out of range");
    for (std::size_t c = 0; c < dataset.X.cols(); ++c) out.X(i, c) = dataset.X(r, c);
    out.y[i] = dataset.y[r];
  }
  return out;
}

SplitIndices stratified_split(std::span<const double> y, const SplitSpec& spec) {
  if (y.empty()) throw SplitError("cannot split an empty label set");
  if (spec.test_fraction <= 0.0 || spec.test_fraction >= 1.0)
    throw SplitError("test fraction must lie in (0, 1)");
  if (spec.validation_fraction_of_train < 0.0 || spec.validation_fraction_of_train >= 1.0)
    throw SplitError("validation fraction must lie in [0, 1)");
  require_binary_labels(y, "stratified_split");

  SplitIndices out;
  auto take = [&](std::vector<std::size_t>& indices) {
    // test first, then validation, remainder is train
    const auto n = indices.size();
    const auto n_test =
        static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
    const std::size_t pool = n - n_test;
    const auto n_val = static_cast<std::size_t>(
        std::llround(spec.validation_fraction_of_train * static_cast<double>(pool)));
    out.test.insert(out.test.end(), indices.begin(), indices.begin() + n_test);
    out.validation.insert(out.validation.end(), indices.begin() + n_test,
                          indices.begin() + n_test + n_val);
    out.train.insert(out.train.end(), indices.begin() + n_test + n_val, indices.end());
  };

  if (spec.stratified) {
    for (const double label : {0.0, 1.0}) {
      std::vector<std::size_t> indices;
      for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == label) indices.push_back(i);
      if (indices.size() < 3) {
        throw SplitError("class " + std::to_string(static_cast<int>(label)) + " has " +
                         std::to_string(indices.size()) +
                         " samples; at least 3 are required to stratify");
      }
      Rng class_rng(mix_seed(spec.seed, 101 + static_cast<std::uint64_t>(label)));
      class_rng.shuffle(indices);
      take(indices);
    }
  } else {
    std::vector<std::size_t> indices(y.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    Rng rng(mix_seed(spec.seed, 7));
    rng.shuffle(indices);
    take(indices);
  }

  // break up the per-class blocks so each part is in a seeded random order
  Rng(mix_seed(spec.seed, 11)).shuffle(out.train);
  Rng(mix_seed(spec.seed, 12)).shuffle(out.validation);
  Rng(mix_seed(spec.seed, 13)).shuffle(out.test);

  if (out.train.empty() || out.test.empty())
    throw SplitError("split produced an empty train or test part");
  return out;
}

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const double> y,
                                                       std::size_t folds,
                                                       std::uint64_t seed) {
  if (folds < 2) throw FoldError("need at least 2 folds");
  require_binary_labels(y, "stratified_kfold");

  std::vector<std::vector<std::size_t>> out(folds);
  // Deal each class round-robin, continuing from where the previous class
  // stopped, so overall fold sizes stay within one of each other while
  // per-class counts stay within one of the stratified ideal.
  std::size_t offset = 0;
  for (const double label : {0.0, 1.0}) {
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == label) indices.push_back(i);
    if (indices.size() < folds) {
      throw FoldError("class " + std::to_string(static_cast<int>(label)) + " has " +
                      std::to_string(indices.size()) + " samples, fewer than " +
                      std::to_string(folds) + " folds");
    }
    Rng class_rng(mix_seed(seed, 201 + static_cast<std::uint64_t>(label)));
    class_rng.shuffle(indices);
    for (std::size_t i = 0; i < indices.size(); ++i)
      out[(offset + i) % folds].push_back(indices[i]);
    offset = (offset + indices.size()) % folds;
  }
  for (auto& fold : out) std::sort(fold.begin(), fold.end());
  return out;
}

std::pair<std::size_t, std::size_t> class_distribution(std::span<const double> y) {
  require_binary_labels(y, "class_distribution");
  std::size_t zeros = 0;
  for (const double v : y)
    if (v == 0.0) ++zeros;
  return {zeros, y.size() - zeros};
}

std::string_view pipeline_mode_name(PipelineMode mode) {
  return mode == PipelineMode::kLeakageSafe ? "leakage_safe" : "paper_faithful";
}

PipelineResult run_pipeline(const RawTable& raw, PipelineMode mode,
                            std::uint64_t split_seed) {
  PipelineResult result;
  result.mode = mode;
  result.split_seed = split_seed;
  result.counts.rows_in = raw.rows.size();
  result.counts.columns_in = raw.header.size();

  const RawTable dropped = drop_feature(raw, kDroppedFeature);
  result.counts.columns_after_drop = dropped.header.size();

  const RawTable deduped = deduplicate(dropped);
  result.counts.rows_after_dedup = deduped.rows.size();
  result.counts.duplicates_removed = dropped.rows.size() - deduped.rows.size();

  for (const auto& name : kImputedFeatures) {
    const std::size_t col = deduped.find_column(name);
    if (col == RawTable::npos)
      throw ImputeError("cannot impute unknown column '" + std::string(name) + "'");
    std::size_t zeros = 0;
    for (const auto& row : deduped.rows)
      if (row[col] == 0.0) ++zeros;
    result.counts.imputed_zeros.emplace_back(std::string(name), zeros);
  }
  const RawTable imputed =
      impute_zeros_with_mean(deduped, std::span(kImputedFeatures.data(), kImputedFeatures.size()));

  const std::size_t target_col = imputed.find_column("target");
  if (target_col == RawTable::npos) throw IngestError("no 'target' column after preprocessing");

  Dataset& dataset = result.dataset;
  for (std::size_t i = 0; i < imputed.header.size(); ++i)
    if (i != target_col) dataset.feature_names.push_back(imputed.header[i]);
  dataset.X = Matrix(imputed.rows.size(), imputed.header.size() - 1);
  dataset.y.resize(imputed.rows.size());
  for (std::size_t r = 0; r < imputed.rows.size(); ++r) {
    std::size_t c_out = 0;
    for (std::size_t c = 0; c < imputed.header.size(); ++c) {
      if (c == target_col) continue;
      dataset.X(r, c_out++) = imputed.rows[r][c];
    }
    const double label = imputed.rows[r][target_col];
    if (label != 0.0 && label != 1.0) {
      throw IngestError("target at data row " + std::to_string(r) + " is " +
                        std::to_string(label) + ", expected 0 or 1");
    }
    dataset.y[r] = label;
  }
  std::tie(result.counts.class0, result.counts.class1) = class_distribution(dataset.y);

  SplitSpec split_spec;
  split_spec.seed = split_seed;
  result.splits = stratified_split(dataset.y, split_spec);

  if (mode == PipelineMode::kLeakageSafe) {
    dataset.scaler = robust_scale(dataset.X, result.splits.train);
  } else {
    std::vector<std::size_t> all(dataset.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    dataset.scaler = robust_scale(dataset.X, all);
  }
  return result;
}

void save_dataset(const std::filesystem::path& path, const PipelineResult& result) {
  const Dataset& d = result.dataset;
  std::string blob;
  blob.reserve(16 + d.size() * (d.X.cols() + 1) * 8);
  blob.append(kDatasetMagic, sizeof(kDatasetMagic));
  put_u64(blob, d.X.rows());
  put_u64(blob, d.X.cols());
  for (const double v : d.X.flat()) put_f64(blob, v);
  for (const double v : d.y) put_f64(blob, v);
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write '" + path.string() + "'");
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }

  auto join_doubles = [](std::span<const double> values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) s += ',';
      s += format_double(values[i]);
    }
    return s;
  };
  auto join_indices = [](std::span<const std::size_t> values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(values[i]);
    }
    return s;
  };

  std::ostringstream meta;
  meta << "mode = " << pipeline_mode_name(result.mode) << "\n";
  meta << "split_seed = " << result.split_seed << "\n";
  meta << "features = ";
  for (std::size_t i = 0; i < d.feature_names.size(); ++i)
    meta << (i ? "," : "") << d.feature_names[i];
  meta << "\n";
  meta << "scaler.median = " << join_doubles(d.scaler.median) << "\n";
  meta << "scaler.iqr = " << join_doubles(d.scaler.iqr) << "\n";
  meta << "scaler.zero_iqr = ";
  for (std::size_t i = 0; i < d.scaler.zero_iqr.size(); ++i)
    meta << (i ? "," : "") << (d.scaler.zero_iqr[i] ? 1 : 0);
  meta << "\n";
  meta << "split.train = " << join_indices(result.splits.train) << "\n";
  meta << "split.validation = " << join_indices(result.splits.validation) << "\n";
  meta << "split.test = " << join_indices(result.splits.test) << "\n";
  meta << "counts.rows_in = " << result.counts.rows_in << "\n";
  meta << "counts.columns_in = " << result.counts.columns_in << "\n";
  meta << "counts.columns_after_drop = " << result.counts.columns_after_drop << "\n";
  meta << "counts.rows_after_dedup = " << result.counts.rows_after_dedup << "\n";
  meta << "counts.duplicates_removed = " << result.counts.duplicates_removed << "\n";
  for (const auto& [name, zeros] : result.counts.imputed_zeros)
    meta << "counts.imputed." << name << " = " << zeros << "\n";
  meta << "counts.class0 = " << result.counts.class0 << "\n";
  meta << "counts.class1 = " << result.counts.class1 << "\n";

  std::ofstream out(path.string() + ".meta");
  if (!out) throw IngestError("cannot write '" + path.string() + ".meta'");
  out << meta.str();
}

PipelineResult load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string blob = buf.str();
  if (blob.size() < sizeof(kDatasetMagic) ||
      std::memcmp(blob.data(), kDatasetMagic, sizeof(kDatasetMagic)) != 0) {
    throw ConsistencyError("'" + path.string() + "' is not a dataset file");
  }

  PipelineResult result;
  Dataset& d = result.dataset;
  std::size_t pos = sizeof(kDatasetMagic);
  const std::uint64_t rows = take_u64(blob, pos);
  const std::uint64_t cols = take_u64(blob, pos);
  d.X = Matrix(rows, cols);
  for (double& v : d.X.flat()) v = take_f64(blob, pos);
  d.y.resize(rows);
  for (double& v : d.y) v = take_f64(blob, pos);
  if (pos != blob.size())
    throw ConsistencyError("'" + path.string() + "' has trailing bytes");

  std::ifstream meta_in(path.string() + ".meta");
  if (!meta_in) throw IngestError("cannot open '" + path.string() + ".meta'");
  auto split_list = [](const std::string& value) {
    std::vector<std::string> parts;
    if (value.empty()) return parts;
    std::size_t start = 0;
    while (true) {
      const auto comma = value.find(',', start);
      if (comma == std::string::npos) {
        parts.push_back(value.substr(start));
        break;
      }
      parts.push_back(value.substr(start, comma - start));
      start = comma + 1;
    }
    return parts;
  };
  auto parse_meta_double = [&](const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw ConsistencyError("bad number '" + s + "' in '" + path.string() + ".meta'");
    return v;
  };

  std::string line;
  while (std::getline(meta_in, line)) {
    const auto sep = line.find(" = ");
    if (sep == std::string::npos) continue;
    const std::string key = line.substr(0, sep);
    const std::string value = line.substr(sep + 3);
    auto as_index_list = [&] {
      std::vector<std::size_t> out;
      for (const auto& part : split_list(value))
        out.push_back(static_cast<std::size_t>(std::stoull(part)));
      return out;
    };
    if (key == "mode") {
      result.mode = value == "paper_faithful" ? PipelineMode::kPaperFaithful
                                              : PipelineMode::kLeakageSafe;
    } else if (key == "split_seed") {
      result.split_seed = std::stoull(value);
    } else if (key == "features") {
      d.feature_names = split_list(value);
    } else if (key == "scaler.median") {
      d.scaler.median.clear();
      for (const auto& part : split_list(value)) d.scaler.median.push_back(parse_meta_double(part));
    } else if (key == "scaler.iqr") {
      d.scaler.iqr.clear();
      for (const auto& part : split_list(value)) d.scaler.iqr.push_back(parse_meta_double(part));
    } else if (key == "scaler.zero_iqr") {
      d.scaler.zero_iqr.clear();
      for (const auto& part : split_list(value)) d.scaler.zero_iqr.push_back(part == "1");
    } else if (key == "split.train") {
      result.splits.train = as_index_list();
    } else if (key == "split.validation") {
      result.splits.validation = as_index_list();
    } else if (key == "split.test") {
      result.splits.test = as_index_list();
    } else if (key == "counts.rows_in") {
      result.counts.rows_in = std::stoull(value);
    } else if (key == "counts.columns_in") {
      result.counts.columns_in = std::stoull(value);
    } else if (key == "counts.columns_after_drop") {
      result.counts.columns_after_drop = std::stoull(value);
    } else if (key == "counts.rows_after_dedup") {
      result.counts.rows_after_dedup = std::stoull(value);
    } else if (key == "counts.duplicates_removed") {
      result.counts.duplicates_removed = std::stoull(value);
    } else if (key.starts_with("counts.imputed.")) {
      result.counts.imputed_zeros.emplace_back(key.substr(15), std::stoull(value));
    } else if (key == "counts.class0") {
      result.counts.class0 = std::stoull(value);
    } else if (key == "counts.class1") {
      result.counts.class1 = std::stoull(value);
    }
  }
  if (d.feature_names.size() != d.X.cols())
    throw ConsistencyError("'" + path.string() + ".meta' feature list does not match the matrix");
  return result;
}

}  // namespace optbench
