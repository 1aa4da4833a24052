#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "optbench/data.hpp"
#include "optbench/errors.hpp"

using namespace optbench;
namespace fs = std::filesystem;

namespace {

const std::string kHeaderLine =
    "age,sex,chest pain type,resting bp s,cholesterol,fasting blood sugar,"
    "resting ecg,max heart rate,exercise angina,oldpeak,ST slope,target";

fs::path scratch_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "optbench_data_tests";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch_file(name);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  return p;
}

// A fully valid 12-column table built in memory. Values are arbitrary but
// parse-friendly; the target column alternates so both classes exist.
RawTable tiny_table(std::size_t rows) {
  RawTable t;
  for (const auto name : kRawHeader) t.header.emplace_back(name);
  for (std::size_t i = 0; i < rows; ++i) {
    const double k = static_cast<double>(i);
    t.rows.push_back({40 + k, 1, 2, 120 + k, 200 + 2 * k, 0, 1, 150 - k, 0, 0.5, 2,
                      static_cast<double>(i % 2)});
  }
  return t;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void check_partition(const SplitIndices& s, std::size_t n) {
  std::set<std::size_t> seen;
  for (const auto* part : {&s.train, &s.validation, &s.test}) {
    for (std::size_t i : *part) {
      CHECK(i < n);
      CHECK(seen.insert(i).second);  // no index appears twice
    }
  }
  CHECK(seen.size() == n);
}

}  // namespace

TEST_CASE("csv loading accepts a well-formed file and skips blank lines") {
  const fs::path p = write_file("ok.csv", kHeaderLine +
                                              "\n"
                                              "54,1,2,130,250,0,1,140,0,1.5,2,1\n"
                                              "\n"
                                              "48,0,3,120,0,1,0,155,1,0.0,1,0\n");
  const RawTable t = load_csv(p);
  REQUIRE(t.header.size() == 12);
  CHECK(t.header[0] == "age");
  CHECK(t.header[11] == "target");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == 54.0);
  CHECK(t.rows[1][4] == 0.0);
  CHECK(t.find_column("cholesterol") == 4);
  CHECK(t.find_column("nope") == RawTable::npos);
}

TEST_CASE("csv loading reports missing and empty files") {
  CHECK_THROWS_AS(load_csv(scratch_file("does_not_exist.csv")), IngestError);
  CHECK_THROWS_AS(load_csv(write_file("empty.csv", "")), IngestError);
  CHECK_THROWS_AS(load_csv(write_file("header_only.csv", kHeaderLine + "\n")), IngestError);
}

TEST_CASE("csv loading rejects a header with the wrong shape or names") {
  const std::string eleven = kHeaderLine.substr(0, kHeaderLine.rfind(','));
  CHECK_THROWS_AS(load_csv(write_file("short.csv", eleven + "\n1,2,3,4,5,6,7,8,9,10,11\n")),
                  IngestError);

  std::string renamed = kHeaderLine;
  renamed.replace(renamed.find("cholesterol"), 11, "cholesterin");
  CHECK_THROWS_AS(
      load_csv(write_file("renamed.csv", renamed + "\n54,1,2,130,250,0,1,140,0,1.5,2,1\n")),
      IngestError);
}

TEST_CASE("csv loading cites the offending row and column") {
  const fs::path p = write_file("bad_cell.csv", kHeaderLine +
                                                    "\n"
                                                    "54,1,2,130,250,0,1,140,0,1.5,2,1\n"
                                                    "oops,1,2,130,250,0,1,140,0,1.5,2,1\n");
  try {
    load_csv(p);
    FAIL("expected a parse error");
  } catch (const IngestError& e) {
    const std::string what = e.what();
    CHECK(what.find(":3:") != std::string::npos);  // header is line 1
    CHECK(what.find("'age'") != std::string::npos);
    CHECK(what.find("oops") != std::string::npos);
  }

  const fs::path wide = write_file("wide_row.csv", kHeaderLine +
                                                       "\n"
                                                       "54,1,2,130,250,0,1,140,0,1.5,2,1,9\n");
  CHECK_THROWS_AS(load_csv(wide), IngestError);
}

TEST_CASE("dropping a column removes it and keeps the rest in order") {
  const RawTable t = tiny_table(3);
  const RawTable dropped = drop_feature(t, kDroppedFeature);
  REQUIRE(dropped.header.size() == 11);
  CHECK(dropped.find_column(kDroppedFeature) == RawTable::npos);
  CHECK(dropped.header[4] == "cholesterol");
  CHECK(dropped.header[5] == "resting ecg");  // slid left by one
  CHECK(dropped.header.back() == "target");
  for (const auto& row : dropped.rows) CHECK(row.size() == 11);
  // Ten predictive features remain once the target is excluded.
  CHECK(dropped.header.size() - 1 == 10);

  CHECK_THROWS_AS(drop_feature(dropped, kDroppedFeature), ConfigError);
}

TEST_CASE("deduplication keeps first occurrences in order") {
  RawTable t = tiny_table(4);  // four distinct rows
  const RawTable untouched = deduplicate(t);
  CHECK(untouched.rows == t.rows);

  RawTable dup = tiny_table(3);
  dup.rows.push_back(dup.rows[0]);
  dup.rows.push_back(dup.rows[1]);
  dup.rows.push_back(dup.rows[0]);
  const RawTable cleaned = deduplicate(dup);
  REQUIRE(cleaned.rows.size() == 3);
  CHECK(cleaned.rows == tiny_table(3).rows);

  RawTable same = tiny_table(1);
  for (int i = 0; i < 6; ++i) same.rows.push_back(same.rows[0]);
  CHECK(deduplicate(same).rows.size() == 1);
}

TEST_CASE("zero imputation uses the non-zero mean computed up front") {
  RawTable t = tiny_table(3);
  const std::size_t chol = t.find_column("cholesterol");
  t.rows[0][chol] = 200.0;
  t.rows[1][chol] = 0.0;
  t.rows[2][chol] = 300.0;
  const std::string_view cols[] = {"cholesterol"};
  const RawTable fixed = impute_zeros_with_mean(t, cols);
  CHECK(fixed.rows[0][chol] == 200.0);
  CHECK(fixed.rows[1][chol] == 250.0);
  CHECK(fixed.rows[2][chol] == 300.0);

  // Two zeros share the mean of the single non-zero survivor.
  t.rows[0][chol] = 0.0;
  t.rows[1][chol] = 0.0;
  t.rows[2][chol] = 100.0;
  const RawTable both = impute_zeros_with_mean(t, cols);
  for (const auto& row : both.rows) CHECK(row[chol] == 100.0);
}

TEST_CASE("zero imputation leaves clean columns alone") {
  const RawTable t = tiny_table(4);  // cholesterol already non-zero everywhere
  const std::string_view cols[] = {"cholesterol"};
  const RawTable fixed = impute_zeros_with_mean(t, cols);
  CHECK(fixed.rows == t.rows);
  // Idempotence: a second application is a no-op as well.
  CHECK(impute_zeros_with_mean(fixed, cols).rows == fixed.rows);
}

TEST_CASE("zero imputation fails loudly on an all-zero column") {
  RawTable t = tiny_table(3);
  const std::size_t bp = t.find_column("resting bp s");
  for (auto& row : t.rows) row[bp] = 0.0;
  const std::string_view cols[] = {"resting bp s"};
  CHECK_THROWS_AS(impute_zeros_with_mean(t, cols), ImputeError);
  const std::string_view missing[] = {"not a column"};
  CHECK_THROWS_AS(impute_zeros_with_mean(t, missing), ImputeError);
}

TEST_CASE("literal-mean imputation averages over every entry") {
  RawTable t = tiny_table(3);
  const std::size_t chol = t.find_column("cholesterol");
  t.rows[0][chol] = 200.0;
  t.rows[1][chol] = 0.0;
  t.rows[2][chol] = 300.0;
  const std::string_view cols[] = {"cholesterol"};
  const RawTable fixed = impute_zeros_with_mean(t, cols, /*literal_mean=*/true);
  CHECK(fixed.rows[1][chol] == doctest::Approx(500.0 / 3.0).epsilon(1e-12));
  CHECK(fixed.rows[0][chol] == 200.0);
}

TEST_CASE("robust scaling matches the hand-computed five-point example") {
  Matrix X(5, 1);
  for (std::size_t i = 0; i < 5; ++i) X(i, 0) = static_cast<double>(i + 1);
  const auto rows = iota_rows(5);
  const ScalerParams sp = robust_scale(X, rows);
  CHECK(sp.median[0] == 3.0);
  CHECK(sp.iqr[0] == 2.0);  // Q3=4, Q1=2 by linear interpolation
  CHECK(!sp.zero_iqr[0]);
  const double want[5] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  for (std::size_t i = 0; i < 5; ++i) CHECK(X(i, 0) == want[i]);
}

TEST_CASE("a constant feature is flagged and scaled to zero") {
  Matrix X(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    X(i, 0) = 7.0;
    X(i, 1) = static_cast<double>(i);
  }
  const auto rows = iota_rows(4);
  const ScalerParams sp = robust_scale(X, rows);
  CHECK(sp.zero_iqr[0]);
  CHECK(!sp.zero_iqr[1]);
  CHECK(sp.iqr[0] == 0.0);  // the true spread is recorded; division used 1
  for (std::size_t i = 0; i < 4; ++i) CHECK(X(i, 0) == 0.0);
}

TEST_CASE("re-fitting a scaled feature finds median 0 and iqr 1") {
  Matrix X(101, 1);
  for (std::size_t i = 0; i < 101; ++i) X(i, 0) = 3.0 + 0.37 * static_cast<double>(i * i % 97);
  const auto rows = iota_rows(101);
  robust_scale(X, rows);
  const ScalerParams again = robust_scale(X, rows);
  CHECK(again.median[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(again.iqr[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("scaler parameters depend only on the fit rows") {
  Matrix a(6, 1);
  for (std::size_t i = 0; i < 6; ++i) a(i, 0) = static_cast<double>(i);
  Matrix b = a;
  b(5, 0) = 1e9;  // row 5 is outside the fit set
  const std::vector<std::size_t> fit = {0, 1, 2, 3, 4};
  const ScalerParams sa = robust_scale(a, fit);
  const ScalerParams sb = robust_scale(b, fit);
  CHECK(sa.median == sb.median);
  CHECK(sa.iqr == sb.iqr);
  // The held-out row is still transformed, with the fit-row parameters.
  CHECK(b(5, 0) == (1e9 - sa.median[0]) / sa.iqr[0]);
}

TEST_CASE("robust scaling validates its fit rows") {
  Matrix X(3, 1, 1.0);
  CHECK_THROWS_AS(robust_scale(X, std::vector<std::size_t>{}), DomainError);
  CHECK_THROWS_AS(robust_scale(X, std::vector<std::size_t>{7}), DomainError);
}

TEST_CASE("slicing a dataset picks exactly the requested rows") {
  Dataset d;
  d.X = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}, {7, 8}});
  d.y = {0, 1, 0, 1};
  d.feature_names = {"a", "b"};
  const std::vector<std::size_t> rows = {3, 0};
  const Dataset s = slice(d, rows);
  CHECK(s.size() == 2);
  CHECK(s.X == Matrix::from_rows({{7, 8}, {1, 2}}));
  CHECK(s.y == std::vector<double>{1, 0});
  CHECK(s.feature_names == d.feature_names);
  CHECK_THROWS_AS(slice(d, std::vector<std::size_t>{9}), DomainError);
}

TEST_CASE("a balanced 918-row split lands on the documented sizes") {
  std::vector<double> y(918);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i < 459 ? 0.0 : 1.0;
  SplitSpec spec;
  spec.seed = 4;
  const SplitIndices s = stratified_split(y, spec);
  check_partition(s, 918);
  CHECK(s.test.size() == 276);
  CHECK(s.validation.size() == 128);
  CHECK(s.train.size() == 514);
  // Documented tolerance around the exact 30% / 14% / 56% fractions.
  CHECK(std::llabs(static_cast<long long>(s.test.size()) - 276) <= 2);
  CHECK(std::llabs(static_cast<long long>(s.validation.size()) - 128) <= 2);
  CHECK(std::llabs(static_cast<long long>(s.train.size()) - 514) <= 2);

  // Stratification: each part's class counts sit within 1 of the ideal.
  for (const auto* part : {&s.train, &s.validation, &s.test}) {
    std::size_t pos = 0;
    for (std::size_t i : *part)
      if (y[i] == 1.0) ++pos;
    const double ideal = static_cast<double>(part->size()) / 2.0;
    CHECK(std::fabs(static_cast<double>(pos) - ideal) <= 1.0);
  }
}

TEST_CASE("splits are seed-deterministic and seed-sensitive") {
  std::vector<double> y(100);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 5 == 0 ? 1.0 : 0.0;
  SplitSpec spec;
  spec.seed = 11;
  const SplitIndices a = stratified_split(y, spec);
  const SplitIndices b = stratified_split(y, spec);
  CHECK(a.train == b.train);
  CHECK(a.validation == b.validation);
  CHECK(a.test == b.test);
  spec.seed = 12;
  const SplitIndices c = stratified_split(y, spec);
  CHECK(a.train != c.train);
}

TEST_CASE("a sixty-forty class ratio survives splitting intact") {
  std::vector<double> y(1000);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i < 600 ? 0.0 : 1.0;
  SplitSpec spec;
  spec.seed = 21;
  const SplitIndices s = stratified_split(y, spec);
  check_partition(s, 1000);
  for (const auto* part : {&s.train, &s.validation, &s.test}) {
    std::size_t neg = 0;
    for (std::size_t i : *part)
      if (y[i] == 0.0) ++neg;
    const double ideal = 0.6 * static_cast<double>(part->size());
    CHECK(std::fabs(static_cast<double>(neg) - ideal) <= 1.0);
  }
}

TEST_CASE("splitting refuses starved classes and junk labels") {
  std::vector<double> starved(50, 0.0);
  starved[0] = 1.0;
  starved[1] = 1.0;  // only two positives
  CHECK_THROWS_AS(stratified_split(starved, SplitSpec{}), SplitError);
  CHECK_THROWS_AS(stratified_split(std::vector<double>{}, SplitSpec{}), SplitError);

  std::vector<double> junk(50, 0.0);
  junk[10] = 0.5;
  CHECK_THROWS_AS(stratified_split(junk, SplitSpec{}), DomainError);

  SplitSpec bad;
  bad.test_fraction = 1.5;
  CHECK_THROWS_AS(stratified_split(std::vector<double>(10, 1.0), bad), SplitError);
}

TEST_CASE("unstratified splitting still partitions the index set") {
  std::vector<double> y(97);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 3 == 0 ? 1.0 : 0.0;
  SplitSpec spec;
  spec.stratified = false;
  spec.seed = 31;
  const SplitIndices s = stratified_split(y, spec);
  check_partition(s, 97);
  CHECK(s.test.size() == 29);  // round(0.3 * 97)
  CHECK(s.validation.size() == 14);  // round(0.2 * 68)
  CHECK(s.train.size() == 54);
}

TEST_CASE("stratified folds are near-equal, disjoint, and balanced") {
  std::vector<double> y(642);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i < 321 ? 0.0 : 1.0;
  const auto folds = stratified_kfold(y, 5, 99);
  REQUIRE(folds.size() == 5);

  std::vector<std::size_t> sizes;
  for (const auto& f : folds) sizes.push_back(f.size());
  std::vector<std::size_t> sorted_sizes = sizes;
  std::sort(sorted_sizes.begin(), sorted_sizes.end());
  CHECK(sorted_sizes == std::vector<std::size_t>{128, 128, 128, 129, 129});

  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    CHECK(std::is_sorted(f.begin(), f.end()));
    std::size_t pos = 0;
    for (std::size_t i : f) {
      CHECK(seen.insert(i).second);
      if (y[i] == 1.0) ++pos;
    }
    // Per-class share within one of the stratified ideal.
    CHECK(std::fabs(static_cast<double>(pos) - static_cast<double>(f.size()) / 2.0) <= 1.0);
  }
  CHECK(seen.size() == 642);

  const auto again = stratified_kfold(y, 5, 99);
  CHECK(folds == again);
  const auto other = stratified_kfold(y, 5, 100);
  CHECK(folds != other);
}

TEST_CASE("fold construction rejects impossible requests") {
  std::vector<double> y(20, 0.0);
  for (std::size_t i = 0; i < 4; ++i) y[i] = 1.0;
  CHECK_THROWS_AS(stratified_kfold(y, 1, 0), FoldError);
  CHECK_THROWS_AS(stratified_kfold(y, 5, 0), FoldError);  // only 4 positives
  CHECK_NOTHROW(stratified_kfold(y, 4, 0));
}

TEST_CASE("class distribution counts both degenerate shapes") {
  CHECK(class_distribution(std::vector<double>{}) == std::pair<std::size_t, std::size_t>{0, 0});
  CHECK(class_distribution(std::vector<double>(7, 1.0)) ==
        std::pair<std::size_t, std::size_t>{0, 7});
  CHECK(class_distribution(std::vector<double>{0, 1, 1, 0, 0}) ==
        std::pair<std::size_t, std::size_t>{3, 2});
}

TEST_CASE("the pipeline wires the stages together and keeps its counts") {
  RawTable t = tiny_table(40);
  t.rows.push_back(t.rows[0]);  // one duplicate
  const std::size_t chol = t.find_column("cholesterol");
  const std::size_t bp = t.find_column("resting bp s");
  t.rows[2][chol] = 0.0;
  t.rows[3][chol] = 0.0;
  t.rows[5][bp] = 0.0;

  const PipelineResult r = run_pipeline(t, PipelineMode::kLeakageSafe, 123);
  CHECK(r.counts.rows_in == 41);
  CHECK(r.counts.columns_in == 12);
  CHECK(r.counts.columns_after_drop == 11);
  CHECK(r.counts.rows_after_dedup == 40);
  CHECK(r.counts.duplicates_removed == 1);
  REQUIRE(r.counts.imputed_zeros.size() == 2);
  CHECK(r.counts.imputed_zeros[0].first == "cholesterol");
  CHECK(r.counts.imputed_zeros[0].second == 2);
  CHECK(r.counts.imputed_zeros[1].first == "resting bp s");
  CHECK(r.counts.imputed_zeros[1].second == 1);
  CHECK(r.counts.class0 + r.counts.class1 == 40);

  CHECK(r.dataset.X.rows() == 40);
  CHECK(r.dataset.X.cols() == 10);
  CHECK(r.dataset.feature_names.size() == 10);
  CHECK(r.dataset.X.all_finite());
  for (double label : r.dataset.y) CHECK((label == 0.0 || label == 1.0));
  check_partition(r.splits, 40);
  CHECK(r.split_seed == 123);
  CHECK(r.mode == PipelineMode::kLeakageSafe);
}

TEST_CASE("leakage-safe scaling is blind to test-row perturbations") {
  RawTable t = tiny_table(40);  // no duplicates, no zeros: row order survives
  const PipelineResult base = run_pipeline(t, PipelineMode::kLeakageSafe, 9);
  const std::size_t victim = base.splits.test.front();

  RawTable poked = t;
  poked.rows[victim][0] += 1000.0;  // age of one test row
  const PipelineResult moved = run_pipeline(poked, PipelineMode::kLeakageSafe, 9);
  CHECK(base.dataset.scaler.median == moved.dataset.scaler.median);
  CHECK(base.dataset.scaler.iqr == moved.dataset.scaler.iqr);

  // The faithful mode fits on every row. Push the whole test part out of
  // range so the upper quartile is guaranteed to move.
  RawTable shoved = t;
  for (std::size_t i : base.splits.test) shoved.rows[i][0] += 1000.0;
  const PipelineResult f_base = run_pipeline(t, PipelineMode::kPaperFaithful, 9);
  const PipelineResult f_moved = run_pipeline(shoved, PipelineMode::kPaperFaithful, 9);
  CHECK(f_base.dataset.scaler.iqr != f_moved.dataset.scaler.iqr);
}

TEST_CASE("saving and loading a pipeline result round-trips everything") {
  RawTable t = tiny_table(30);
  t.rows[4][t.find_column("cholesterol")] = 0.0;
  const PipelineResult r = run_pipeline(t, PipelineMode::kPaperFaithful, 77);
  const fs::path p = scratch_file("roundtrip.dataset");
  save_dataset(p, r);
  const PipelineResult back = load_dataset(p);

  CHECK(back.dataset.X == r.dataset.X);
  CHECK(back.dataset.y == r.dataset.y);
  CHECK(back.dataset.feature_names == r.dataset.feature_names);
  CHECK(back.dataset.scaler.median == r.dataset.scaler.median);
  CHECK(back.dataset.scaler.iqr == r.dataset.scaler.iqr);
  CHECK(back.dataset.scaler.zero_iqr == r.dataset.scaler.zero_iqr);
  CHECK(back.splits.train == r.splits.train);
  CHECK(back.splits.validation == r.splits.validation);
  CHECK(back.splits.test == r.splits.test);
  CHECK(back.counts.rows_in == r.counts.rows_in);
  CHECK(back.counts.rows_after_dedup == r.counts.rows_after_dedup);
  CHECK(back.counts.imputed_zeros == r.counts.imputed_zeros);
  CHECK(back.mode == r.mode);
  CHECK(back.split_seed == r.split_seed);

  // Two saves of the same result are byte-identical.
  const fs::path q = scratch_file("roundtrip2.dataset");
  save_dataset(q, r);
  CHECK(slurp(p) == slurp(q));
  CHECK(slurp(fs::path(p.string() + ".meta")) == slurp(fs::path(q.string() + ".meta")));
}

TEST_CASE("damaged dataset files are rejected") {
  RawTable t = tiny_table(12);
  const PipelineResult r = run_pipeline(t, PipelineMode::kLeakageSafe, 5);
  const fs::path p = scratch_file("damage.dataset");
  save_dataset(p, r);

  std::string bytes = slurp(p);
  std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes.substr(0, bytes.size() - 3);
  CHECK_THROWS_AS(load_dataset(p), ConsistencyError);

  std::string magicless = bytes;
  magicless[0] = 'X';
  std::ofstream(p, std::ios::binary | std::ios::trunc) << magicless;
  CHECK_THROWS_AS(load_dataset(p), ConsistencyError);

  std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes;
  CHECK_NOTHROW(load_dataset(p));
  fs::remove(fs::path(p.string() + ".meta"));
  CHECK_THROWS_AS(load_dataset(p), IngestError);
}
