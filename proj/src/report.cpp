#include "optbench/report.hpp"

#include <cstdio>

#include "optbench/errors.hpp"

namespace optbench {
namespace {

std::string hex16(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string pad2(std::size_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02zu", v);
  return buf;
}

std::string join_fixed(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_fixed(values[i]);
  }
  return out;
}

void put_common(KvFile& kv, const ExperimentConfig& config, const PipelineResult& data) {
  kv.set("version", kToolVersion);
  const KvFile config_kv = config.to_kv();  // keep alive while iterating
  for (const auto& [key, value] : config_kv.entries()) kv.set("config." + key, value);

  kv.set("dataset.mode", pipeline_mode_name(data.mode));
  kv.set("dataset.split_seed", std::to_string(data.split_seed));
  kv.set("dataset.rows_in", std::to_string(data.counts.rows_in));
  kv.set("dataset.columns_in", std::to_string(data.counts.columns_in));
  kv.set("dataset.columns_after_drop", std::to_string(data.counts.columns_after_drop));
  kv.set("dataset.rows_after_dedup", std::to_string(data.counts.rows_after_dedup));
  kv.set("dataset.duplicates_removed", std::to_string(data.counts.duplicates_removed));
  for (const auto& [name, zeros] : data.counts.imputed_zeros)
    kv.set("dataset.imputed." + name, std::to_string(zeros));
  kv.set("dataset.class0", std::to_string(data.counts.class0));
  kv.set("dataset.class1", std::to_string(data.counts.class1));
  kv.set("dataset.split.train", std::to_string(data.splits.train.size()));
  kv.set("dataset.split.validation", std::to_string(data.splits.validation.size()));
  kv.set("dataset.split.test", std::to_string(data.splits.test.size()));
}

void put_run(KvFile& kv, const std::string& prefix, const RunReport& run) {
  kv.set(prefix + "theta0_hash", hex16(run.theta0_hash));
  kv.set(prefix + "diverged", run.diverged ? "true" : "false");
  if (run.diverged)
    kv.set(prefix + "divergence_epoch", std::to_string(run.divergence_epoch));
  kv.set(prefix + "epochs_run", std::to_string(run.log.epochs()));
  kv.set(prefix + "final_train_loss", format_fixed(run.final_train_loss));
  kv.set(prefix + "final_val_loss", format_fixed(run.final_val_loss));
  kv.set(prefix + "convergence_epoch", std::to_string(run.convergence_epoch));
  kv.set(prefix + "stability", format_fixed(run.stability));
  kv.set(prefix + "precision", format_fixed(run.precision.value));
  kv.set(prefix + "precision_degenerate", run.precision.degenerate ? "true" : "false");
  kv.set(prefix + "recall", format_fixed(run.recall.value));
  kv.set(prefix + "recall_degenerate", run.recall.degenerate ? "true" : "false");
  kv.set(prefix + "auc", format_fixed(run.auc));
  kv.set(prefix + "curve.train", join_fixed(run.log.train_loss));
  kv.set(prefix + "curve.val", join_fixed(run.log.val_loss));
}

}  // namespace

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

ReportDocument build_benchmark_report(const ExperimentConfig& config,
                                      const PipelineResult& data,
                                      std::span<const RunReport> runs) {
  ReportDocument doc;
  put_common(doc.kv, config, data);
  for (const RunReport& run : runs)
    put_run(doc.kv, "runs." + std::string(kind_name(run.kind)) + ".", run);
  return doc;
}

ReportDocument build_enhanced_report(const ExperimentConfig& config,
                                     const PipelineResult& data, OptimizerKind kind,
                                     const GridResult& grid, const CvSummary& cv) {
  ReportDocument doc;
  KvFile& kv = doc.kv;
  put_common(kv, config, data);

  kv.set("enhanced.optimizer", std::string(kind_name(kind)));
  kv.set("enhanced.best_rate", format_fixed(grid.best_rate));
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    const GridPoint& point = grid.points[i];
    const std::string prefix = "enhanced.grid." + pad2(i) + ".";
    kv.set(prefix + "rate", format_fixed(point.rate));
    kv.set(prefix + "diverged", point.diverged ? "true" : "false");
    kv.set(prefix + "final_val_loss",
           point.diverged ? "diverged" : format_fixed(point.final_val_loss));
    kv.set(prefix + "epochs_run", std::to_string(point.epochs_run));
    kv.set(prefix + "best_epoch", std::to_string(point.best_epoch));
  }

  for (std::size_t f = 0; f < cv.fold_runs.size(); ++f) {
    const RunReport& run = cv.fold_runs[f];
    const std::string prefix = "enhanced.fold." + pad2(f) + ".";
    kv.set(prefix + "diverged", run.diverged ? "true" : "false");
    kv.set(prefix + "auc", format_fixed(run.auc));
    kv.set(prefix + "precision", format_fixed(run.precision.value));
    kv.set(prefix + "recall", format_fixed(run.recall.value));
    kv.set(prefix + "convergence_epoch", std::to_string(run.convergence_epoch));
    kv.set(prefix + "epochs_run", std::to_string(run.log.epochs()));
  }
  kv.set("enhanced.cv.mean_auc", format_fixed(cv.mean_auc));
  kv.set("enhanced.cv.std_auc", format_fixed(cv.std_auc));
  kv.set("enhanced.cv.mean_precision", format_fixed(cv.mean_precision));
  kv.set("enhanced.cv.std_precision", format_fixed(cv.std_precision));
  kv.set("enhanced.cv.mean_recall", format_fixed(cv.mean_recall));
  kv.set("enhanced.cv.std_recall", format_fixed(cv.std_recall));
  kv.set("enhanced.cv.mean_convergence_epoch", format_fixed(cv.mean_convergence_epoch));
  kv.set("enhanced.retrain_epochs", std::to_string(cv.retrain_epochs));

  kv.set("enhanced.final.diverged", cv.final_run.diverged ? "true" : "false");
  kv.set("enhanced.final.epochs_run", std::to_string(cv.final_run.log.epochs()));
  kv.set("enhanced.final.train_loss", format_fixed(cv.final_run.final_train_loss));
  kv.set("enhanced.final.auc", format_fixed(cv.final_run.auc));
  kv.set("enhanced.final.precision", format_fixed(cv.final_run.precision.value));
  kv.set("enhanced.final.recall", format_fixed(cv.final_run.recall.value));
  return doc;
}

std::string render_kv(const ReportDocument& doc) { return doc.kv.render(); }

namespace {

constexpr std::string_view kRunColumns[] = {
    "final_train_loss", "final_val_loss", "convergence_epoch", "stability",
    "precision",        "recall",         "auc",
};

constexpr std::string_view kFoldColumns[] = {
    "auc", "precision", "recall", "convergence_epoch",
};

bool has_runs(const KvFile& kv) { return !kv.keys_with_prefix("runs.").empty(); }

std::vector<std::string> run_names(const KvFile& kv) {
  std::vector<std::string> names;
  for (const auto& name : kv.get_list("config.optimizers"))
    if (kv.has("runs." + name + ".auc")) names.push_back(name);
  return names;
}

std::vector<std::string> fold_prefixes(const KvFile& kv) {
  std::vector<std::string> prefixes;
  for (std::size_t f = 0; kv.has("enhanced.fold." + pad2(f) + ".auc"); ++f)
    prefixes.push_back("enhanced.fold." + pad2(f) + ".");
  return prefixes;
}

}  // namespace

std::string render_csv(const ReportDocument& doc) {
  const KvFile& kv = doc.kv;
  std::string out;
  if (has_runs(kv)) {
    out = "optimizer";
    for (const auto col : kRunColumns) out += "," + std::string(col);
    out += '\n';
    for (const auto& name : run_names(kv)) {
      out += name;
      for (const auto col : kRunColumns)
        out += "," + kv.get_string("runs." + name + "." + std::string(col));
      out += '\n';
    }
    return out;
  }
  out = "fold";
  for (const auto col : kFoldColumns) out += "," + std::string(col);
  out += '\n';
  const auto prefixes = fold_prefixes(kv);
  for (std::size_t f = 0; f < prefixes.size(); ++f) {
    out += std::to_string(f);
    for (const auto col : kFoldColumns)
      out += "," + kv.get_string(prefixes[f] + std::string(col));
    out += '\n';
  }
  return out;
}

std::string render_md(const ReportDocument& doc) {
  const KvFile& kv = doc.kv;
  std::string out = "# Optimizer benchmark report\n\n";
  out += "- dataset: " + kv.get_string("dataset.rows_in") + " rows in, " +
         kv.get_string("dataset.rows_after_dedup") + " after deduplication, classes " +
         kv.get_string("dataset.class0") + "/" + kv.get_string("dataset.class1") + "\n";
  out += "- pipeline mode: " + kv.get_string("dataset.mode") + "\n";
  out += "- epochs: " + kv.get_string("config.epochs") + ", batch size: " +
         kv.get_string("config.batch_size") + "\n\n";

  if (has_runs(kv)) {
    out += "| optimizer |";
    for (const auto col : kRunColumns) out += " " + std::string(col) + " |";
    out += "\n|---|";
    for (std::size_t i = 0; i < std::size(kRunColumns); ++i) out += "---|";
    out += '\n';
    for (const auto& name : run_names(kv)) {
      out += "| " + name + " |";
      for (const auto col : kRunColumns)
        out += " " + kv.get_string("runs." + name + "." + std::string(col)) + " |";
      out += '\n';
    }
  }

  if (kv.has("enhanced.optimizer")) {
    out += "\n## Enhanced phase (" + kv.get_string("enhanced.optimizer") + ")\n\n";
    out += "- best learning rate: " + kv.get_string("enhanced.best_rate") + "\n";
    out += "- CV mean AUC: " + kv.get_string("enhanced.cv.mean_auc") + " (std " +
           kv.get_string("enhanced.cv.std_auc") + ")\n";
    out += "- retrain epochs: " + kv.get_string("enhanced.retrain_epochs") + "\n";
    out += "- final test AUC: " + kv.get_string("enhanced.final.auc") +
           ", precision: " + kv.get_string("enhanced.final.precision") +
           ", recall: " + kv.get_string("enhanced.final.recall") + "\n\n";
    out += "| fold |";
    for (const auto col : kFoldColumns) out += " " + std::string(col) + " |";
    out += "\n|---|";
    for (std::size_t i = 0; i < std::size(kFoldColumns); ++i) out += "---|";
    out += '\n';
    const auto prefixes = fold_prefixes(kv);
    for (std::size_t f = 0; f < prefixes.size(); ++f) {
      out += "| " + std::to_string(f) + " |";
      for (const auto col : kFoldColumns)
        out += " " + kv.get_string(prefixes[f] + std::string(col)) + " |";
      out += '\n';
    }
  }
  return out;
}

ReportDocument parse_report(std::string_view text, std::string_view origin) {
  return {KvFile::parse(text, origin)};
}

ReportDocument load_report(const std::filesystem::path& path) {
  return {KvFile::load(path)};
}

}  // namespace optbench
