#include "optbench/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>

#include "optbench/config.hpp"
#include "optbench/data.hpp"
#include "optbench/errors.hpp"
#include "optbench/harness.hpp"
#include "optbench/report.hpp"
#include "optbench/svg.hpp"

namespace optbench {
namespace {

namespace fs = std::filesystem;

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRunError;
  }
}

bool require_file(const std::string& path, std::string_view what, std::ostream& err) {
  if (path.empty()) {
    err << "error: no " << what << " path given (use --input)\n";
    return false;
  }
  if (!fs::exists(path)) {
    err << "error: " << what << " file does not exist: " << path << "\n";
    return false;
  }
  return true;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);  // binary: identical bytes everywhere
  if (!out) throw IngestError("cannot write '" + path.string() + "'");
  out << text;
}

std::string seconds_text(double s) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", s);
  return buf;
}

PipelineMode parse_mode(const std::string& mode) {
  if (mode == "paper-faithful" || mode == "paper_faithful")
    return PipelineMode::kPaperFaithful;
  if (mode == "leakage-safe" || mode == "leakage_safe") return PipelineMode::kLeakageSafe;
  throw ConfigError("mode must be paper-faithful or leakage-safe, got '" + mode + "'");
}

ExperimentConfig config_from_options(const CliOptions& options) {
  ExperimentConfig cfg = options.config_path.empty()
                             ? ExperimentConfig::defaults()
                             : ExperimentConfig::from_kv(KvFile::load(options.config_path));
  if (options.epochs) cfg.epochs = *options.epochs;
  if (!options.optimizers.empty()) {
    std::vector<OptimizerSpec> chosen;
    for (const auto& name : options.optimizers) {
      const auto kind = kind_from_name(name);
      if (!kind) throw ConfigError("unknown optimizer '" + name + "'");
      OptimizerSpec spec{*kind, default_hyperparams(*kind)};
      for (const auto& configured : cfg.optimizers)
        if (configured.kind == *kind) spec = configured;
      chosen.push_back(spec);
    }
    cfg.optimizers = std::move(chosen);
  }
  cfg.validate();
  return cfg;
}

void write_report_files(const ReportDocument& doc, const fs::path& dir,
                        std::string_view stem, const std::string& format,
                        std::ostream& out) {
  fs::create_directories(dir);
  const fs::path kv_path = dir / (std::string(stem) + ".kv");
  const fs::path csv_path = dir / (std::string(stem) + ".csv");
  write_text(kv_path, render_kv(doc));
  write_text(csv_path, render_csv(doc));
  out << "wrote " << kv_path.string() << "\n";
  out << "wrote " << csv_path.string() << "\n";
  if (format == "md") {
    const fs::path md_path = dir / (std::string(stem) + ".md");
    write_text(md_path, render_md(doc));
    out << "wrote " << md_path.string() << "\n";
  }
}

void write_plots(std::span<const RunReport> runs, const fs::path& dir, std::ostream& out) {
  fs::create_directories(dir);
  std::vector<CurveSeries> overlay;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const RunReport& run = runs[i];
    const std::string name(kind_name(run.kind));
    const std::vector<CurveSeries> pair = {
        {"training loss", std::string(kChartPalette[0]), run.log.train_loss},
        {"validation loss", std::string(kChartPalette[3]), run.log.val_loss},
    };
    const fs::path path = dir / ("loss_" + name + ".svg");
    write_text(path, render_line_chart(name + " loss curves", "epoch", "loss", pair));
    overlay.push_back({name, std::string(kChartPalette[i % kChartPalette.size()]),
                       run.log.val_loss});
  }
  const fs::path overlay_path = dir / "loss_overlay.svg";
  write_text(overlay_path, render_line_chart("validation loss, all optimizers", "epoch",
                                             "validation loss", overlay));
  out << "wrote " << runs.size() + 1 << " plots to " << dir.string() << "\n";
}

}  // namespace

int cmd_preprocess(const CliOptions& options, std::ostream& out, std::ostream& err) {
  if (!require_file(options.input, "input", err)) return kExitUsage;
  return guarded(err, [&] {
    const PipelineMode mode = parse_mode(options.mode);
    std::uint64_t split_seed = Seeds{}.split;
    if (!options.config_path.empty())
      split_seed = ExperimentConfig::from_kv(KvFile::load(options.config_path)).seeds.split;
    if (options.seed) split_seed = *options.seed;

    const RawTable raw = load_csv(options.input);
    const PipelineResult result = run_pipeline(raw, mode, split_seed);
    const StageCounts& counts = result.counts;

    out << "rows in: " << counts.rows_in << "\n";
    out << "columns in: " << counts.columns_in << "\n";
    out << "columns after drop: " << counts.columns_after_drop << "\n";
    out << "rows after dedup: " << counts.rows_after_dedup << "\n";
    out << "duplicates removed: " << counts.duplicates_removed << "\n";
    for (const auto& [name, zeros] : counts.imputed_zeros)
      out << "imputed zeros in " << name << ": " << zeros << "\n";
    out << "class distribution: " << counts.class0 << " negative / " << counts.class1
        << " positive\n";
    out << "split sizes: train " << result.splits.train.size() << ", validation "
        << result.splits.validation.size() << ", test " << result.splits.test.size()
        << "\n";
    out << "pipeline mode: " << pipeline_mode_name(mode) << "\n";

    const std::string out_path =
        options.output.empty() ? "heart.dataset" : options.output;
    save_dataset(out_path, result);
    out << "wrote " << out_path << " and " << out_path << ".meta\n";
    return kExitOk;
  });
}

int cmd_benchmark(const CliOptions& options, std::ostream& out, std::ostream& err) {
  if (!require_file(options.input, "dataset", err)) return kExitUsage;
  return guarded(err, [&] {
    const PipelineResult data = load_dataset(options.input);
    const ExperimentConfig cfg = config_from_options(options);

    const std::vector<RunReport> runs =
        run_benchmark(cfg, data.dataset, data.splits, options.jobs);
    for (const RunReport& run : runs) {
      out << kind_name(run.kind) << ": " << run.log.epochs() << " epochs in "
          << seconds_text(run.wall_seconds) << "s";
      if (run.diverged) out << " [diverged at epoch " << run.divergence_epoch << "]";
      out << "\n";
    }

    const ReportDocument doc = build_benchmark_report(cfg, data, runs);
    const fs::path dir = options.output.empty() ? "." : options.output;
    write_report_files(doc, dir, "benchmark_report", options.format, out);
    if (options.plots) write_plots(runs, dir, out);

    for (const RunReport& run : runs)
      if (run.diverged) return kExitRunError;
    return kExitOk;
  });
}

int cmd_enhanced(const CliOptions& options, std::ostream& out, std::ostream& err) {
  if (!require_file(options.input, "dataset", err)) return kExitUsage;
  return guarded(err, [&] {
    const PipelineResult data = load_dataset(options.input);
    CliOptions base_options = options;
    base_options.optimizers.clear();  // the flag names the subject, not a filter
    const ExperimentConfig cfg = config_from_options(base_options);

    OptimizerKind kind = cfg.enhanced.optimizer;
    if (options.optimizers.size() == 1) {
      const auto named = kind_from_name(options.optimizers.front());
      if (!named) throw ConfigError("unknown optimizer '" + options.optimizers.front() + "'");
      kind = *named;
    } else if (options.optimizers.size() > 1) {
      throw ConfigError("enhanced takes a single optimizer");
    }

    const Dataset train = slice(data.dataset, data.splits.train);
    const Dataset validation = slice(data.dataset, data.splits.validation);
    const Dataset test = slice(data.dataset, data.splits.test);

    const Snapshot snapshot = snapshot_init(cfg.network, cfg.seeds.init);
    const GridResult grid =
        grid_search(cfg, snapshot, kind, train, validation, options.jobs);
    for (const GridPoint& point : grid.points) {
      out << "rate " << format_fixed(point.rate) << ": ";
      if (point.diverged)
        out << "diverged";
      else
        out << "val loss " << format_fixed(point.final_val_loss) << " ("
            << point.epochs_run << " epochs)";
      out << "\n";
    }
    out << "best rate: " << format_fixed(grid.best_rate) << "\n";

    HyperParams hyper = default_hyperparams(kind);
    for (const auto& spec : cfg.optimizers)
      if (spec.kind == kind) hyper = spec.hyper;
    hyper.eta = grid.best_rate;

    std::vector<std::size_t> pool_idx = data.splits.train;
    pool_idx.insert(pool_idx.end(), data.splits.validation.begin(),
                    data.splits.validation.end());
    const Dataset pool = slice(data.dataset, pool_idx);

    const CvSummary cv = cross_validate(cfg, kind, hyper, pool, test, options.jobs);
    for (std::size_t f = 0; f < cv.fold_runs.size(); ++f) {
      const RunReport& run = cv.fold_runs[f];
      out << "fold " << f << ": auc " << format_fixed(run.auc) << ", precision "
          << format_fixed(run.precision.value) << ", recall "
          << format_fixed(run.recall.value) << " (" << run.log.epochs() << " epochs in "
          << seconds_text(run.wall_seconds) << "s)";
      if (run.diverged) out << " [diverged]";
      out << "\n";
    }
    out << "cv mean auc: " << format_fixed(cv.mean_auc) << " (std "
        << format_fixed(cv.std_auc) << ")\n";
    out << "retrain epochs: " << cv.retrain_epochs << "\n";
    out << "final test auc: " << format_fixed(cv.final_run.auc) << ", precision "
        << format_fixed(cv.final_run.precision.value) << ", recall "
        << format_fixed(cv.final_run.recall.value) << "\n";

    const ReportDocument doc = build_enhanced_report(cfg, data, kind, grid, cv);
    const fs::path dir = options.output.empty() ? "." : options.output;
    write_report_files(doc, dir, "enhanced_report", options.format, out);

    for (const RunReport& run : cv.fold_runs)
      if (run.diverged) return kExitRunError;
    return cv.final_run.diverged ? kExitRunError : kExitOk;
  });
}

int cmd_report(const CliOptions& options, std::ostream& out, std::ostream& err) {
  if (!require_file(options.input, "report", err)) return kExitUsage;
  return guarded(err, [&] {
    const ReportDocument doc = load_report(options.input);
    std::string text;
    if (options.format == "kv") {
      text = render_kv(doc);
    } else if (options.format == "csv") {
      text = render_csv(doc);
    } else if (options.format == "md") {
      text = render_md(doc);
    } else {
      throw ConfigError("format must be kv, csv or md, got '" + options.format + "'");
    }
    if (options.output.empty()) {
      out << text;
    } else {
      write_text(options.output, text);
      out << "wrote " << options.output << "\n";
    }
    return kExitOk;
  });
}

}  // namespace optbench
