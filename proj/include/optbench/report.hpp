#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "optbench/config.hpp"
#include "optbench/data.hpp"
#include "optbench/harness.hpp"

namespace optbench {

inline constexpr std::string_view kToolVersion = "1.0.0";

// Fixed six-decimal rendering used for every metric the reports carry; the
// tabular and structured views copy these strings verbatim, so they can
// never disagree.
std::string format_fixed(double v);

// A report is a flat key-value tree (sorted keys). It embeds the full
// experiment config under config.*, the dataset fingerprint under
// dataset.*, per-optimizer results under runs.<name>.*, and the enhanced
// phase under enhanced.*.
struct ReportDocument {
  KvFile kv;
};

ReportDocument build_benchmark_report(const ExperimentConfig& config,
                                      const PipelineResult& data,
                                      std::span<const RunReport> runs);

ReportDocument build_enhanced_report(const ExperimentConfig& config,
                                     const PipelineResult& data, OptimizerKind kind,
                                     const GridResult& grid, const CvSummary& cv);

std::string render_kv(const ReportDocument& doc);

// One row per optimizer in configured order with the full metric column
// set; for an enhanced-only document, one row per fold instead.
std::string render_csv(const ReportDocument& doc);

std::string render_md(const ReportDocument& doc);

ReportDocument parse_report(std::string_view text, std::string_view origin = "<report>");
ReportDocument load_report(const std::filesystem::path& path);

}  // namespace optbench
