#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "optbench/cli.hpp"
#include "optbench/report.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Optimizer comparison benchmark for a fixed MLP on tabular heart data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(optbench::kToolVersion));

  optbench::CliOptions options;
  std::string optimizers_csv;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--input", options.input, "Input file");
    cmd->add_option("--output", options.output, "Output file or directory");
    cmd->add_option("--jobs", options.jobs, "Worker threads (0 = all processors)");
  };

  CLI::App* preprocess =
      app.add_subcommand("preprocess", "Run the preprocessing pipeline on a raw CSV");
  add_common(preprocess);
  preprocess->add_option("--config", options.config_path, "Experiment config file");
  preprocess->add_option("--mode", options.mode,
                         "Pipeline ordering: paper-faithful or leakage-safe");
  preprocess->add_option("--seed", options.seed, "Split seed override");

  CLI::App* benchmark =
      app.add_subcommand("benchmark", "Train every configured optimizer from one init");
  add_common(benchmark);
  benchmark->add_option("--config", options.config_path, "Experiment config file");
  benchmark->add_option("--optimizers", optimizers_csv, "Comma list; restricts the run");
  benchmark->add_option("--epochs", options.epochs, "Epoch count override");
  benchmark->add_flag("--plots", options.plots, "Also write SVG loss curves");
  benchmark->add_option("--format", options.format, "Extra report format: md");

  CLI::App* enhanced = app.add_subcommand(
      "enhanced", "Grid search, cross-validation and final retrain for one optimizer");
  add_common(enhanced);
  enhanced->add_option("--config", options.config_path, "Experiment config file");
  enhanced->add_option("--optimizers", optimizers_csv, "Single optimizer to enhance");
  enhanced->add_option("--epochs", options.epochs, "Epoch cap override");
  enhanced->add_option("--format", options.format, "Extra report format: md");

  CLI::App* report =
      app.add_subcommand("report", "Re-render a stored key-value report");
  add_common(report);
  report->add_option("--format", options.format, "Target format: kv, csv or md");

  CLI11_PARSE(app, argc, argv);

  if (!optimizers_csv.empty()) {
    std::string item;
    for (const char c : optimizers_csv + ",") {
      if (c == ',') {
        if (!item.empty()) options.optimizers.push_back(item);
        item.clear();
      } else if (c != ' ') {
        item += c;
      }
    }
  }

  if (preprocess->parsed()) return optbench::cmd_preprocess(options, std::cout, std::cerr);
  if (benchmark->parsed()) return optbench::cmd_benchmark(options, std::cout, std::cerr);
  if (enhanced->parsed()) return optbench::cmd_enhanced(options, std::cout, std::cerr);
  return optbench::cmd_report(options, std::cout, std::cerr);
}
