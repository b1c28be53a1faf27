// perceptlab CLI: list experiments, run a config, verify an artifact
// directory, or sweep one config key over a list of values.
//
//   perceptlab list [name]
//   perceptlab run <config-file>
//   perceptlab verify <artifact-dir>
//   perceptlab sweep <config-file> --param <section.key> --values <v1,v2,...>
//
// The artifact root comes from PERCEPTLAB_OUT (default ./artifacts); exit
// status is 0 iff every verification check passes.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "perceptlab/config.hpp"
#include "perceptlab/experiments.hpp"
#include "perceptlab/io.hpp"

namespace {

namespace fs = std::filesystem;
using namespace perceptlab;

fs::path output_root() {
  if (const char* env = std::getenv("PERCEPTLAB_OUT")) return fs::path(env);
  return fs::path("artifacts");
}

void print_parse_errors(const std::vector<config::ParseError>& errors) {
  for (const auto& e : errors) {
    if (e.line > 0) std::cerr << "error (line " << e.line << "): " << e.message << "\n";
    else std::cerr << "error: " << e.message << "\n";
  }
}

int cmd_list(const std::string& name) {
  if (!name.empty()) {
    const experiments::ExperimentInfo* info = experiments::find_experiment(name);
    if (!info) {
      std::cerr << "unknown experiment '" << name << "'; did you mean '"
                << experiments::closest_experiment(name) << "'?\n";
      return 1;
    }
    std::cout << info->name << "\n  " << info->description << "\n  [" << info->anchor << "]\n";
    return 0;
  }
  for (const auto& info : experiments::list_experiments()) {
    std::cout << info.name << "\n  " << info.description << "\n  [" << info.anchor << "]\n";
  }
  return 0;
}

int report_and_exit(const experiments::VerificationReport& report) {
  std::cout << experiments::report_to_text(report);
  return report.overall() ? 0 : 1;
}

int cmd_run(const std::string& config_file) {
  const auto parsed = config::parse_config(io::read_file(config_file));
  if (!parsed.ok()) {
    print_parse_errors(parsed.errors);
    return 2;
  }
  const auto artifact = experiments::run(*parsed.config, output_root());
  std::cout << "artifacts: " << artifact.dir.string() << "\n";
  return report_and_exit(artifact.report);
}

int cmd_verify(const std::string& dir) {
  return report_and_exit(experiments::verify(dir));
}

int cmd_sweep(const std::string& config_file, const std::string& param,
              const std::string& values) {
  const std::string text = io::read_file(config_file);
  int failures = 0;
  io::CsvTable summary;
  summary.header = {"value", "overall_pass"};
  std::vector<std::string> value_list;
  for (auto& v : io::split(values, ',')) {
    const auto trimmed = io::trim(v);
    if (!trimmed.empty()) value_list.emplace_back(trimmed);
  }
  if (value_list.empty()) {
    std::cerr << "error: --values is empty\n";
    return 2;
  }
  fs::path sweep_root;
  for (const std::string& value : value_list) {
    const std::pair<std::string, std::string> overrides[] = {{param, value}};
    auto parsed = config::parse_config(text, overrides);
    if (!parsed.ok()) {
      print_parse_errors(parsed.errors);
      return 2;
    }
    auto cfg = *parsed.config;
    cfg.output += "/sweep_" + param + "_" + value;
    const auto artifact = experiments::run(cfg, output_root());
    sweep_root = artifact.dir.parent_path();
    const bool pass = artifact.report.overall();
    std::cout << param << " = " << value << ": " << (pass ? "pass" : "fail") << " ("
              << artifact.dir.string() << ")\n";
    bool numeric = false;
    const double value_num = io::parse_double(value, &numeric);
    summary.rows.push_back({numeric ? value_num : 0.0, pass ? 1.0 : 0.0});
    if (!pass) ++failures;
  }
  if (!sweep_root.empty())
    io::write_file_atomic(sweep_root / "sweep_summary.csv", io::to_csv(summary));
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perception-informed neural network laboratory"};
  app.require_subcommand(1);

  std::string name, config_file, artifact_dir, param, values;

  auto* list = app.add_subcommand("list", "list experiments (optionally just one)");
  list->add_option("name", name, "experiment name");

  auto* run = app.add_subcommand("run", "run an experiment config and verify it");
  run->add_option("config", config_file, "config file")->required()->check(CLI::ExistingFile);

  auto* verify = app.add_subcommand("verify", "re-verify an artifact directory");
  verify->add_option("dir", artifact_dir, "artifact directory")
      ->required()
      ->check(CLI::ExistingDirectory);

  auto* sweep = app.add_subcommand("sweep", "run a config over a list of values for one key");
  sweep->add_option("config", config_file, "config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--param", param, "config key, e.g. train.seed")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) return cmd_list(name);
    if (run->parsed()) return cmd_run(config_file);
    if (verify->parsed()) return cmd_verify(artifact_dir);
    if (sweep->parsed()) return cmd_sweep(config_file, param, values);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
