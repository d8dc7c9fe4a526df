#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "gdiff/errors.hpp"
#include "gdiff/experiment.hpp"
#include "gdiff/version.hpp"

namespace {

// Exit codes: 0 success, 2 config error, 3 numerical instability, 4 I/O error.
enum ExitCode { kOk = 0, kConfigError = 2, kInstability = 3, kIoFailure = 4 };

int run(const std::string& config_path) {
  gdiff::ExperimentConfig cfg = gdiff::load_config(config_path);
  gdiff::run_experiment(cfg);
  return kOk;
}

int validate(const std::string& config_path) {
  gdiff::ConfigValidation v = gdiff::validate_config(config_path);
  if (v.config) {
    std::printf("%s: ok\n", config_path.c_str());
    return kOk;
  }
  std::fprintf(stderr, "%s: %zu problem(s)\n", config_path.c_str(),
               v.errors.size());
  for (const auto& e : v.errors) std::fprintf(stderr, "  - %s\n", e.c_str());
  return kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact Wasserstein evaluation of Gaussian diffusion samplers"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config");
  run_cmd->add_option("config", config_path, "Path to the config file")
      ->required();
  auto* validate_cmd =
      app.add_subcommand("validate", "Check a config and report every problem");
  validate_cmd->add_option("config", config_path, "Path to the config file")
      ->required();
  auto* version_cmd = app.add_subcommand("version", "Print the version");

  CLI11_PARSE(app, argc, argv);

  try {
    if (version_cmd->parsed()) {
      std::printf("gdiff %s\n", gdiff::kVersion);
      return kOk;
    }
    if (validate_cmd->parsed()) return validate(config_path);
    return run(config_path);
  } catch (const gdiff::InstabilityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInstability;
  } catch (const gdiff::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIoFailure;
  } catch (const gdiff::ParameterError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfigError;
  }
}
