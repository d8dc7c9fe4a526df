#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gdiff {

enum class ExperimentKind { kToy2d, kToy3d, kAdsnDeblur, kAdsnGenerate };

std::string kind_name(ExperimentKind kind);

/// Parsed experiment description. See docs/config-format.md for the grammar.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kToy2d;
  std::uint64_t seed = 0;
  std::string output_dir = ".";

  int steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  // Toy problems.
  Eigen::VectorXd prior_mean;
  Eigen::MatrixXd prior_cov;
  std::vector<int> observed;                    // observed coordinate indices
  std::optional<Eigen::VectorXd> observation;   // explicit v, else synthesized

  // Texture problems.
  std::string texture_path;
  std::string kernel_spec;  // "bicubic:<factor>" or a kernel file path
  int sample_count = 1;

  double sigma = 10.0 / 255.0;

  std::vector<std::string> model_names;
  std::optional<double> alpha_dps;

  std::string config_path;  // provenance, echoed into summary.json
};

struct ConfigValidation {
  std::optional<ExperimentConfig> config;  // set when errors is empty
  std::vector<std::string> errors;         // every violation, not fail-fast
};

/// Parses and cross-checks a config file; collects all violations.
ConfigValidation validate_config(const std::string& path);

/// Parses a config, throwing ParameterError with the aggregated report on
/// any violation.
ExperimentConfig load_config(const std::string& path);

/// Runs the experiment and writes curves.csv, summary.json and any PNG
/// artifacts into the output directory (GDIFF_OUTPUT_DIR overrides).
/// Deterministic given the seed. Throws on config, instability or I/O errors.
void run_experiment(const ExperimentConfig& config);

}  // namespace gdiff
