#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ewsg/diagnostics.hpp"
#include "ewsg/model.hpp"
#include "ewsg/samplers.hpp"

namespace ewsg {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ExperimentConfig {
  std::string run_id = "run";
  // Model: gaussian2d | blr | blr-synth | misspec | quadscalar.
  std::string model = "gaussian2d";
  std::string dataset_path;          // blr only
  int model_n = 50;                  // term count for synthetic models
  int model_p = 5;                   // feature dimension for blr-synth
  std::uint64_t model_seed = 2024;   // seeds centers / synthetic data
  double prior_variance = 10.0;
  bool standardize = false;
  // Sampler: fg | sghmc | ewsg | sgld | ewsg-od | ewsg-vr.
  std::string sampler = "ewsg";
  SamplerConfig sampler_config;
  int chains = 100;
  double divergence_threshold = 0.1;  // fraction of diverged chains that fails the run
  // Output.
  std::string out_path;      // empty: stdout
  std::string format = "csv";
  // Sweeps (at most one may be non-empty).
  std::vector<double> sweep_h;
  std::vector<double> sweep_T;
  double fixed_T = 0.0;  // sweep-h at fixed physical time T when > 0
};

struct MetricRow {
  std::string run_id, sampler, model;
  double h = 0.0, gamma = 0.0;
  int M = 0, b = 0, K = 0, chains = 0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
};

struct ResultRecord {
  ExperimentConfig config;
  std::vector<MetricRow> rows;
  int exit_code = 0;

  double metric(const std::string& name) const;
};

SamplerKind sampler_kind_from_name(const std::string& name);
void validate_config(const ExperimentConfig& config);
GradientModel build_model(const ExperimentConfig& config);

/// Synthetic logistic-regression data with a known true parameter drawn from
/// the model seed; used for the blr-synth model and for desk-scale checks.
Dataset synthetic_logistic_dataset(int n, int p, std::uint64_t seed,
                                   Eigen::VectorXd* theta_star = nullptr);

/// Runs one ensemble under the budget rule and computes diagnostics.
ResultRecord run_experiment(const ExperimentConfig& config);

/// Sweep over h (optionally at fixed physical time T) or over T at fixed h;
/// emits one MSE row per sweep point plus a fitted log-log slope.
ResultRecord run_sweep(const ExperimentConfig& config);

std::string to_csv(const ResultRecord& record);
std::string to_json(const ResultRecord& record);

/// Writes the record in the configured format; also returns the payload.
std::string emit_results(const ResultRecord& record);

}  // namespace ewsg
