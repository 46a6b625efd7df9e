#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "ewsg/model.hpp"
#include "ewsg/rng.hpp"
#include "ewsg/weights.hpp"

namespace ewsg {

enum class XPolicy { Recommended, Zero, Constant, MomentumKill };

enum class SamplerKind { FullGradient, Sghmc, Ewsg, Sgld, EwsgOverdamped, EwsgVr };

struct SamplerConfig {
  double h = 1e-2;
  double gamma = 1.0;
  double sigma = 0.0;  // <= 0 means auto: sqrt(2 * gamma), temperature T = 1
  int M = 1;           // index chain length
  int b = 1;           // minibatch size
  int K = 1;           // data passes (budget = K * n term-gradient evals)
  XPolicy x_policy = XPolicy::Recommended;
  double x_constant = 1.0;
  std::uint64_t seed = 0;
  int L = 1;  // variance-calibration period (EWSG-VR)
  bool persist_index = false;  // experimental: carry the index chain across outer steps
  int thin = 0;  // record every thin-th step into the trajectory; 0 = no recording

  /// Initial state. Empty theta0 means zeros; unset r0 means a standard
  /// normal draw from the chain's noise stream.
  Eigen::VectorXd theta0;
  std::optional<Eigen::VectorXd> r0;

  /// When positive, run exactly this many outer steps instead of deriving
  /// the count from the K-data-pass budget (used by scaling protocols).
  long steps_override = 0;

  double resolved_sigma() const;
  void validate(int n) const;
};

struct ChainState {
  Eigen::VectorXd theta;
  Eigen::VectorXd r;  // empty for overdamped samplers
  long k = 0;
  long grad_evals = 0;
  bool diverged = false;
};

struct RunResult {
  std::vector<ChainState> final_states;
  /// One matrix per chain when thinning is enabled; each row is a recorded
  /// state (theta for overdamped, [theta, r] for underdamped).
  std::vector<Eigen::MatrixXd> trajectories;
  long steps_per_chain = 0;
  long total_grad_evals = 0;
  int diverged_count = 0;
  // EWSG-VR friction-matrix audit.
  int psd_clamp_warnings = 0;
  double min_friction_eigenvalue = 0.0;

  /// Final theta of each non-diverged chain, one row per chain.
  Eigen::MatrixXd final_theta_matrix() const;
};

/// x for one outer iteration, computed from the current momentum.
Eigen::VectorXd policy_x(const SamplerConfig& config, const Eigen::VectorXd& r);

/// One Euler-Maruyama step of underdamped Langevin:
/// theta' = theta + r*h; r' = r - (g + gamma*r)*h + sigma*sqrt(h)*noise.
/// theta' uses the pre-update r. Flags the chain diverged on non-finite output.
void em_step_uld(ChainState& state, const Eigen::VectorXd& gradient_estimate,
                 double h, double gamma, double sigma, const Eigen::VectorXd& noise);

/// As em_step_uld with matrix friction, treated semi-implicitly so the step
/// stays stable for arbitrarily large positive semi-definite Gamma:
/// theta' = theta + r*h; r' = (I + h*Gamma)^{-1} (r - g*h + sigma*sqrt(h)*noise).
/// The calibrated friction can exceed the explicit-scheme stability limit
/// (h * ||Gamma|| > 2) on heterogeneous data, so the friction term is solved
/// implicitly; the scheme remains first-order accurate.
void em_step_matrix_friction(ChainState& state, const Eigen::VectorXd& gradient_estimate,
                             double h, const Eigen::MatrixXd& Gamma, double sigma,
                             const Eigen::VectorXd& noise);

/// Outer-step count for a sampler under the K-data-pass budget.
long sampler_steps(SamplerKind kind, const SamplerConfig& config, int n);

RunResult run_full_gradient_uld(const GradientModel& model, const SamplerConfig& config, int chains);
RunResult run_sghmc(const GradientModel& model, const SamplerConfig& config, int chains);
RunResult run_ewsg(const GradientModel& model, const SamplerConfig& config, int chains);
RunResult run_overdamped(const GradientModel& model, const SamplerConfig& config, int chains, bool weighted);
RunResult run_ewsg_vr(const GradientModel& model, const SamplerConfig& config, int chains);

RunResult run_sampler(SamplerKind kind, const GradientModel& model,
                      const SamplerConfig& config, int chains);

struct BudgetReport {
  long allowed_per_chain = 0;
  long max_per_chain = 0;
  long total = 0;
  bool ok = false;
};

/// Verifies the gradient-evaluation ledger against the K*n budget, with one
/// outer iteration of slack (plus the per-calibration passes for EWSG-VR).
BudgetReport budget_audit(const RunResult& result, const SamplerConfig& config,
                          const GradientModel& model, SamplerKind kind);

}  // namespace ewsg
