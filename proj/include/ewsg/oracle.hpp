#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ewsg/model.hpp"
#include "ewsg/samplers.hpp"

namespace ewsg {

/// Deviation vectors b_i = n grad V_i(theta) - grad V(theta), one per row.
/// Rows sum to zero by construction.
struct LPInstance {
  Eigen::MatrixXd b_vectors;  // n x d
  int n() const { return static_cast<int>(b_vectors.rows()); }
  int d() const { return static_cast<int>(b_vectors.cols()); }
};

LPInstance lp_instance_from_model(const GradientModel& model, const Eigen::VectorXd& theta);

struct LPSolution {
  Eigen::VectorXd p;
  double objective = 0.0;
  std::vector<int> support;
};

/// Solves min sum_i p_i ||b_i||^2 s.t. B p = 0, sum p = 1, p >= 0 by
/// enumerating candidate supports of size <= d+1 (LP optima lie at basic
/// feasible solutions). Exact at small scale; intended for n <= 14, d <= 3.
LPSolution lp_min_trace_distribution(const LPInstance& instance);

/// Runs the MH index chain on a frozen (theta, r) for inner_steps and
/// returns the total-variation distance between the empirical index
/// frequencies and the exact weight distribution.
double index_chain_stationary_tv(const GradientModel& model, const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& r, const SamplerConfig& config,
                                 long inner_steps, std::uint64_t seed);

/// x_k = (I + A h)^k x_0 with A = [[0, 1], [-1, -gamma]].
Eigen::Vector2d linear_mean_recursion(double gamma, double h, const Eigen::Vector2d& x0, long k);

}  // namespace ewsg
