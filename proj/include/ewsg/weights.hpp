#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ewsg {

/// Everything needed to evaluate the exponential weights at a fixed chain
/// state: the hyperparameter vector x and the gradient scaling
/// scale = sqrt(h)/sigma, so a_i = scale * grad V_i(theta).
struct WeightContext {
  Eigen::VectorXd x;
  double scale = 0.0;
  int n = 0;  // term count
  int b = 1;  // minibatch size
};

/// State of the Metropolis-Hastings index chain: the current minibatch
/// (sorted, distinct), the raw sum of its per-term gradients, the mean
/// (1/b) sum_j grad V_{i_j}, and the cached log score
/// 0.5 * ||x + n * scale * mean_gradient||^2. The sum is kept so that the
/// b=n gradient estimate (n/b) * sum is bitwise the full gradient.
struct IndexState {
  std::vector<int> batch;
  Eigen::VectorXd sum_gradient;
  Eigen::VectorXd mean_gradient;
  double log_score = 0.0;
};

/// 0.5 * ||x + n * scale * grad_i||^2. The shared term of the exponential
/// weight formula is omitted; it cancels in both normalization and MH ratios.
double unnormalized_log_weight(const WeightContext& ctx, const Eigen::VectorXd& grad_i);

/// Scaled minibatch gradient a = scale * (1/b) sum_j grad V_{i_j}, given the
/// b x d matrix of per-term gradients in the batch. Reduces to a_i at b=1.
Eigen::VectorXd minibatch_a(const WeightContext& ctx, const Eigen::MatrixXd& batch_gradients);

/// Exact exponential weight distribution over all n terms, from the n x d
/// matrix of per-term gradients. Stable (max log-weight subtracted), sums
/// to 1, strictly positive.
Eigen::VectorXd exact_weights(const WeightContext& ctx, const Eigen::MatrixXd& all_gradients);

/// Builds the chain state from a batch and the sum of its term gradients
/// (equal to the single gradient at b=1).
IndexState make_index_state(const WeightContext& ctx, std::vector<int> batch,
                            Eigen::VectorXd sum_gradient);

/// One Metropolis-Hastings step of the index chain. The proposal batch is
/// drawn uniformly by the caller, and the uniform draw in [0,1) is injected,
/// so the operation is deterministic and directly testable. Accepts with
/// probability min{1, exp(proposal score - current score)}.
IndexState mh_index_step(const IndexState& state, const WeightContext& ctx,
                         std::vector<int> proposal_batch,
                         Eigen::VectorXd proposal_sum_gradient,
                         double uniform_draw);

/// The recommended x: sqrt(h) * gamma * r / sigma.
Eigen::VectorXd recommended_x(double h, double gamma, double sigma, const Eigen::VectorXd& r);

/// The momentum-kill x: (-1 + h * gamma) * r / (sigma * sqrt(h)), i.e. the x
/// that corresponds to r_{k+1} = 0.
Eigen::VectorXd momentum_kill_x(double h, double gamma, double sigma, const Eigen::VectorXd& r);

}  // namespace ewsg
