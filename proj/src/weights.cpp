#include "ewsg/weights.hpp"

#include <cmath>
#include <stdexcept>

namespace ewsg {

double unnormalized_log_weight(const WeightContext& ctx, const Eigen::VectorXd& grad_i) {
  if (!grad_i.allFinite()) throw std::invalid_argument("unnormalized_log_weight: non-finite gradient");
  return 0.5 * (ctx.x + ctx.n * ctx.scale * grad_i).squaredNorm();
}

Eigen::VectorXd minibatch_a(const WeightContext& ctx, const Eigen::MatrixXd& batch_gradients) {
  if (batch_gradients.rows() < 1) throw std::invalid_argument("minibatch_a: empty batch");
  return ctx.scale * batch_gradients.colwise().mean().transpose();
}

Eigen::VectorXd exact_weights(const WeightContext& ctx, const Eigen::MatrixXd& all_gradients) {
  const int n = static_cast<int>(all_gradients.rows());
  if (n < 1) throw std::invalid_argument("exact_weights: need n >= 1");
  Eigen::VectorXd logw(n);
  for (int i = 0; i < n; ++i)
    logw[i] = unnormalized_log_weight(ctx, all_gradients.row(i).transpose());
  const double m = logw.maxCoeff();
  Eigen::VectorXd w = (logw.array() - m).exp();
  return w / w.sum();
}

IndexState make_index_state(const WeightContext& ctx, std::vector<int> batch,
                            Eigen::VectorXd sum_gradient) {
  if (batch.empty()) throw std::invalid_argument("make_index_state: empty batch");
  IndexState s;
  s.mean_gradient = sum_gradient / static_cast<double>(batch.size());
  s.log_score = unnormalized_log_weight(ctx, s.mean_gradient);
  s.batch = std::move(batch);
  s.sum_gradient = std::move(sum_gradient);
  return s;
}

IndexState mh_index_step(const IndexState& state, const WeightContext& ctx,
                         std::vector<int> proposal_batch,
                         Eigen::VectorXd proposal_sum_gradient,
                         double uniform_draw) {
  IndexState proposal = make_index_state(ctx, std::move(proposal_batch),
                                         std::move(proposal_sum_gradient));
  const double log_ratio = proposal.log_score - state.log_score;
  if (log_ratio >= 0.0 || uniform_draw < std::exp(log_ratio)) return proposal;
  return state;
}

Eigen::VectorXd recommended_x(double h, double gamma, double sigma, const Eigen::VectorXd& r) {
  if (h <= 0.0 || sigma <= 0.0) throw std::invalid_argument("recommended_x: need h > 0 and sigma > 0");
  return (std::sqrt(h) * gamma / sigma) * r;
}

Eigen::VectorXd momentum_kill_x(double h, double gamma, double sigma, const Eigen::VectorXd& r) {
  if (h <= 0.0 || sigma <= 0.0) throw std::invalid_argument("momentum_kill_x: need h > 0 and sigma > 0");
  return ((-1.0 + h * gamma) / (sigma * std::sqrt(h))) * r;
}

}  // namespace ewsg
