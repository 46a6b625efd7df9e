#include "ewsg/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ewsg/rng.hpp"
#include "ewsg/weights.hpp"

namespace ewsg {

LPInstance lp_instance_from_model(const GradientModel& model, const Eigen::VectorXd& theta) {
  LPInstance inst;
  inst.b_vectors.resize(model.n, model.d);
  Eigen::VectorXd g(model.d);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(model.d);
  for (int i = 0; i < model.n; ++i) {
    model.term_gradient(i, theta, g);
    inst.b_vectors.row(i) = (model.n * g).transpose();
    full += g;
  }
  inst.b_vectors.rowwise() -= full.transpose();
  return inst;
}

namespace {

/// Visit all size-s index subsets of [0, n) in lexicographic order.
template <typename Fn>
void for_each_combination(int n, int s, Fn fn) {
  std::vector<int> idx(s);
  for (int i = 0; i < s; ++i) idx[i] = i;
  while (true) {
    fn(idx);
    int i = s - 1;
    while (i >= 0 && idx[i] == n - s + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

LPSolution lp_min_trace_distribution(const LPInstance& instance) {
  const int n = instance.n();
  const int d = instance.d();
  const Eigen::VectorXd sq = instance.b_vectors.rowwise().squaredNorm();
  const double col_sum_norm = instance.b_vectors.colwise().sum().norm();
  if (col_sum_norm > 1e-8 * std::max(1.0, instance.b_vectors.norm()))
    throw std::invalid_argument("lp_min_trace_distribution: rows of b_vectors must sum to zero");

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d + 1);
  rhs[d] = 1.0;

  LPSolution best;
  best.objective = std::numeric_limits<double>::infinity();
  const double feas_tol = 1e-9;

  for (int s = 1; s <= std::min(n, d + 1); ++s) {
    Eigen::MatrixXd A(d + 1, s);
    for_each_combination(n, s, [&](const std::vector<int>& support) {
      for (int j = 0; j < s; ++j) {
        A.col(j).head(d) = instance.b_vectors.row(support[j]).transpose();
        A(d, j) = 1.0;
      }
      Eigen::VectorXd p = A.colPivHouseholderQr().solve(rhs);
      if ((A * p - rhs).norm() > feas_tol) return;  // infeasible support
      if ((p.array() < -feas_tol).any()) return;
      double obj = 0.0;
      for (int j = 0; j < s; ++j) obj += std::max(p[j], 0.0) * sq[support[j]];
      // Strict improvement wins; ties go to the earlier (lexicographically
      // smaller) support, which is the one already held.
      if (obj < best.objective - 1e-12) {
        best.objective = obj;
        best.support = support;
        best.p = Eigen::VectorXd::Zero(n);
        for (int j = 0; j < s; ++j) best.p[support[j]] = std::max(p[j], 0.0);
        best.p /= best.p.sum();
      }
    });
  }
  if (!std::isfinite(best.objective))
    throw std::runtime_error("lp_min_trace_distribution: no feasible support found");
  return best;
}

double index_chain_stationary_tv(const GradientModel& model, const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& r, const SamplerConfig& config,
                                 long inner_steps, std::uint64_t seed) {
  Eigen::MatrixXd grads(model.n, model.d);
  Eigen::VectorXd g(model.d);
  for (int i = 0; i < model.n; ++i) {
    model.term_gradient(i, theta, g);
    grads.row(i) = g.transpose();
  }
  WeightContext ctx;
  ctx.scale = std::sqrt(config.h) / config.resolved_sigma();
  ctx.n = model.n;
  ctx.b = 1;
  ctx.x = policy_x(config, r);

  const Eigen::VectorXd p = exact_weights(ctx, grads);

  RngStream rng(seed, 0, RngStream::kIndex);
  int current = rng.uniform_index(model.n);
  IndexState state = make_index_state(ctx, {current}, grads.row(current).transpose());
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(model.n);
  for (long t = 0; t < inner_steps; ++t) {
    const int j = rng.uniform_index(model.n);
    state = mh_index_step(state, ctx, {j}, grads.row(j).transpose(), rng.uniform());
    freq[state.batch.front()] += 1.0;
  }
  freq /= static_cast<double>(inner_steps);
  return 0.5 * (freq - p).cwiseAbs().sum();
}

Eigen::Vector2d linear_mean_recursion(double gamma, double h, const Eigen::Vector2d& x0, long k) {
  if (k < 0) throw std::invalid_argument("linear_mean_recursion: k must be >= 0");
  Eigen::Matrix2d step;
  step << 1.0, h, -h, 1.0 - gamma * h;
  Eigen::Vector2d x = x0;
  for (long i = 0; i < k; ++i) x = step * x;
  return x;
}

}  // namespace ewsg
