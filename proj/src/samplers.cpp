#include "ewsg/samplers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ewsg {

double SamplerConfig::resolved_sigma() const {
  return sigma > 0.0 ? sigma : std::sqrt(2.0 * gamma);
}

void SamplerConfig::validate(int n) const {
  if (h <= 0.0) throw std::invalid_argument("SamplerConfig: h must be positive");
  if (gamma <= 0.0) throw std::invalid_argument("SamplerConfig: gamma must be positive");
  if (resolved_sigma() <= 0.0) throw std::invalid_argument("SamplerConfig: sigma must be positive");
  if (M < 0) throw std::invalid_argument("SamplerConfig: M must be >= 0");
  if (b < 1 || b > n) throw std::invalid_argument("SamplerConfig: need 1 <= b <= n");
  if (K < 1) throw std::invalid_argument("SamplerConfig: K must be >= 1");
  if (L < 1) throw std::invalid_argument("SamplerConfig: L must be >= 1");
  if (thin < 0) throw std::invalid_argument("SamplerConfig: thin must be >= 0");
}

Eigen::MatrixXd RunResult::final_theta_matrix() const {
  const int live = static_cast<int>(final_states.size()) - diverged_count;
  if (live <= 0) return {};
  const int d = static_cast<int>(final_states.front().theta.size());
  Eigen::MatrixXd out(live, d);
  int row = 0;
  for (const auto& s : final_states)
    if (!s.diverged) out.row(row++) = s.theta.transpose();
  return out;
}

Eigen::VectorXd policy_x(const SamplerConfig& config, const Eigen::VectorXd& r) {
  switch (config.x_policy) {
    case XPolicy::Recommended:
      return recommended_x(config.h, config.gamma, config.resolved_sigma(), r);
    case XPolicy::Zero:
      return Eigen::VectorXd::Zero(r.size());
    case XPolicy::Constant:
      return Eigen::VectorXd::Constant(r.size(), config.x_constant);
    case XPolicy::MomentumKill:
      return momentum_kill_x(config.h, config.gamma, config.resolved_sigma(), r);
  }
  throw std::logic_error("policy_x: unknown policy");
}

void em_step_uld(ChainState& state, const Eigen::VectorXd& gradient_estimate,
                 double h, double gamma, double sigma, const Eigen::VectorXd& noise) {
  state.theta += h * state.r;
  state.r += -h * (gradient_estimate + gamma * state.r) + sigma * std::sqrt(h) * noise;
  ++state.k;
  if (!state.theta.allFinite() || !state.r.allFinite()) state.diverged = true;
}

void em_step_matrix_friction(ChainState& state, const Eigen::VectorXd& gradient_estimate,
                             double h, const Eigen::MatrixXd& Gamma, double sigma,
                             const Eigen::VectorXd& noise) {
  state.theta += h * state.r;
  const Eigen::VectorXd rhs =
      state.r - h * gradient_estimate + sigma * std::sqrt(h) * noise;
  const Eigen::MatrixXd lhs =
      Eigen::MatrixXd::Identity(Gamma.rows(), Gamma.cols()) + h * Gamma;
  state.r = lhs.ldlt().solve(rhs);
  ++state.k;
  if (!state.theta.allFinite() || !state.r.allFinite()) state.diverged = true;
}

long sampler_steps(SamplerKind kind, const SamplerConfig& config, int n) {
  if (config.steps_override > 0) return config.steps_override;
  const long budget = static_cast<long>(config.K) * n;
  auto ceil_div = [](long a, long b) { return (a + b - 1) / b; };
  switch (kind) {
    case SamplerKind::FullGradient:
      return config.K;
    case SamplerKind::Sghmc:
    case SamplerKind::Sgld:
      return ceil_div(budget, config.b);
    case SamplerKind::Ewsg:
    case SamplerKind::EwsgOverdamped:
      return ceil_div(budget, static_cast<long>(config.M + 1) * config.b);
    case SamplerKind::EwsgVr:
      // Handled by its own pass-structured loop.
      return ceil_div(static_cast<long>(n), config.M + 1) * config.K;
  }
  throw std::logic_error("sampler_steps: unknown kind");
}

namespace {

constexpr double kTemperature = 1.0;

struct Recorder {
  Eigen::MatrixXd rows;
  long count = 0;
  int thin;
  Recorder(int thin_, long steps, int width) : thin(thin_) {
    if (thin > 0) rows.resize(steps / thin, width);
  }
  void record(long k, const ChainState& s, bool underdamped) {
    if (thin <= 0 || k % thin != 0 || count >= rows.rows()) return;
    rows.row(count).head(s.theta.size()) = s.theta.transpose();
    if (underdamped) rows.row(count).tail(s.r.size()) = s.r.transpose();
    ++count;
  }
  Eigen::MatrixXd take() { return rows.topRows(count); }
};

ChainState init_chain(const GradientModel& model, const SamplerConfig& config,
                      RngStream& noise, bool underdamped) {
  ChainState s;
  s.theta = config.theta0.size() > 0 ? config.theta0 : Eigen::VectorXd::Zero(model.d);
  if (underdamped) {
    if (config.r0) {
      s.r = *config.r0;
    } else {
      s.r.resize(model.d);
      noise.fill_normal(s.r);
    }
  }
  return s;
}

/// Sum of the per-term gradients over a batch, accumulated in batch order;
/// one budget unit per term. At b=n the sorted batch reproduces the
/// full-gradient accumulation bitwise.
Eigen::VectorXd batch_sum_gradient(const GradientModel& model, const std::vector<int>& batch,
                                   const Eigen::VectorXd& theta, long& grad_evals) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(model.d);
  Eigen::VectorXd g(model.d);
  for (int i : batch) {
    model.term_gradient(i, theta, g);
    sum += g;
  }
  grad_evals += static_cast<long>(batch.size());
  return sum;
}

template <typename StepFn>
RunResult run_chains(const GradientModel& model, const SamplerConfig& config,
                     int chains, long steps, bool underdamped, StepFn per_chain) {
  RunResult result;
  result.steps_per_chain = steps;
  result.final_states.resize(chains);
  if (config.thin > 0) result.trajectories.resize(chains);
  result.min_friction_eigenvalue = std::numeric_limits<double>::infinity();
  for (int c = 0; c < chains; ++c) {
    RngStream noise(config.seed, static_cast<std::uint64_t>(c), RngStream::kNoise);
    RngStream index(config.seed, static_cast<std::uint64_t>(c), RngStream::kIndex);
    ChainState state = init_chain(model, config, noise, underdamped);
    Recorder rec(config.thin, steps, underdamped ? 2 * model.d : model.d);
    per_chain(state, noise, index, rec, result);
    result.final_states[c] = std::move(state);
    if (result.final_states[c].diverged) ++result.diverged_count;
    result.total_grad_evals += result.final_states[c].grad_evals;
    if (config.thin > 0) result.trajectories[c] = rec.take();
  }
  if (!std::isfinite(result.min_friction_eigenvalue)) result.min_friction_eigenvalue = 0.0;
  return result;
}

}  // namespace

RunResult run_full_gradient_uld(const GradientModel& model, const SamplerConfig& config, int chains) {
  config.validate(model.n);
  const long steps = sampler_steps(SamplerKind::FullGradient, config, model.n);
  const double sigma = config.resolved_sigma();
  return run_chains(model, config, chains, steps, true,
                    [&](ChainState& state, RngStream& noise, RngStream&, Recorder& rec, RunResult&) {
                      Eigen::VectorXd xi(model.d);
                      for (long k = 0; k < steps && !state.diverged; ++k) {
                        const Eigen::VectorXd g = model.full_gradient(state.theta);
                        state.grad_evals += model.n;
                        noise.fill_normal(xi);
                        em_step_uld(state, g, config.h, config.gamma, sigma, xi);
                        rec.record(k + 1, state, true);
                      }
                    });
}

RunResult run_sghmc(const GradientModel& model, const SamplerConfig& config, int chains) {
  config.validate(model.n);
  const long steps = sampler_steps(SamplerKind::Sghmc, config, model.n);
  const double sigma = config.resolved_sigma();
  return run_chains(model, config, chains, steps, true,
                    [&](ChainState& state, RngStream& noise, RngStream& index, Recorder& rec, RunResult&) {
                      Eigen::VectorXd xi(model.d);
                      const double est_factor = static_cast<double>(model.n) / config.b;
                      for (long k = 0; k < steps && !state.diverged; ++k) {
                        const auto batch = index.sample_without_replacement(model.n, config.b);
                        const Eigen::VectorXd sum_g =
                            batch_sum_gradient(model, batch, state.theta, state.grad_evals);
                        noise.fill_normal(xi);
                        em_step_uld(state, est_factor * sum_g, config.h, config.gamma, sigma, xi);
                        rec.record(k + 1, state, true);
                      }
                    });
}

RunResult run_ewsg(const GradientModel& model, const SamplerConfig& config, int chains) {
  config.validate(model.n);
  const long steps = sampler_steps(SamplerKind::Ewsg, config, model.n);
  const double sigma = config.resolved_sigma();
  WeightContext ctx;
  ctx.scale = std::sqrt(config.h) / sigma;
  ctx.n = model.n;
  ctx.b = config.b;
  return run_chains(model, config, chains, steps, true,
                    [&, ctx](ChainState& state, RngStream& noise, RngStream& index, Recorder& rec, RunResult&) mutable {
                      Eigen::VectorXd xi(model.d);
                      IndexState idx;
                      const double est_factor = static_cast<double>(model.n) / config.b;
                      for (long k = 0; k < steps && !state.diverged; ++k) {
                        ctx.x = policy_x(config, state.r);
                        std::vector<int> start = (config.persist_index && k > 0)
                                                     ? idx.batch
                                                     : index.sample_without_replacement(model.n, config.b);
                        idx = make_index_state(
                            ctx, start, batch_sum_gradient(model, start, state.theta, state.grad_evals));
                        for (int m = 0; m < config.M; ++m) {
                          auto proposal = index.sample_without_replacement(model.n, config.b);
                          Eigen::VectorXd pg =
                              batch_sum_gradient(model, proposal, state.theta, state.grad_evals);
                          idx = mh_index_step(idx, ctx, std::move(proposal), std::move(pg),
                                              index.uniform());
                        }
                        noise.fill_normal(xi);
                        em_step_uld(state, est_factor * idx.sum_gradient, config.h, config.gamma,
                                    sigma, xi);
                        rec.record(k + 1, state, true);
                      }
                    });
}

RunResult run_overdamped(const GradientModel& model, const SamplerConfig& config, int chains,
                         bool weighted) {
  config.validate(model.n);
  const SamplerKind kind = weighted ? SamplerKind::EwsgOverdamped : SamplerKind::Sgld;
  const long steps = sampler_steps(kind, config, model.n);
  WeightContext ctx;
  ctx.scale = std::sqrt(config.h) / std::sqrt(2.0);
  ctx.n = model.n;
  ctx.b = config.b;
  // App. E gives no momentum to build x from; zero unless explicitly constant.
  ctx.x = config.x_policy == XPolicy::Constant
              ? Eigen::VectorXd::Constant(model.d, config.x_constant)
              : Eigen::VectorXd::Zero(model.d);
  const double noise_amp = std::sqrt(2.0 * config.h);
  return run_chains(model, config, chains, steps, false,
                    [&, ctx](ChainState& state, RngStream& noise, RngStream& index, Recorder& rec, RunResult&) {
                      Eigen::VectorXd xi(model.d);
                      IndexState idx;
                      const double est_factor = static_cast<double>(model.n) / config.b;
                      for (long k = 0; k < steps && !state.diverged; ++k) {
                        auto batch = index.sample_without_replacement(model.n, config.b);
                        idx = make_index_state(
                            ctx, batch, batch_sum_gradient(model, batch, state.theta, state.grad_evals));
                        if (weighted) {
                          for (int m = 0; m < config.M; ++m) {
                            auto proposal = index.sample_without_replacement(model.n, config.b);
                            Eigen::VectorXd pg =
                                batch_sum_gradient(model, proposal, state.theta, state.grad_evals);
                            idx = mh_index_step(idx, ctx, std::move(proposal), std::move(pg),
                                                index.uniform());
                          }
                        }
                        noise.fill_normal(xi);
                        state.theta += -config.h * (est_factor * idx.sum_gradient) + noise_amp * xi;
                        ++state.k;
                        if (!state.theta.allFinite()) state.diverged = true;
                        rec.record(k + 1, state, false);
                      }
                    });
}

RunResult run_ewsg_vr(const GradientModel& model, const SamplerConfig& config, int chains) {
  config.validate(model.n);
  if (config.b != 1)
    throw std::invalid_argument("run_ewsg_vr: minibatch size must be 1");
  const double sigma = config.resolved_sigma();
  const long steps_per_pass = (model.n + config.M) / (config.M + 1);
  const long steps = steps_per_pass * config.K;
  WeightContext ctx;
  ctx.scale = std::sqrt(config.h) / sigma;
  ctx.n = model.n;
  ctx.b = 1;
  return run_chains(
      model, config, chains, steps, true,
      [&, ctx](ChainState& state, RngStream& noise, RngStream& index, Recorder& rec,
               RunResult& result) mutable {
        Eigen::VectorXd xi(model.d);
        Eigen::VectorXd m1(model.d);
        Eigen::MatrixXd m2(model.d, model.d);
        Eigen::MatrixXd anchor_grads(model.n, model.d);  // per-term gradients at omega
        Eigen::MatrixXd Gamma = config.gamma * Eigen::MatrixXd::Identity(model.d, model.d);
        Eigen::VectorXd g(model.d);
        IndexState idx;
        long k = 0;

        auto refresh_gamma = [&]() {
          Gamma = (sigma * sigma * Eigen::MatrixXd::Identity(model.d, model.d) +
                   config.h * (m2 - m1 * m1.transpose())) /
                  (2.0 * kTemperature);
          Gamma = 0.5 * (Gamma + Gamma.transpose());
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Gamma);
          const double min_eig = es.eigenvalues().minCoeff();
          if (min_eig < result.min_friction_eigenvalue)
            result.min_friction_eigenvalue = min_eig;
          if (min_eig < -1e-10) {
            ++result.psd_clamp_warnings;
            Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
            Gamma = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
          }
        };

        for (int pass = 0; pass < config.K && !state.diverged; ++pass) {
          if (pass % config.L == 0) {
            // Full calibration at anchor omega = theta; caches the per-term
            // gradients so later SVRG corrections cost no extra evaluations.
            m1.setZero();
            m2.setZero();
            for (int i = 0; i < model.n; ++i) {
              model.term_gradient(i, state.theta, g);
              anchor_grads.row(i) = g.transpose();
              m1 += g;
              m2 += model.n * g * g.transpose();
            }
            state.grad_evals += model.n;
            refresh_gamma();
          }
          for (long t = 0; t < steps_per_pass && !state.diverged; ++t) {
            ctx.x = policy_x(config, state.r);
            const int start = index.uniform_index(model.n);
            model.term_gradient(start, state.theta, g);
            ++state.grad_evals;
            idx = make_index_state(ctx, {start}, g);
            for (int m = 0; m < config.M; ++m) {
              const int j = index.uniform_index(model.n);
              model.term_gradient(j, state.theta, g);
              ++state.grad_evals;
              idx = mh_index_step(idx, ctx, {j}, g, index.uniform());
            }
            const int accepted = idx.batch.front();
            const Eigen::VectorXd grad_theta = idx.mean_gradient;
            noise.fill_normal(xi);
            em_step_matrix_friction(state, model.n * grad_theta, config.h, Gamma, sigma, xi);
            rec.record(++k, state, true);
            const Eigen::VectorXd grad_anchor = anchor_grads.row(accepted).transpose();
            m1 += grad_theta - grad_anchor;
            m2 += model.n * (grad_theta * grad_theta.transpose() -
                             grad_anchor * grad_anchor.transpose());
            refresh_gamma();
          }
        }
      });
}

RunResult run_sampler(SamplerKind kind, const GradientModel& model, const SamplerConfig& config,
                      int chains) {
  switch (kind) {
    case SamplerKind::FullGradient:
      return run_full_gradient_uld(model, config, chains);
    case SamplerKind::Sghmc:
      return run_sghmc(model, config, chains);
    case SamplerKind::Ewsg:
      return run_ewsg(model, config, chains);
    case SamplerKind::Sgld:
      return run_overdamped(model, config, chains, false);
    case SamplerKind::EwsgOverdamped:
      return run_overdamped(model, config, chains, true);
    case SamplerKind::EwsgVr:
      return run_ewsg_vr(model, config, chains);
  }
  throw std::logic_error("run_sampler: unknown kind");
}

BudgetReport budget_audit(const RunResult& result, const SamplerConfig& config,
                          const GradientModel& model, SamplerKind kind) {
  BudgetReport report;
  long per_step_cost = 0;
  switch (kind) {
    case SamplerKind::FullGradient:
      per_step_cost = model.n;
      break;
    case SamplerKind::Sghmc:
    case SamplerKind::Sgld:
      per_step_cost = config.b;
      break;
    case SamplerKind::Ewsg:
    case SamplerKind::EwsgOverdamped:
    case SamplerKind::EwsgVr:
      per_step_cost = static_cast<long>(config.M + 1) * config.b;
      break;
  }
  long allowed = static_cast<long>(config.K) * model.n + per_step_cost;
  if (kind == SamplerKind::EwsgVr) {
    // Exact pass structure: ceil(n/(M+1)) inner steps per pass, plus one
    // full data pass per calibration.
    const long calibrations = (config.K + config.L - 1) / config.L;
    const long steps_per_pass = (model.n + config.M) / (config.M + 1);
    allowed = static_cast<long>(config.K) * steps_per_pass * per_step_cost +
              calibrations * model.n;
  }
  if (config.steps_override > 0)
    allowed = config.steps_override * per_step_cost +
              (kind == SamplerKind::FullGradient ? 0 : per_step_cost);
  report.allowed_per_chain = allowed;
  for (const auto& s : result.final_states)
    report.max_per_chain = std::max(report.max_per_chain, s.grad_evals);
  report.total = result.total_grad_evals;
  report.ok = report.max_per_chain <= allowed;
  return report;
}

}  // namespace ewsg
