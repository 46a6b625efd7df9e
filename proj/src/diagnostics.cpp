#include "ewsg/diagnostics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ewsg {

MomentSummary moment_summary(const Eigen::MatrixXd& samples) {
  const long count = samples.rows();
  if (count < 2) throw std::invalid_argument("moment_summary: need at least 2 samples");
  MomentSummary s;
  s.count = count;
  s.mean = samples.colwise().mean().transpose();
  Eigen::MatrixXd centered = samples.rowwise() - s.mean.transpose();
  s.covariance = centered.transpose() * centered / static_cast<double>(count - 1);
  return s;
}

double kl_gaussian(const MomentSummary& fit, const Eigen::VectorXd& target_mean,
                   const Eigen::MatrixXd& target_cov) {
  const int d = static_cast<int>(target_mean.size());
  if (fit.count < d + 2) throw std::invalid_argument("kl_gaussian: need >= d+2 samples");
  Eigen::LLT<Eigen::MatrixXd> llt_t(target_cov);
  if (llt_t.info() != Eigen::Success)
    throw std::invalid_argument("kl_gaussian: target covariance not positive definite");
  Eigen::LLT<Eigen::MatrixXd> llt_s(fit.covariance);
  if (llt_s.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.covariance);
    const double emin = es.eigenvalues().minCoeff();
    const double emax = es.eigenvalues().maxCoeff();
    throw std::runtime_error(
        "kl_gaussian: singular sample covariance (condition number " +
        std::to_string(emax / std::max(emin, 0.0)) + ")");
  }
  const Eigen::MatrixXd t_inv_s = llt_t.solve(fit.covariance);
  const Eigen::VectorXd dm = target_mean - fit.mean;
  double log_det_t = 0.0, log_det_s = 0.0;
  for (int i = 0; i < d; ++i) {
    log_det_t += 2.0 * std::log(llt_t.matrixL()(i, i));
    log_det_s += 2.0 * std::log(llt_s.matrixL()(i, i));
  }
  return 0.5 * (t_inv_s.trace() + dm.dot(llt_t.solve(dm)) - d + log_det_t - log_det_s);
}

double kl_gaussian(const Eigen::MatrixXd& samples, const Eigen::VectorXd& target_mean,
                   const Eigen::MatrixXd& target_cov) {
  return kl_gaussian(moment_summary(samples), target_mean, target_cov);
}

double mse_observable(const std::vector<Eigen::MatrixXd>& trajectories,
                      const std::function<double(const Eigen::RowVectorXd&)>& observable,
                      double truth) {
  if (trajectories.empty()) throw std::invalid_argument("mse_observable: no trajectories");
  double mse = 0.0;
  long chains = 0;
  for (const auto& traj : trajectories) {
    if (traj.rows() == 0) throw std::invalid_argument("mse_observable: empty trajectory");
    double avg = 0.0;
    for (long k = 0; k < traj.rows(); ++k) avg += observable(traj.row(k));
    avg /= static_cast<double>(traj.rows());
    mse += (avg - truth) * (avg - truth);
    ++chains;
  }
  return mse / static_cast<double>(chains);
}

SlopeFit loglog_slope(const ScalingSeries& series) {
  const int m = static_cast<int>(series.abscissae.size());
  if (m < 3 || series.values.size() != series.abscissae.size())
    throw std::invalid_argument("loglog_slope: need >= 3 matched points");
  Eigen::MatrixXd A(m, 2);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) {
    if (series.abscissae[i] <= 0.0 || series.values[i] <= 0.0)
      throw std::invalid_argument("loglog_slope: nonpositive value");
    A(i, 0) = std::log(series.abscissae[i]);
    A(i, 1) = 1.0;
    y[i] = std::log(series.values[i]);
  }
  const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(y);
  SlopeFit fit;
  fit.slope = coef[0];
  fit.intercept = coef[1];
  fit.residual = std::sqrt((A * coef - y).squaredNorm() / m);
  return fit;
}

Eigen::VectorXd autocorrelation(const Eigen::VectorXd& series, int max_lag) {
  const long len = series.size();
  if (len <= max_lag) throw std::invalid_argument("autocorrelation: series shorter than max_lag");
  const double mean = series.mean();
  Eigen::VectorXd centered = series.array() - mean;
  const double denom = centered.squaredNorm();
  if (denom == 0.0) throw std::invalid_argument("autocorrelation: constant series");
  Eigen::VectorXd acf(max_lag + 1);
  for (int lag = 0; lag <= max_lag; ++lag)
    acf[lag] = centered.head(len - lag).dot(centered.tail(len - lag)) / denom;
  return acf;
}

double covariance_trace_delta(const GradientModel& model, const Eigen::VectorXd& theta,
                              const WeightContext& ctx) {
  Eigen::MatrixXd grads(model.n, model.d);
  Eigen::VectorXd g(model.d);
  for (int i = 0; i < model.n; ++i) {
    model.term_gradient(i, theta, g);
    grads.row(i) = g.transpose();
  }
  const Eigen::VectorXd p = exact_weights(ctx, grads);
  const Eigen::MatrixXd b = model.n * grads;  // rows b_i = n grad V_i
  const Eigen::VectorXd sq = b.rowwise().squaredNorm();
  const double uniform = 1.0 / model.n;
  const double trace_e = p.dot(sq) - (b.transpose() * p).squaredNorm();
  const double trace_u = uniform * sq.sum() -
                         (uniform * b.colwise().sum()).squaredNorm();
  return trace_e - trace_u;
}

}  // namespace ewsg
