#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "ewsg/model.hpp"
#include "ewsg/weights.hpp"

namespace ewsg {

struct MomentSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // 1/(count-1) normalization
  long count = 0;
};

/// Sample mean and covariance of row-wise samples.
MomentSummary moment_summary(const Eigen::MatrixXd& samples);

/// KL(fit || target) where fit is the moment-matched Gaussian of the samples
/// and the target is N(target_mean, target_cov). Closed form:
/// 0.5 * [tr(St^-1 Ss) + (mt-ms)' St^-1 (mt-ms) - d + log(det St / det Ss)].
double kl_gaussian(const MomentSummary& fit, const Eigen::VectorXd& target_mean,
                   const Eigen::MatrixXd& target_cov);
double kl_gaussian(const Eigen::MatrixXd& samples, const Eigen::VectorXd& target_mean,
                   const Eigen::MatrixXd& target_cov);

/// Mean squared error of per-chain time averages of an observable against
/// its true posterior average: mean over chains of (phi_hat - truth)^2.
/// Each trajectory is a matrix of recorded states (rows); the observable
/// maps a recorded row to a scalar.
double mse_observable(const std::vector<Eigen::MatrixXd>& trajectories,
                      const std::function<double(const Eigen::RowVectorXd&)>& observable,
                      double truth);

struct ScalingSeries {
  std::vector<double> abscissae;
  std::vector<double> values;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS residual of the OLS fit in log space
};

/// Ordinary least squares on (log abscissa, log value). Needs >= 3 points,
/// all positive.
SlopeFit loglog_slope(const ScalingSeries& series);

/// Biased-normalized sample autocorrelation, acf[0] = 1.
Eigen::VectorXd autocorrelation(const Eigen::VectorXd& series, int max_lag);

/// Tr[cov_{I~pE}(n grad V_I) - cov_{I~pU}(n grad V_I)] computed exactly from
/// exact_weights via the moment form sum_i p_i ||b_i||^2 - ||sum_i p_i b_i||^2
/// with b_i = n grad V_i(theta).
double covariance_trace_delta(const GradientModel& model, const Eigen::VectorXd& theta,
                              const WeightContext& ctx);

}  // namespace ewsg
