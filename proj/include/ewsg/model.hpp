#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ewsg {

/// Closed-form target moments, available for targets where the posterior is
/// exactly Gaussian (or an anchor for diagnostics).
struct AnalyticTarget {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// A target distribution presented as n additive potential terms,
/// V(theta) = sum_i V_i(theta). Immutable after construction; term_gradient
/// is callable concurrently from any number of workers.
struct GradientModel {
  int n = 0;  // number of potential terms
  int d = 0;  // parameter dimension

  /// Gradient of the i-th term at theta, written into `out` (size d).
  std::function<void(int, const Eigen::VectorXd&, Eigen::VectorXd&)> term_gradient;

  /// Value of the i-th term; may be empty (gradients are primary).
  std::function<double(int, const Eigen::VectorXd&)> term_potential;

  std::optional<AnalyticTarget> analytic_target;

  /// Set when quadratic_scalar_model had to recenter its offsets.
  bool offsets_recentered = false;

  Eigen::VectorXd full_gradient(const Eigen::VectorXd& theta) const;
  double potential(const Eigen::VectorXd& theta) const;
};

struct Dataset {
  Eigen::MatrixXd features;  // n x p
  Eigen::VectorXd labels;    // n
  int n() const { return static_cast<int>(features.rows()); }
  int p() const { return static_cast<int>(features.cols()); }
};

/// V_i = 0.5 * ||theta - c_i||^2. The posterior exp(-V) is exactly
/// N(mean of centers, I/n) at temperature 1.
GradientModel gaussian_quadratic_model(const std::vector<Eigen::VectorXd>& centers);

/// Bayesian logistic regression with Gaussian prior N(0, prior_variance * I).
/// The prior is split evenly across the n data terms so V = sum V_i holds
/// exactly: V_i = ||theta||^2 / (2 * prior_variance * n) + per-datum NLL.
GradientModel blr_model(const Dataset& dataset, double prior_variance = 10.0);

/// Fits a 1D normal to scalar data under a flat prior on (mu0, log sigma0).
/// theta = (mu0, lambda) with lambda = log sigma0;
/// V_i = lambda + (x_i - mu0)^2 * exp(-2 lambda) / 2.
GradientModel misspecified_gaussian_model(const std::vector<double>& data);

/// V_i = (theta - mu_i)^2 / (2n) with sum mu_i = 0 (recentered with a flag
/// if not), so the SG estimator n * grad_i = theta - mu_i.
GradientModel quadratic_scalar_model(const std::vector<double>& offsets);

enum class LabelColumn { Last, First };

/// Numeric CSV with an optional single header line (auto-detected when the
/// first row has any non-numeric cell). Row order is preserved.
Dataset load_csv_dataset(const std::string& path,
                         LabelColumn label_column = LabelColumn::Last,
                         bool standardize = false);

}  // namespace ewsg
