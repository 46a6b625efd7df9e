#include <doctest.h>

#include <cmath>
#include <vector>

#include "ewsg/diagnostics.hpp"
#include "ewsg/model.hpp"
#include "ewsg/rng.hpp"

using namespace ewsg;

TEST_CASE("moment_summary") {
  Eigen::MatrixXd s(3, 2);
  s << 1.0, 0.0, 2.0, 1.0, 3.0, 2.0;
  const auto mm = moment_summary(s);
  CHECK(mm.count == 3);
  CHECK(mm.mean[0] == doctest::Approx(2.0));
  CHECK(mm.mean[1] == doctest::Approx(1.0));
  CHECK(mm.covariance(0, 0) == doctest::Approx(1.0));  // 1/(n-1) normalization
  CHECK(mm.covariance(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("kl_gaussian") {
  SUBCASE("d=1 unit-variance mean shift of 1 gives 1/2") {
    MomentSummary fit;
    fit.mean = Eigen::VectorXd::Ones(1);
    fit.covariance = Eigen::MatrixXd::Identity(1, 1);
    fit.count = 10;
    CHECK(kl_gaussian(fit, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)) ==
          doctest::Approx(0.5));
  }
  SUBCASE("identical moments give zero") {
    MomentSummary fit;
    fit.mean = Eigen::VectorXd::Constant(3, -0.7);
    fit.covariance = Eigen::MatrixXd::Identity(3, 3) * 2.5;
    fit.count = 10;
    CHECK(kl_gaussian(fit, fit.mean, fit.covariance) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("d=1 variance mismatch matches the scalar formula") {
    // KL(N(0,s) || N(0,1)) = 0.5 * (s - 1 - log s)
    MomentSummary fit;
    fit.mean = Eigen::VectorXd::Zero(1);
    fit.covariance = Eigen::MatrixXd::Identity(1, 1) * 2.0;
    fit.count = 10;
    CHECK(kl_gaussian(fit, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)) ==
          doctest::Approx(0.5 * (2.0 - 1.0 - std::log(2.0))));
  }
  SUBCASE("exact target samples give near-zero KL") {
    RngStream rng(7, 0, RngStream::kNoise);
    const int N = 100000;
    Eigen::MatrixXd samples(N, 2);
    Eigen::VectorXd xi(2);
    for (int i = 0; i < N; ++i) {
      rng.fill_normal(xi);
      samples.row(i) = xi.transpose();
    }
    const double kl =
        kl_gaussian(samples, Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
    CHECK(kl >= 0.0);
    CHECK(kl < 5e-4);
  }
  SUBCASE("degenerate sample covariance throws with a condition message") {
    Eigen::MatrixXd s(4, 2);
    s << 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0;  // rank one
    CHECK_THROWS_WITH_AS(
        kl_gaussian(s, Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)),
        doctest::Contains("condition"), std::runtime_error);
  }
}

TEST_CASE("mse_observable") {
  SUBCASE("constant trajectories matching truth give zero") {
    std::vector<Eigen::MatrixXd> trajs(4, Eigen::MatrixXd::Constant(10, 1, 3.0));
    CHECK(mse_observable(trajs, [](const Eigen::RowVectorXd& row) { return row[0]; }, 3.0) ==
          doctest::Approx(0.0));
  }
  SUBCASE("constant offset c gives c^2") {
    std::vector<Eigen::MatrixXd> trajs(4, Eigen::MatrixXd::Constant(10, 1, 3.0));
    CHECK(mse_observable(trajs, [](const Eigen::RowVectorXd& row) { return row[0]; }, 1.0) ==
          doctest::Approx(4.0));
  }
  SUBCASE("iid samples: MSE of the time average is about Var/K") {
    RngStream rng(3, 0, RngStream::kNoise);
    const int chains = 2000, K = 50;
    std::vector<Eigen::MatrixXd> trajs(chains);
    for (auto& t : trajs) {
      t.resize(K, 1);
      for (int k = 0; k < K; ++k) t(k, 0) = rng.normal();
    }
    const double mse =
        mse_observable(trajs, [](const Eigen::RowVectorXd& row) { return row[0]; }, 0.0);
    // MSE estimate ~ (1/K) * chi2_{chains}/chains; s.e. ~ sqrt(2/chains)/K
    CHECK(mse == doctest::Approx(1.0 / K).epsilon(4.0 * std::sqrt(2.0 / chains)));
  }
  SUBCASE("empty trajectories rejected") {
    CHECK_THROWS_AS(
        mse_observable({}, [](const Eigen::RowVectorXd& row) { return row[0]; }, 0.0),
        std::invalid_argument);
  }
}

TEST_CASE("loglog_slope") {
  SUBCASE("exact power laws recovered") {
    for (double p : {-1.0, 1.0, 2.0}) {
      ScalingSeries s;
      for (double x : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        s.abscissae.push_back(x);
        s.values.push_back(3.0 * std::pow(x, p));
      }
      const auto fit = loglog_slope(s);
      CHECK(fit.slope == doctest::Approx(p).epsilon(1e-12));
      CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-10));
      CHECK(fit.residual < 1e-12);
    }
  }
  SUBCASE("multiplicative noise moves the slope only slightly") {
    RngStream rng(9, 0, RngStream::kNoise);
    ScalingSeries s;
    for (double x : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
      s.abscissae.push_back(x);
      s.values.push_back(x * x * std::exp(0.05 * rng.normal()));
    }
    const auto fit = loglog_slope(s);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(0.05));
    CHECK(fit.residual < 0.15);
  }
  SUBCASE("fewer than three points rejected") {
    ScalingSeries s;
    s.abscissae = {1.0, 2.0};
    s.values = {1.0, 2.0};
    CHECK_THROWS_AS(loglog_slope(s), std::invalid_argument);
  }
  SUBCASE("non-positive values rejected") {
    ScalingSeries s;
    s.abscissae = {1.0, 2.0, 3.0};
    s.values = {1.0, -2.0, 3.0};
    CHECK_THROWS_AS(loglog_slope(s), std::invalid_argument);
  }
}

TEST_CASE("autocorrelation") {
  SUBCASE("lag zero is one") {
    Eigen::VectorXd s(5);
    s << 1.0, -2.0, 0.5, 3.0, -1.0;
    const auto acf = autocorrelation(s, 2);
    CHECK(acf[0] == doctest::Approx(1.0));
  }
  SUBCASE("white noise decorrelates within 2/sqrt(N)") {
    RngStream rng(11, 0, RngStream::kNoise);
    const int N = 20000;
    Eigen::VectorXd s(N);
    for (int i = 0; i < N; ++i) s[i] = rng.normal();
    const auto acf = autocorrelation(s, 10);
    for (int k = 1; k <= 10; ++k) CHECK(std::abs(acf[k]) < 2.0 / std::sqrt(N));
  }
  SUBCASE("AR(1) decays like rho^k") {
    RngStream rng(13, 0, RngStream::kNoise);
    const double rho = 0.8;
    const int N = 200000;
    Eigen::VectorXd s(N);
    s[0] = rng.normal();
    for (int i = 1; i < N; ++i)
      s[i] = rho * s[i - 1] + std::sqrt(1.0 - rho * rho) * rng.normal();
    const auto acf = autocorrelation(s, 5);
    for (int k = 1; k <= 5; ++k)
      CHECK(acf[k] == doctest::Approx(std::pow(rho, k)).epsilon(0.05));
  }
  SUBCASE("constant series rejected") {
    CHECK_THROWS_AS(autocorrelation(Eigen::VectorXd::Ones(10), 3), std::invalid_argument);
  }
}

TEST_CASE("covariance_trace_delta") {
  RngStream rng(77, 0, RngStream::kNoise);
  std::vector<Eigen::VectorXd> cs(10, Eigen::VectorXd(2));
  for (auto& c : cs) rng.fill_normal(c);
  auto model = gaussian_quadratic_model(cs);

  WeightContext ctx;
  ctx.n = model.n;
  ctx.b = 1;
  ctx.scale = 0.05;

  SUBCASE("moment form equals the pairwise form") {
    // Delta = sum_{i<j} ||b_i - b_j||^2 (p_i p_j - 1/n^2) for any weight
    // vector with b_i the per-term stochastic gradients.
    Eigen::VectorXd theta(2);
    for (int trial = 0; trial < 20; ++trial) {
      rng.fill_normal(theta);
      ctx.x.resize(2);
      rng.fill_normal(ctx.x);
      const double delta = covariance_trace_delta(model, theta, ctx);

      Eigen::MatrixXd grads(model.n, 2);
      Eigen::VectorXd g(2);
      for (int i = 0; i < model.n; ++i) {
        model.term_gradient(i, theta, g);
        grads.row(i) = (model.n * g).transpose();
      }
      WeightContext wctx = ctx;
      Eigen::MatrixXd raw = grads / static_cast<double>(model.n);
      const Eigen::VectorXd p = exact_weights(wctx, raw);
      double pairwise = 0.0;
      const double u2 = 1.0 / (static_cast<double>(model.n) * model.n);
      for (int i = 0; i < model.n; ++i)
        for (int j = i + 1; j < model.n; ++j)
          pairwise += (grads.row(i) - grads.row(j)).squaredNorm() * (p[i] * p[j] - u2);
      CHECK(std::abs(delta - pairwise) < 1e-10 * std::max(1.0, std::abs(delta)));
    }
  }
  SUBCASE("uniform weights give zero delta") {
    ctx.scale = 0.0;  // all weights equal when a_i vanish
    ctx.x = Eigen::VectorXd::Ones(2);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
    CHECK(covariance_trace_delta(model, theta, ctx) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("at the operating step size the weights reduce the trace on average") {
    // 50-center Gaussian model at its working step size h = 5e-2, gamma = 10:
    // the weights concentrate enough that the exponentially weighted
    // covariance is smaller than the uniform one in expectation. (At much
    // smaller h the weak weighting instead inflates the trace slightly.)
    RngStream prng(5, 0, RngStream::kNoise);
    std::vector<Eigen::VectorXd> centers(50, Eigen::VectorXd(2));
    for (auto& c : centers) prng.fill_normal(c);
    auto big = gaussian_quadratic_model(centers);
    const double h = 5e-2, gamma = 10.0, sigma = std::sqrt(2.0 * gamma);
    WeightContext bctx;
    bctx.n = big.n;
    bctx.b = 1;
    bctx.scale = std::sqrt(h) / sigma;
    double mean_delta = 0.0, sq = 0.0;
    const int trials = 400;
    Eigen::VectorXd theta(2), r(2);
    for (int t = 0; t < trials; ++t) {
      // theta from the analytic target, x from the recommended policy.
      prng.fill_normal(theta);
      theta = big.analytic_target->mean + theta / std::sqrt(50.0);
      prng.fill_normal(r);
      bctx.x = recommended_x(h, gamma, sigma, r);
      const double delta = covariance_trace_delta(big, theta, bctx);
      mean_delta += delta;
      sq += delta * delta;
    }
    mean_delta /= trials;
    const double se = std::sqrt((sq / trials - mean_delta * mean_delta) / trials);
    CHECK(mean_delta + 1.96 * se < 0.0);
  }
}
