#include "ewsg/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

#include "ewsg/rng.hpp"

namespace ewsg {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double ResultRecord::metric(const std::string& name) const {
  for (const auto& row : rows)
    if (row.metric == name) return row.value;
  throw std::out_of_range("ResultRecord: no metric named " + name);
}

SamplerKind sampler_kind_from_name(const std::string& name) {
  if (name == "fg") return SamplerKind::FullGradient;
  if (name == "sghmc") return SamplerKind::Sghmc;
  if (name == "ewsg") return SamplerKind::Ewsg;
  if (name == "sgld") return SamplerKind::Sgld;
  if (name == "ewsg-od") return SamplerKind::EwsgOverdamped;
  if (name == "ewsg-vr") return SamplerKind::EwsgVr;
  throw ConfigError("sampler: unknown sampler '" + name + "'");
}

void validate_config(const ExperimentConfig& config) {
  sampler_kind_from_name(config.sampler);
  if (config.model != "gaussian2d" && config.model != "blr" && config.model != "blr-synth" &&
      config.model != "misspec" && config.model != "quadscalar")
    throw ConfigError("model: unknown model '" + config.model + "'");
  if (config.model == "blr") {
    if (config.dataset_path.empty()) throw ConfigError("dataset_path: required for model blr");
    std::ifstream probe(config.dataset_path);
    if (!probe) throw ConfigError("dataset_path: cannot open " + config.dataset_path);
  }
  if (config.model_n < 1) throw ConfigError("model_n: must be >= 1");
  if (config.chains < 1) throw ConfigError("chains: must be >= 1");
  if (config.format != "csv" && config.format != "json")
    throw ConfigError("format: must be csv or json");
  if (!config.sweep_h.empty() && !config.sweep_T.empty())
    throw ConfigError("sweep: only one of sweep_h and sweep_T may be set");
  for (double v : config.sweep_h)
    if (v <= 0.0) throw ConfigError("sweep_h: values must be positive");
  for (double v : config.sweep_T)
    if (v <= 0.0) throw ConfigError("sweep_T: values must be positive");
  try {
    SamplerConfig sc = config.sampler_config;
    // b is validated against n at run time; check the rest here.
    sc.b = 1;
    sc.validate(1);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("sampler_config: ") + e.what());
  }
}

Dataset synthetic_logistic_dataset(int n, int p, std::uint64_t seed, Eigen::VectorXd* theta_star) {
  RngStream rng(seed, 0, RngStream::kNoise);
  Eigen::VectorXd truth(p);
  rng.fill_normal(truth);
  Dataset ds;
  ds.features.resize(n, p);
  ds.labels.resize(n);
  Eigen::VectorXd x(p);
  for (int i = 0; i < n; ++i) {
    rng.fill_normal(x);
    ds.features.row(i) = x.transpose();
    const double prob = 1.0 / (1.0 + std::exp(-x.dot(truth)));
    ds.labels[i] = rng.uniform() < prob ? 1.0 : 0.0;
  }
  if (theta_star) *theta_star = truth;
  return ds;
}

GradientModel build_model(const ExperimentConfig& config) {
  if (config.model == "gaussian2d") {
    RngStream rng(config.model_seed, 0, RngStream::kNoise);
    std::vector<Eigen::VectorXd> centers(config.model_n, Eigen::VectorXd(2));
    for (auto& c : centers) rng.fill_normal(c);
    return gaussian_quadratic_model(centers);
  }
  if (config.model == "blr")
    return blr_model(load_csv_dataset(config.dataset_path, LabelColumn::Last, config.standardize),
                     config.prior_variance);
  if (config.model == "blr-synth")
    return blr_model(synthetic_logistic_dataset(config.model_n, config.model_p, config.model_seed),
                     config.prior_variance);
  if (config.model == "misspec") {
    RngStream rng(config.model_seed, 0, RngStream::kNoise);
    std::vector<double> data(config.model_n);
    for (auto& v : data) v = std::exp(rng.normal());  // LogNormal(0, 1)
    return misspecified_gaussian_model(data);
  }
  if (config.model == "quadscalar") {
    RngStream rng(config.model_seed, 0, RngStream::kNoise);
    std::vector<double> mus(config.model_n);
    double sum = 0.0;
    for (auto& v : mus) {
      v = rng.normal();
      sum += v;
    }
    for (auto& v : mus) v -= sum / config.model_n;
    return quadratic_scalar_model(mus);
  }
  throw ConfigError("model: unknown model '" + config.model + "'");
}

namespace {

MetricRow make_row(const ExperimentConfig& config, const std::string& metric, double value) {
  MetricRow row;
  row.run_id = config.run_id;
  row.sampler = config.sampler;
  row.model = config.model;
  row.h = config.sampler_config.h;
  row.gamma = config.sampler_config.gamma;
  row.M = config.sampler_config.M;
  row.b = config.sampler_config.b;
  row.K = config.sampler_config.K;
  row.chains = config.chains;
  row.seed = config.sampler_config.seed;
  row.metric = metric;
  row.value = value;
  return row;
}

double variance_observable_mse(const RunResult& result, const AnalyticTarget& target) {
  const double mu = target.mean[0];
  const double truth = target.covariance(0, 0);
  std::vector<Eigen::MatrixXd> live;
  for (size_t c = 0; c < result.trajectories.size(); ++c)
    if (!result.final_states[c].diverged) live.push_back(result.trajectories[c]);
  return mse_observable(
      live, [mu](const Eigen::RowVectorXd& row) { return (row[0] - mu) * (row[0] - mu); },
      truth);
}

}  // namespace

ResultRecord run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  const GradientModel model = build_model(config);
  const SamplerKind kind = sampler_kind_from_name(config.sampler);

  ResultRecord record;
  record.config = config;

  const auto t0 = std::chrono::steady_clock::now();
  const RunResult result = run_sampler(kind, model, config.sampler_config, config.chains);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const BudgetReport budget = budget_audit(result, config.sampler_config, model, kind);
  record.rows.push_back(make_row(config, "steps", static_cast<double>(result.steps_per_chain)));
  record.rows.push_back(make_row(config, "grad_evals_total", static_cast<double>(budget.total)));
  record.rows.push_back(
      make_row(config, "grad_evals_max_chain", static_cast<double>(budget.max_per_chain)));
  record.rows.push_back(make_row(config, "budget_ok", budget.ok ? 1.0 : 0.0));
  record.rows.push_back(make_row(config, "diverged", static_cast<double>(result.diverged_count)));
  record.rows.push_back(make_row(config, "wall_time_s", wall));

  const int live = config.chains - result.diverged_count;
  if (model.analytic_target && live >= model.d + 2) {
    const Eigen::MatrixXd samples = result.final_theta_matrix();
    record.rows.push_back(make_row(
        config, "kl", kl_gaussian(samples, model.analytic_target->mean,
                                  model.analytic_target->covariance)));
    const MomentSummary mm = moment_summary(samples);
    record.rows.push_back(make_row(
        config, "mean_error", (mm.mean - model.analytic_target->mean).norm()));
    if (config.sampler_config.thin > 0)
      record.rows.push_back(
          make_row(config, "mse_variance", variance_observable_mse(result, *model.analytic_target)));
  }
  if (kind == SamplerKind::EwsgVr) {
    record.rows.push_back(
        make_row(config, "friction_min_eig", result.min_friction_eigenvalue));
    record.rows.push_back(
        make_row(config, "friction_clamp_warnings", static_cast<double>(result.psd_clamp_warnings)));
  }

  if (!budget.ok)
    record.exit_code = 4;
  else if (result.diverged_count > config.divergence_threshold * config.chains)
    record.exit_code = 3;
  return record;
}

ResultRecord run_sweep(const ExperimentConfig& config) {
  validate_config(config);
  const bool over_h = !config.sweep_h.empty();
  const auto& points = over_h ? config.sweep_h : config.sweep_T;
  if (points.size() < 3) throw ConfigError("sweep: need >= 3 sweep points");

  ResultRecord record;
  record.config = config;
  ScalingSeries series;
  for (double v : points) {
    ExperimentConfig point = config;
    point.sweep_h.clear();
    point.sweep_T.clear();
    if (point.sampler_config.thin <= 0) point.sampler_config.thin = 1;
    double T;
    if (over_h) {
      point.sampler_config.h = v;
      T = config.fixed_T;
    } else {
      T = v;
    }
    if (T > 0.0)
      point.sampler_config.steps_override =
          std::max<long>(1, std::lround(T / point.sampler_config.h));
    ResultRecord point_record = run_experiment(point);
    if (point_record.exit_code != 0) record.exit_code = point_record.exit_code;
    const double mse = point_record.metric("mse_variance");
    series.abscissae.push_back(v);
    series.values.push_back(mse);
    MetricRow row = make_row(point, over_h ? "sweep_h_mse" : "sweep_T_mse", mse);
    record.rows.push_back(row);
  }
  const SlopeFit fit = loglog_slope(series);
  record.rows.push_back(make_row(config, "loglog_slope", fit.slope));
  record.rows.push_back(make_row(config, "loglog_residual", fit.residual));
  return record;
}

std::string to_csv(const ResultRecord& record) {
  std::ostringstream out;
  out << "run_id,sampler,model,h,gamma,M,b,K,chains,seed,metric,value\n";
  for (const auto& r : record.rows) {
    out << r.run_id << ',' << r.sampler << ',' << r.model << ',' << fmt_double(r.h) << ','
        << fmt_double(r.gamma) << ',' << r.M << ',' << r.b << ',' << r.K << ',' << r.chains << ','
        << r.seed << ',' << r.metric << ',' << fmt_double(r.value) << '\n';
  }
  return out.str();
}

namespace {

nlohmann::json config_to_json(const ExperimentConfig& c) {
  const SamplerConfig& s = c.sampler_config;
  return nlohmann::json{
      {"run_id", c.run_id},
      {"model", c.model},
      {"dataset_path", c.dataset_path},
      {"model_n", c.model_n},
      {"model_p", c.model_p},
      {"model_seed", c.model_seed},
      {"prior_variance", c.prior_variance},
      {"standardize", c.standardize},
      {"sampler", c.sampler},
      {"chains", c.chains},
      {"divergence_threshold", c.divergence_threshold},
      {"format", c.format},
      {"sweep_h", c.sweep_h},
      {"sweep_T", c.sweep_T},
      {"fixed_T", c.fixed_T},
      {"sampler_config",
       {{"h", s.h},
        {"gamma", s.gamma},
        {"sigma", s.sigma},
        {"M", s.M},
        {"b", s.b},
        {"K", s.K},
        {"x_policy", static_cast<int>(s.x_policy)},
        {"x_constant", s.x_constant},
        {"seed", s.seed},
        {"L", s.L},
        {"persist_index", s.persist_index},
        {"thin", s.thin},
        {"steps_override", s.steps_override}}}};
}

}  // namespace

std::string to_json(const ResultRecord& record) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : record.rows) {
    rows.push_back({{"run_id", r.run_id},
                    {"sampler", r.sampler},
                    {"model", r.model},
                    {"h", r.h},
                    {"gamma", r.gamma},
                    {"M", r.M},
                    {"b", r.b},
                    {"K", r.K},
                    {"chains", r.chains},
                    {"seed", r.seed},
                    {"metric", r.metric},
                    {"value", r.value}});
  }
  nlohmann::json doc{{"config", config_to_json(record.config)},
                     {"exit_code", record.exit_code},
                     {"metrics", rows}};
  return doc.dump(2) + "\n";
}

std::string emit_results(const ResultRecord& record) {
  const std::string payload =
      record.config.format == "json" ? to_json(record) : to_csv(record);
  if (!record.config.out_path.empty()) {
    std::ofstream out(record.config.out_path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_results: cannot write " + record.config.out_path);
    out << payload;
  }
  return payload;
}

}  // namespace ewsg
