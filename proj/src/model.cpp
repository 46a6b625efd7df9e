#include "ewsg/model.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace ewsg {

Eigen::VectorXd GradientModel::full_gradient(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd g(d);
  for (int i = 0; i < n; ++i) {
    term_gradient(i, theta, g);
    sum += g;
  }
  return sum;
}

double GradientModel::potential(const Eigen::VectorXd& theta) const {
  if (!term_potential) throw std::logic_error("model has no term_potential");
  double v = 0.0;
  for (int i = 0; i < n; ++i) v += term_potential(i, theta);
  return v;
}

GradientModel gaussian_quadratic_model(const std::vector<Eigen::VectorXd>& centers) {
  if (centers.empty()) throw std::invalid_argument("gaussian_quadratic_model: need n >= 1 centers");
  const int d = static_cast<int>(centers.front().size());
  for (const auto& c : centers) {
    if (c.size() != d) throw std::invalid_argument("gaussian_quadratic_model: center dimension mismatch");
    if (!c.allFinite()) throw std::invalid_argument("gaussian_quadratic_model: non-finite center");
  }
  const int n = static_cast<int>(centers.size());
  auto cs = std::make_shared<std::vector<Eigen::VectorXd>>(centers);

  GradientModel m;
  m.n = n;
  m.d = d;
  m.term_gradient = [cs](int i, const Eigen::VectorXd& theta, Eigen::VectorXd& out) {
    out = theta - (*cs)[i];
  };
  m.term_potential = [cs](int i, const Eigen::VectorXd& theta) {
    return 0.5 * (theta - (*cs)[i]).squaredNorm();
  };
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& c : centers) mean += c;
  mean /= n;
  m.analytic_target = AnalyticTarget{
      mean, Eigen::MatrixXd::Identity(d, d) / static_cast<double>(n)};
  return m;
}

GradientModel blr_model(const Dataset& dataset, double prior_variance) {
  const int n = dataset.n();
  const int p = dataset.p();
  if (n == 0) throw std::invalid_argument("blr_model: empty dataset");
  if (prior_variance <= 0.0) throw std::invalid_argument("blr_model: prior_variance must be positive");
  for (int i = 0; i < n; ++i) {
    const double y = dataset.labels[i];
    if (y != 0.0 && y != 1.0)
      throw std::invalid_argument("blr_model: labels must be binary {0,1}");
  }
  auto data = std::make_shared<Dataset>(dataset);
  const double prior_scale = 1.0 / (prior_variance * n);

  GradientModel m;
  m.n = n;
  m.d = p;
  m.term_gradient = [data, prior_scale](int i, const Eigen::VectorXd& theta,
                                        Eigen::VectorXd& out) {
    const auto x = data->features.row(i).transpose();
    const double z = x.dot(theta);
    const double s = 1.0 / (1.0 + std::exp(-z));
    out = prior_scale * theta + (s - data->labels[i]) * x;
  };
  m.term_potential = [data, prior_scale](int i, const Eigen::VectorXd& theta) {
    const auto x = data->features.row(i).transpose();
    const double z = x.dot(theta);
    const double y = data->labels[i];
    // log(1 + exp(z)) - y*z, computed without overflow for large |z|.
    const double log1pe = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    return 0.5 * prior_scale * theta.squaredNorm() + log1pe - y * z;
  };
  return m;
}

GradientModel misspecified_gaussian_model(const std::vector<double>& data) {
  if (data.size() < 2) throw std::invalid_argument("misspecified_gaussian_model: need n >= 2");
  for (double x : data) {
    if (!std::isfinite(x)) throw std::invalid_argument("misspecified_gaussian_model: non-finite datum");
  }
  auto xs = std::make_shared<std::vector<double>>(data);

  GradientModel m;
  m.n = static_cast<int>(data.size());
  m.d = 2;  // theta = (mu0, lambda), lambda = log sigma0
  m.term_gradient = [xs](int i, const Eigen::VectorXd& theta, Eigen::VectorXd& out) {
    const double res = (*xs)[i] - theta[0];
    const double inv_var = std::exp(-2.0 * theta[1]);
    out.resize(2);
    out[0] = -res * inv_var;
    out[1] = 1.0 - res * res * inv_var;
  };
  m.term_potential = [xs](int i, const Eigen::VectorXd& theta) {
    const double res = (*xs)[i] - theta[0];
    return theta[1] + 0.5 * res * res * std::exp(-2.0 * theta[1]);
  };
  return m;
}

GradientModel quadratic_scalar_model(const std::vector<double>& offsets) {
  if (offsets.empty()) throw std::invalid_argument("quadratic_scalar_model: need n >= 1 offsets");
  double sum = 0.0;
  for (double mu : offsets) {
    if (!std::isfinite(mu)) throw std::invalid_argument("quadratic_scalar_model: non-finite offset");
    sum += mu;
  }
  const int n = static_cast<int>(offsets.size());
  auto mus = std::make_shared<std::vector<double>>(offsets);
  bool recentered = false;
  if (std::abs(sum) > 1e-12 * n) {
    const double mean = sum / n;
    for (double& mu : *mus) mu -= mean;
    recentered = true;
  }

  GradientModel m;
  m.n = n;
  m.d = 1;
  m.offsets_recentered = recentered;
  m.term_gradient = [mus, n](int i, const Eigen::VectorXd& theta, Eigen::VectorXd& out) {
    out.resize(1);
    out[0] = (theta[0] - (*mus)[i]) / n;
  };
  m.term_potential = [mus, n](int i, const Eigen::VectorXd& theta) {
    const double r = theta[0] - (*mus)[i];
    return r * r / (2.0 * n);
  };
  // V(theta) = theta^2/2 + const, so the target is N(0, 1) at T=1.
  m.analytic_target = AnalyticTarget{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)};
  return m;
}

namespace {

bool parse_cell(const std::string& cell, double& out) {
  char* end = nullptr;
  const char* s = cell.c_str();
  out = std::strtod(s, &end);
  while (end && *end == ' ') ++end;
  return end != s && end && *end == '\0';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    // trim
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return cells;
}

}  // namespace

Dataset load_csv_dataset(const std::string& path, LabelColumn label_column,
                         bool standardize) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv_dataset: cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  bool first_data_row = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    std::vector<double> row(cells.size());
    bool ok = true;
    size_t bad_col = 0;
    for (size_t c = 0; c < cells.size(); ++c) {
      if (!parse_cell(cells[c], row[c])) {
        ok = false;
        bad_col = c;
        break;
      }
    }
    if (!ok) {
      if (first_data_row) {
        first_data_row = false;  // header line, skip
        continue;
      }
      throw std::runtime_error("load_csv_dataset: non-numeric cell at row " +
                               std::to_string(lineno) + ", column " +
                               std::to_string(bad_col + 1));
    }
    first_data_row = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("load_csv_dataset: inconsistent column count at row " +
                               std::to_string(lineno));
    for (double v : row) {
      if (!std::isfinite(v))
        throw std::runtime_error("load_csv_dataset: non-finite value at row " +
                                 std::to_string(lineno));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("load_csv_dataset: no data rows in " + path);

  const int n = static_cast<int>(rows.size());
  const int cols = static_cast<int>(rows.front().size());
  if (cols < 2) throw std::runtime_error("load_csv_dataset: need at least one feature and one label column");
  const int label_idx = label_column == LabelColumn::Last ? cols - 1 : 0;

  Dataset ds;
  ds.features.resize(n, cols - 1);
  ds.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    int fc = 0;
    for (int c = 0; c < cols; ++c) {
      if (c == label_idx)
        ds.labels[i] = rows[i][c];
      else
        ds.features(i, fc++) = rows[i][c];
    }
  }

  if (standardize) {
    for (int c = 0; c < ds.p(); ++c) {
      const double mean = ds.features.col(c).mean();
      ds.features.col(c).array() -= mean;
      const double sd = std::sqrt(ds.features.col(c).squaredNorm() / n);
      if (sd > 0.0) ds.features.col(c) /= sd;
    }
  }
  return ds;
}

}  // namespace ewsg
