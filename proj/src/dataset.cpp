#include "gpsel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "gpsel/errors.hpp"

namespace gpsel {

namespace {

std::vector<std::string> default_names(int d) {
  std::vector<std::string> names(d);
  for (int j = 0; j < d; ++j) names[j] = "x" + std::to_string(j + 1);
  return names;
}

void check_finite(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (!x.allFinite() || !y.allFinite()) throw InvalidArgument("dataset contains non-finite values");
}

}  // namespace

Eigen::MatrixXd Dataset::raw_x() const {
  Eigen::MatrixXd out = x;
  out.array().rowwise() *= standardization.x_scale.transpose().array();
  out.rowwise() += standardization.x_mean.transpose();
  return out;
}

Eigen::VectorXd Dataset::raw_y() const {
  return (y.array() * standardization.y_scale + standardization.y_mean).matrix();
}

Dataset Dataset::from_raw(Eigen::MatrixXd x_raw, Eigen::VectorXd y_raw,
                          std::vector<std::string> names) {
  const Eigen::Index n = x_raw.rows(), d = x_raw.cols();
  if (n < 2) throw InvalidArgument("dataset needs at least two rows");
  if (d < 1) throw InvalidArgument("dataset needs at least one input column");
  if (y_raw.size() != n) throw InvalidArgument("dataset: X and y row counts differ");
  check_finite(x_raw, y_raw);
  if (names.empty()) names = default_names(static_cast<int>(d));
  if (names.size() != static_cast<std::size_t>(d)) {
    throw InvalidArgument("dataset: feature name count does not match columns");
  }

  Standardization s;
  s.x_mean = x_raw.colwise().mean();
  s.x_scale.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const Eigen::ArrayXd centered = x_raw.col(j).array() - s.x_mean[j];
    const double var = centered.square().sum() / static_cast<double>(n - 1);
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(s.x_mean[j])))) {
      throw InvalidArgument("constant column '" + names[j] + "' cannot be standardized");
    }
    s.x_scale[j] = sd;
    x_raw.col(j) = centered / sd;
  }
  s.y_mean = y_raw.mean();
  const Eigen::ArrayXd yc = y_raw.array() - s.y_mean;
  const double y_sd = std::sqrt(yc.square().sum() / static_cast<double>(n - 1));
  if (!(y_sd > 1e-12 * std::max(1.0, std::abs(s.y_mean)))) {
    throw InvalidArgument("target column is constant");
  }
  s.y_scale = y_sd;
  y_raw = (yc / y_sd).matrix();

  Dataset out;
  out.x = std::move(x_raw);
  out.y = std::move(y_raw);
  out.feature_names = std::move(names);
  out.standardization = std::move(s);
  out.self_standardized = true;
  return out;
}

Dataset Dataset::with_stats(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y_raw,
                            std::vector<std::string> names, const Standardization& s) {
  const Eigen::Index n = x_raw.rows(), d = x_raw.cols();
  if (n < 1) throw InvalidArgument("dataset needs at least one row");
  if (s.x_mean.size() != d || s.x_scale.size() != d) {
    throw InvalidArgument("standardization statistics do not match the column count");
  }
  if (y_raw.size() != n) throw InvalidArgument("dataset: X and y row counts differ");
  check_finite(x_raw, y_raw);
  if (names.empty()) names = default_names(static_cast<int>(d));

  Dataset out;
  out.x = x_raw;
  out.x.rowwise() -= s.x_mean.transpose();
  out.x.array().rowwise() /= s.x_scale.transpose().array();
  out.y = ((y_raw.array() - s.y_mean) / s.y_scale).matrix();
  out.feature_names = std::move(names);
  out.standardization = s;
  out.self_standardized = false;
  return out;
}

void Dataset::validate() const {
  if (n() < 2) throw InvalidArgument("dataset needs at least two rows");
  if (n_inputs() < 1) throw InvalidArgument("dataset needs at least one input column");
  if (y.size() != x.rows()) throw InvalidArgument("dataset: X and y row counts differ");
  check_finite(x, y);
  if (!self_standardized) return;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    const double var = (x.col(j).array() - mean).square().sum() / static_cast<double>(n() - 1);
    if (std::abs(mean) > 1e-8 || std::abs(var - 1.0) > 1e-8) {
      throw InvalidArgument("column '" + feature_names[j] + "' is not standardized");
    }
  }
}

std::pair<Dataset, Dataset> split(const Dataset& d, int n_train, std::uint64_t seed) {
  const int n = d.n();
  if (n_train < 2 || n_train >= n) {
    throw InvalidArgument("split: n_train must be in [2, n_total)");
  }
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);

  const Eigen::MatrixXd x_raw = d.raw_x();
  const Eigen::VectorXd y_raw = d.raw_y();
  auto take = [&](int begin, int count) {
    Eigen::MatrixXd xs(count, d.n_inputs());
    Eigen::VectorXd ys(count);
    for (int i = 0; i < count; ++i) {
      xs.row(i) = x_raw.row(idx[begin + i]);
      ys[i] = y_raw[idx[begin + i]];
    }
    return std::make_pair(std::move(xs), std::move(ys));
  };

  auto [x_tr, y_tr] = take(0, n_train);
  auto [x_te, y_te] = take(n_train, n - n_train);
  Dataset train = Dataset::from_raw(std::move(x_tr), std::move(y_tr), d.feature_names);
  Dataset test = Dataset::with_stats(x_te, y_te, d.feature_names, train.standardization);
  return {std::move(train), std::move(test)};
}

}  // namespace gpsel
