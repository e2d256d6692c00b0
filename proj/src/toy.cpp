#include "gpsel/toy.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "gpsel/errors.hpp"

namespace gpsel {

void ToySpec::validate() const {
  if (n_inputs < 2) throw InvalidArgument("toy: n_inputs must be >= 2");
  if (n_noise_inputs < 0) throw InvalidArgument("toy: n_noise_inputs must be >= 0");
  if (n < 10) throw InvalidArgument("toy: n must be >= 10");
  if (!(noise_sd > 0.0)) throw InvalidArgument("toy: noise_sd must be positive");
}

double toy_frequency(const ToySpec& spec, int j) {
  const double lo = M_PI / 10.0, hi = M_PI;
  return lo + static_cast<double>(j) * (hi - lo) / static_cast<double>(spec.n_inputs - 1);
}

double toy_amplitude(double phi) {
  // Var(sin(phi x)) over x ~ U(-1,1) is 1/2 - sin(2 phi)/(4 phi).
  return 1.0 / std::sqrt(0.5 - std::sin(2.0 * phi) / (4.0 * phi));
}

std::pair<Dataset, Dataset> gen_toy(const ToySpec& spec) {
  spec.validate();
  const int total_inputs = spec.n_inputs + spec.n_noise_inputs;
  const int rows = 2 * spec.n;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::MatrixXd x(rows, total_inputs);
  for (int j = 0; j < total_inputs; ++j) {
    for (int i = 0; i < rows; ++i) x(i, j) = unif(rng);
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(rows);
  for (int j = 0; j < spec.n_inputs; ++j) {
    const double phi = toy_frequency(spec, j);
    const double amp = toy_amplitude(phi);
    y += (amp * (phi * x.col(j).array()).sin()).matrix();
  }
  for (int i = 0; i < rows; ++i) y[i] += spec.noise_sd * gauss(rng);

  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(total_inputs));
  for (int j = 0; j < spec.n_inputs; ++j) names.push_back("x" + std::to_string(j + 1));
  for (int j = 0; j < spec.n_noise_inputs; ++j) names.push_back("z" + std::to_string(j + 1));

  Dataset train = Dataset::from_raw(x.topRows(spec.n), y.head(spec.n), names);
  Dataset test = Dataset::with_stats(x.bottomRows(spec.n), y.tail(spec.n), names,
                                     train.standardization);
  return {std::move(train), std::move(test)};
}

}  // namespace gpsel
