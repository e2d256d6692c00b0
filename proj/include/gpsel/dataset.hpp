#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gpsel {

// Affine maps applied to raw columns: stored = (raw - mean) / scale.
struct Standardization {
  Eigen::VectorXd x_mean;
  Eigen::VectorXd x_scale;
  double y_mean = 0.0;
  double y_scale = 1.0;
};

// A regression table ready for modeling: inputs standardized column-wise,
// targets centered and scaled. Raw values are recoverable through the stored
// statistics, which also map held-out data onto the training scale.
struct Dataset {
  Eigen::MatrixXd x;  // n x D
  Eigen::VectorXd y;  // n
  std::vector<std::string> feature_names;
  Standardization standardization;
  bool self_standardized = true;  // false when built with foreign (training) statistics

  int n() const { return static_cast<int>(x.rows()); }
  int n_inputs() const { return static_cast<int>(x.cols()); }

  Eigen::MatrixXd raw_x() const;
  Eigen::VectorXd raw_y() const;

  // Standardizes in place using the data's own statistics. Rejects non-finite
  // entries, fewer than two rows, and constant columns (named in the error).
  static Dataset from_raw(Eigen::MatrixXd x_raw, Eigen::VectorXd y_raw,
                          std::vector<std::string> names = {});

  // Maps raw data onto an existing (training) standardization.
  static Dataset with_stats(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y_raw,
                            std::vector<std::string> names, const Standardization& s);

  void validate() const;
};

// Uniform random partition into n_train / rest. Training statistics are
// recomputed on the train part and applied to the test part.
std::pair<Dataset, Dataset> split(const Dataset& d, int n_train, std::uint64_t seed);

}  // namespace gpsel
