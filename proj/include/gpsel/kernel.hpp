#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gpsel {

// Log-domain kernel and noise parameters for a given active input set.
//
// The covariance is constant + squared-exponential with one length-scale per
// active input. Submodels additionally carry log_extra_noise, a diagonal
// variance component that absorbs signal lost when inputs are dropped. With
// an empty active set the squared-exponential component vanishes entirely,
// leaving the constant and diagonal parts (the null model).
struct HyperParams {
  double log_const_var = 0.0;
  double log_magnitude = 0.0;
  Eigen::VectorXd log_lengthscales;
  std::optional<double> log_extra_noise;
  std::vector<int> active_inputs;  // strictly increasing indices into the full input space

  int n_active() const { return static_cast<int>(active_inputs.size()); }
  double const_var() const;
  double magnitude() const;
  double extra_noise() const;  // throws InvalidArgument when absent
  Eigen::VectorXd lengthscales() const;

  // Checks field consistency; n_inputs_total < 0 skips the index range check.
  void validate(int n_inputs_total = -1) const;
};

struct CovMatrix {
  Eigen::MatrixXd values;
  bool symmetric = false;
};

// Names one log-domain parameter. NoiseVar refers to the observation noise
// that lives outside HyperParams but shares the packed layout.
struct ParamId {
  enum Kind { kConstVar, kMagnitude, kLengthscale, kExtraNoise, kNoiseVar };
  Kind kind = kConstVar;
  int dim = -1;  // position within active_inputs, for kLengthscale only

  static ParamId const_var() { return {kConstVar, -1}; }
  static ParamId magnitude() { return {kMagnitude, -1}; }
  static ParamId lengthscale(int d) { return {kLengthscale, d}; }
  static ParamId extra_noise() { return {kExtraNoise, -1}; }
  static ParamId noise_var() { return {kNoiseVar, -1}; }
};

// Free parameters of h in packed order: const, then magnitude and the
// length-scales when any input is active, then the extra noise when present.
std::vector<ParamId> hyper_param_ids(const HyperParams& h);
std::string param_name(const ParamId& id, const HyperParams& h);

Eigen::VectorXd pack_hyper(const HyperParams& h);
HyperParams unpack_hyper(const Eigen::VectorXd& x, const HyperParams& tmpl);

// Per-dimension squared differences of one point set, computed once and
// reused across kernel and gradient evaluations. Immutable after
// construction. X holds only the active columns, in active_inputs order.
class PointSetCache {
 public:
  explicit PointSetCache(Eigen::MatrixXd x_active);

  const Eigen::MatrixXd& x() const { return x_; }
  const Eigen::MatrixXd& sqdist(int dim) const { return sqdist_[dim]; }
  int n_points() const { return static_cast<int>(x_.rows()); }
  int n_dims() const { return static_cast<int>(x_.cols()); }

 private:
  Eigen::MatrixXd x_;
  std::vector<Eigen::MatrixXd> sqdist_;
};

// Squared-exponential part only. Point sets carry exactly the active columns
// of h, in order; anything else is an InvalidArgument.
CovMatrix se_ard(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2, const HyperParams& h);
CovMatrix se_ard(const PointSetCache& cache, const HyperParams& h);

// Constant + squared-exponential (+ extra diagonal noise when requested and
// the matrix is symmetric). Symmetric results are exactly symmetrized.
CovMatrix full_cov(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2, const HyperParams& h,
                   bool include_extra_noise);
CovMatrix full_cov(const Eigen::MatrixXd& x, const HyperParams& h, bool include_extra_noise);
CovMatrix full_cov(const PointSetCache& cache, const HyperParams& h, bool include_extra_noise);

// d full_cov / d log(theta) for one parameter, on a single point set.
Eigen::MatrixXd cov_grad(const Eigen::MatrixXd& x, const HyperParams& h, const ParamId& which);
Eigen::MatrixXd cov_grad(const PointSetCache& cache, const HyperParams& h, const ParamId& which);

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<int>& idx);

}  // namespace gpsel
