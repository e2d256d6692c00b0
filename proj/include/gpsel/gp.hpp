#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gpsel/dataset.hpp"
#include "gpsel/kernel.hpp"
#include "gpsel/optim.hpp"

namespace gpsel {

// Gaussian posterior over the latent function values at the training inputs,
// together with the observation noise it was conditioned with.
struct LatentPosterior {
  enum Source { kMl2, kIntegrated };

  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  double noise_var = 0.0;
  Source source = kMl2;

  // Hyperparameters of the fit the posterior came from (point estimate or
  // posterior mean). Used to warm-start submodel optimizations.
  std::optional<HyperParams> ref_hyper;
};

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  bool includes_noise = false;
};

struct LmlResult {
  double value = 0.0;
  // Order: hyper_param_ids(h), then the log noise variance.
  Eigen::VectorXd gradient;
};

// log N(y | 0, K + noise_var*I) and its gradient in the log domain.
LmlResult log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  const HyperParams& h, double noise_var);
LmlResult log_marginal_likelihood(const Dataset& d, const HyperParams& h, double noise_var);

struct FitResult {
  HyperParams hyper;
  double noise_var = 0.0;
  double log_marginal = 0.0;
  bool converged = false;
  int best_restart = -1;
};

// Maximizes the marginal likelihood from `restarts` randomized initial points
// drawn deterministically from `seed`; ties go to the lowest restart index.
FitResult fit_ml2(const Dataset& d, int restarts, std::uint64_t seed);
FitResult fit_ml2(const Dataset& d, std::vector<int> active_inputs, int restarts,
                  std::uint64_t seed, const OptimOptions& opts = {});

LatentPosterior latent_posterior(const Dataset& d, const HyperParams& h, double noise_var);
LatentPosterior latent_posterior(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 const HyperParams& h, double noise_var);

// Predictive distribution at new points; rows of x_new live in the same full
// input space as the dataset.
Prediction predict(const Dataset& d, const HyperParams& h, double noise_var,
                   const Eigen::MatrixXd& x_new, bool with_noise);

// Maps a prediction made on the standardized target scale back to raw units.
Prediction destandardize(const Prediction& p, const Standardization& s);

// Mean log predictive density under the marginal (per-point) predictive
// distributions; requires a noise-inclusive prediction.
double mlpd(const Prediction& p, const Eigen::VectorXd& y_true);

}  // namespace gpsel
