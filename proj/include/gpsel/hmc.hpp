#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "gpsel/dataset.hpp"
#include "gpsel/gp.hpp"
#include "gpsel/kernel.hpp"

namespace gpsel {

struct SamplerConfig {
  int n_samples = 100;
  int n_warmup = 200;
  int leapfrog_steps = 20;
  double step_size = 0.1;  // initial value; adapted during warmup
  double target_accept = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

// One post-warmup draw of the full-model hyperparameters, packed as
// [log const_var, log magnitude, log ell_1..D, log noise_var].
struct HyperSample {
  Eigen::VectorXd params;
  double log_density = 0.0;
};

struct HmcDiagnostics {
  double acceptance_rate = 0.0;   // post-warmup
  double adapted_step_size = 0.0;
  int n_divergent = 0;            // trajectories abandoned on a non-finite energy
  int n_out_of_bounds = 0;        // proposals rejected at the support boundary
};

struct HmcResult {
  std::vector<HyperSample> samples;
  HmcDiagnostics diagnostics;
};

// Potential energy (negative log density) with gradient. May return +inf for
// infeasible points.
using Potential = std::function<double(const Eigen::VectorXd& q, Eigen::VectorXd& grad)>;

// Fixed-length leapfrog chain with dual-averaging step-size adaptation during
// warmup. Proposals ending outside [lower, upper] are rejected. Throws
// SamplerError when the post-warmup acceptance rate falls below 0.1.
HmcResult hmc_chain(const Potential& u, Eigen::VectorXd q0, const SamplerConfig& cfg,
                    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

// Samples the full-model hyperparameter posterior under a flat log-domain
// prior bounded to [-10, 10] per coordinate.
HmcResult hmc_sample(const Dataset& d, const SamplerConfig& cfg, const HyperParams& init,
                     double init_noise_var);

HyperParams unpack_sample(const Eigen::VectorXd& params, int n_inputs);
double sample_noise_var(const Eigen::VectorXd& params);

// Moment-matched Gaussian for the mixture of per-sample latent posteriors;
// the result does not depend on the sample order. Samples whose posterior
// cannot be computed are skipped, up to half of them.
LatentPosterior integrate_latent(const Dataset& d, const std::vector<HyperSample>& samples);

}  // namespace gpsel
