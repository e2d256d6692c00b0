#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gpsel/dataset.hpp"
#include "gpsel/gp.hpp"
#include "gpsel/kernel.hpp"
#include "gpsel/optim.hpp"

namespace gpsel {

// An input-subset model fitted by matching the reference latent posterior.
//
// posterior_kl is the minimized divergence between the reference posterior
// and the constrained submodel posterior; it drives the hyperparameter
// optimization. predictive_divergence scores the submodel through its
// noise-free predictive equations instead, which penalizes submodels that
// merely interpolate the targets.
struct Submodel {
  std::vector<int> active_inputs;
  HyperParams hyper;  // carries log_extra_noise
  double posterior_kl = 0.0;
  double predictive_divergence = 0.0;
  bool converged = false;
};

// Closed-form projection of a linear-Gaussian model onto a column subset.
struct LinearProjection {
  Eigen::VectorXd w_perp;
  double sigma2_perp = 0.0;
};

// KL(N(mu0, sigma0) || N(mu1, sigma1)), clamped at zero from below.
double gaussian_kl(const Eigen::VectorXd& mu0, const Eigen::MatrixXd& sigma0,
                   const Eigen::VectorXd& mu1, const Eigen::MatrixXd& sigma1);

struct SubmodelPosterior {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
};

// Bounds for the extra diagonal variance of submodels.
inline constexpr double kLogExtraNoiseMin = -20.0;
inline constexpr double kLogExtraNoiseMax = 10.0;

// Shared view of one reference posterior and dataset; caches the pieces of
// the divergence that do not depend on the submodel. Safe to use from several
// threads at once, but does not own the reference or the data.
class Projector {
 public:
  Projector(const LatentPosterior& lp, const Dataset& d);

  // Constrained posterior of the submodel at the training inputs, using the
  // reference noise variance.
  SubmodelPosterior submodel_posterior(const HyperParams& h_sub) const;

  // Divergence objective (twice the posterior KL) and its gradient over the
  // free submodel parameters, in hyper_param_ids order.
  std::pair<double, Eigen::VectorXd> kl_objective(const HyperParams& h_sub) const;

  // Divergence from the reference to the submodel's noise-free predictive
  // distribution at the training inputs.
  double predictive_divergence(const HyperParams& h_sub) const;

  // Optimizes the submodel hyperparameters for one subset. `init` overrides
  // the warm start; `parent` supplies the warm start for nested searches.
  Submodel project(const std::vector<int>& subset,
                   const std::optional<HyperParams>& init = std::nullopt,
                   const HyperParams* parent = nullptr) const;

  HyperParams default_init(const std::vector<int>& subset, const HyperParams* parent) const;

  const LatentPosterior& reference() const { return lp_; }
  const Dataset& data() const { return d_; }

  static OptimOptions default_optim_options();

 private:
  struct Workspace;
  Workspace build(const HyperParams& h_sub, double jitter_boost) const;
  std::pair<double, Eigen::VectorXd> objective_impl(const HyperParams& h_sub,
                                                    double jitter_boost) const;

  const LatentPosterior& lp_;
  const Dataset& d_;
  double log_det_sigma_ = 0.0;  // log det of the (jittered) reference covariance
};

// One-shot wrappers over a temporary Projector.
SubmodelPosterior submodel_posterior(const LatentPosterior& lp, const Dataset& d,
                                     const HyperParams& h_sub);
std::pair<double, Eigen::VectorXd> kl_objective(const LatentPosterior& lp, const Dataset& d,
                                                const HyperParams& h_sub);
double predictive_divergence(const LatentPosterior& lp, const Dataset& d,
                             const HyperParams& h_sub);
Submodel project(const LatentPosterior& lp, const Dataset& d, const std::vector<int>& subset,
                 const std::optional<HyperParams>& init = std::nullopt);

// Least-squares projection of f = X w onto the given columns, with the noise
// inflation that absorbs the discarded signal.
LinearProjection project_linear(const Eigen::MatrixXd& x_full, const Eigen::MatrixXd& x_sub,
                                const Eigen::VectorXd& w, double sigma2);

}  // namespace gpsel
