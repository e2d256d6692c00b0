#include "gpsel/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gpsel/errors.hpp"
#include "gpsel/linalg.hpp"

namespace gpsel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string subset_string(const std::vector<int>& subset) {
  std::ostringstream out;
  out << "{";
  for (std::size_t i = 0; i < subset.size(); ++i) out << (i ? "," : "") << subset[i];
  out << "}";
  return out.str();
}

}  // namespace

double gaussian_kl(const Eigen::VectorXd& mu0, const Eigen::MatrixXd& sigma0,
                   const Eigen::VectorXd& mu1, const Eigen::MatrixXd& sigma1) {
  const Eigen::Index n = mu0.size();
  if (mu1.size() != n || sigma0.rows() != n || sigma0.cols() != n || sigma1.rows() != n ||
      sigma1.cols() != n) {
    throw InvalidArgument("gaussian_kl: dimension mismatch");
  }
  const Cholesky chol1 = chol_spd(sigma1);
  const Cholesky chol0 = chol_spd(sigma0);  // only for its log determinant
  const double tr = chol1.solve(sigma0).trace();
  const Eigen::VectorXd diff = mu1 - mu0;
  const double quad = diff.dot(chol1.solve(diff));
  const double kl =
      0.5 * (tr + quad + chol1.log_det() - chol0.log_det() - static_cast<double>(n));
  return std::max(kl, 0.0);
}

// Everything the objective, its gradient, and the predictive score need for
// one submodel evaluation. k_eff is the submodel covariance with the jitter
// that actually entered the factorizations, so all downstream quantities stay
// consistent with each other.
struct Projector::Workspace {
  PointSetCache cache;
  Eigen::MatrixXd k_eff;
  Cholesky chol_k;        // of k_eff
  Cholesky chol_noisy;    // of k_eff + sigma2 * I
  Eigen::VectorXd mu_perp;
  Eigen::MatrixXd sigma_perp;
  double sigma2 = 0.0;

  Workspace(PointSetCache c, Eigen::MatrixXd k, Cholesky ck, Cholesky cn, double s2,
            const Eigen::VectorXd& y)
      : cache(std::move(c)),
        k_eff(std::move(k)),
        chol_k(std::move(ck)),
        chol_noisy(std::move(cn)),
        sigma2(s2) {
    mu_perp = k_eff * chol_noisy.solve(y);
    sigma_perp = symmetrized(sigma2 * chol_noisy.solve(k_eff));
  }
};

Projector::Projector(const LatentPosterior& lp, const Dataset& d) : lp_(lp), d_(d) {
  if (lp.mu.size() != d.n()) throw InvalidArgument("projector: posterior size does not match data");
  if (!(lp.noise_var > 0.0)) throw InvalidArgument("projector: reference noise variance must be positive");
  log_det_sigma_ = chol_spd(lp.sigma).log_det();
}

Projector::Workspace Projector::build(const HyperParams& h_sub, double jitter_boost) const {
  if (!h_sub.log_extra_noise) {
    throw InvalidArgument("submodels need the extra diagonal noise component");
  }
  PointSetCache cache(select_columns(d_.x, h_sub.active_inputs));
  Eigen::MatrixXd k = full_cov(cache, h_sub, true).values;
  Cholesky chol_k = chol_spd(k, kBaseJitterRel * jitter_boost);
  k.diagonal().array() += chol_k.jitter();
  Eigen::MatrixXd noisy = k;
  noisy.diagonal().array() += lp_.noise_var;
  // k_eff + sigma2*I is positive definite by construction, so no fresh jitter.
  Cholesky chol_noisy = chol_spd(noisy, 0.0);
  return Workspace(std::move(cache), std::move(k), std::move(chol_k), std::move(chol_noisy),
                   lp_.noise_var, d_.y);
}

SubmodelPosterior Projector::submodel_posterior(const HyperParams& h_sub) const {
  const Workspace ws = build(h_sub, 1.0);
  return {ws.mu_perp, ws.sigma_perp};
}

std::pair<double, Eigen::VectorXd> Projector::objective_impl(const HyperParams& h_sub,
                                                             double jitter_boost) const {
  const Workspace ws = build(h_sub, jitter_boost);
  const Eigen::Index n = d_.y.size();

  const Cholesky chol_sp = chol_spd(ws.sigma_perp);
  const Eigen::VectorXd diff = lp_.mu - ws.mu_perp;
  const double value = chol_sp.solve(lp_.sigma).trace() + diff.dot(chol_sp.solve(diff)) +
                       chol_sp.log_det() - log_det_sigma_ - static_cast<double>(n);

  // dE/dtheta = -tr(dK/dtheta * W),  W = K^-1 M K^-1,
  // M = Sigma - Sigma_perp + mu mu' - mu_perp mu_perp'.
  const Eigen::MatrixXd m = lp_.sigma - ws.sigma_perp + lp_.mu * lp_.mu.transpose() -
                            ws.mu_perp * ws.mu_perp.transpose();
  const Eigen::MatrixXd k_inv_m_t = ws.chol_k.solve(m).transpose();
  const Eigen::MatrixXd w = symmetrized(ws.chol_k.solve(k_inv_m_t));

  const auto ids = hyper_param_ids(h_sub);
  Eigen::VectorXd grad(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Eigen::MatrixXd dk = cov_grad(ws.cache, h_sub, ids[i]);
    grad[static_cast<Eigen::Index>(i)] = -w.cwiseProduct(dk).sum();
  }
  return {value, std::move(grad)};
}

std::pair<double, Eigen::VectorXd> Projector::kl_objective(const HyperParams& h_sub) const {
  return objective_impl(h_sub, 1.0);
}

double Projector::predictive_divergence(const HyperParams& h_sub) const {
  const Workspace ws = build(h_sub, 1.0);
  // The predictive cross covariance drops the diagonal extra-noise part.
  Eigen::MatrixXd k_pred = ws.k_eff;
  k_pred.diagonal().array() -= h_sub.extra_noise();
  const Eigen::VectorXd mu_pred = k_pred * ws.chol_noisy.solve(d_.y);
  const Eigen::MatrixXd k_pred_t = k_pred.transpose();
  const Eigen::MatrixXd sigma_pred =
      symmetrized(ws.k_eff - k_pred * ws.chol_noisy.solve(k_pred_t));
  return gaussian_kl(lp_.mu, lp_.sigma, mu_pred, sigma_pred);
}

HyperParams Projector::default_init(const std::vector<int>& subset,
                                    const HyperParams* parent) const {
  HyperParams h;
  h.active_inputs = subset;
  h.log_lengthscales = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(subset.size()));
  const HyperParams* ref = lp_.ref_hyper ? &*lp_.ref_hyper : nullptr;

  h.log_const_var = parent ? parent->log_const_var
                           : (ref ? ref->log_const_var : std::log(0.1));
  if (!subset.empty()) {
    if (parent && parent->n_active() > 0) {
      h.log_magnitude = parent->log_magnitude;
    } else if (ref) {
      h.log_magnitude = ref->log_magnitude;
    } else {
      h.log_magnitude = 0.0;
    }
    for (std::size_t i = 0; i < subset.size(); ++i) {
      double value = 0.0;
      bool found = false;
      if (parent) {
        for (int pi = 0; pi < parent->n_active(); ++pi) {
          if (parent->active_inputs[pi] == subset[i]) {
            value = parent->log_lengthscales[pi];
            found = true;
            break;
          }
        }
      }
      if (!found && ref) {
        for (int ri = 0; ri < ref->n_active(); ++ri) {
          if (ref->active_inputs[ri] == subset[i]) {
            value = ref->log_lengthscales[ri];
            found = true;
            break;
          }
        }
      }
      h.log_lengthscales[static_cast<Eigen::Index>(i)] = value;
    }
  }

  // Start the extra variance at the larger of a noise fraction and the
  // residual left by the warm-start kernel.
  const double floor = 0.1 * lp_.noise_var;
  h.log_extra_noise = std::log(floor);
  double residual = floor;
  try {
    const Workspace ws = build(h, 1.0);
    residual = (lp_.mu - ws.mu_perp).squaredNorm() / static_cast<double>(d_.n());
  } catch (const IllConditioned&) {
  }
  const double init_extra = std::max(floor, residual);
  h.log_extra_noise =
      std::clamp(std::log(init_extra), kLogExtraNoiseMin, kLogExtraNoiseMax);
  return h;
}

OptimOptions Projector::default_optim_options() {
  OptimOptions opts;
  opts.max_iterations = 300;
  opts.grad_tolerance = 1e-4;
  return opts;
}

Submodel Projector::project(const std::vector<int>& subset,
                            const std::optional<HyperParams>& init,
                            const HyperParams* parent) const {
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (subset[i] < 0 || subset[i] >= d_.n_inputs()) {
      throw InvalidArgument("project: subset index out of range");
    }
    if (i > 0 && subset[i - 1] >= subset[i]) {
      throw InvalidArgument("project: subset must be strictly increasing");
    }
  }

  HyperParams h0 = init ? *init : default_init(subset, parent);
  if (init) {
    if (h0.active_inputs != subset) throw InvalidArgument("project: init does not match subset");
    if (!h0.log_extra_noise) {
      h0.log_extra_noise = std::clamp(std::log(0.1 * lp_.noise_var), kLogExtraNoiseMin,
                                      kLogExtraNoiseMax);
    }
  }

  const auto ids = hyper_param_ids(h0);
  const Eigen::Index dim = static_cast<Eigen::Index>(ids.size());
  Eigen::VectorXd lower = Eigen::VectorXd::Constant(dim, -kInf);
  Eigen::VectorXd upper = Eigen::VectorXd::Constant(dim, kInf);
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (ids[i].kind == ParamId::kExtraNoise) {
      lower[i] = kLogExtraNoiseMin;
      upper[i] = kLogExtraNoiseMax;
    }
  }

  auto make_objective = [&](double jitter_boost) {
    return [this, &h0, jitter_boost](const Eigen::VectorXd& x, Eigen::VectorXd& grad) -> double {
      try {
        auto [value, g] = objective_impl(unpack_hyper(x, h0), jitter_boost);
        grad = std::move(g);
        return value;
      } catch (const IllConditioned&) {
        return kInf;
      } catch (const InvalidArgument&) {
        return kInf;
      }
    };
  };

  // A start point the objective cannot evaluate gets a few escalating jitter
  // boosts before the subset is declared unprojectable.
  const Eigen::VectorXd x0 = pack_hyper(h0);
  double boost = 1.0;
  bool feasible = false;
  for (int attempt = 0; attempt < 5; ++attempt, boost *= 10.0) {
    Eigen::VectorXd g;
    if (std::isfinite(make_objective(boost)(x0, g))) {
      feasible = true;
      break;
    }
  }
  if (!feasible) {
    throw ProjectionFailure(
        "projection objective is not finite at its start point for subset " +
            subset_string(subset),
        subset);
  }

  const OptimResult opt = minimize(make_objective(boost), x0, default_optim_options(), lower, upper);
  Submodel sub;
  sub.active_inputs = subset;
  sub.hyper = unpack_hyper(opt.x, h0);
  sub.posterior_kl = std::max(0.5 * opt.value, 0.0);
  try {
    sub.predictive_divergence = std::max(predictive_divergence(sub.hyper), 0.0);
  } catch (const IllConditioned& e) {
    throw ProjectionFailure(
        std::string("projected submodel cannot be scored for subset ") + subset_string(subset) +
            ": " + e.what(),
        subset);
  }
  sub.converged = opt.converged;
  return sub;
}

SubmodelPosterior submodel_posterior(const LatentPosterior& lp, const Dataset& d,
                                     const HyperParams& h_sub) {
  return Projector(lp, d).submodel_posterior(h_sub);
}

std::pair<double, Eigen::VectorXd> kl_objective(const LatentPosterior& lp, const Dataset& d,
                                                const HyperParams& h_sub) {
  return Projector(lp, d).kl_objective(h_sub);
}

double predictive_divergence(const LatentPosterior& lp, const Dataset& d,
                             const HyperParams& h_sub) {
  return Projector(lp, d).predictive_divergence(h_sub);
}

Submodel project(const LatentPosterior& lp, const Dataset& d, const std::vector<int>& subset,
                 const std::optional<HyperParams>& init) {
  return Projector(lp, d).project(subset, init);
}

LinearProjection project_linear(const Eigen::MatrixXd& x_full, const Eigen::MatrixXd& x_sub,
                                const Eigen::VectorXd& w, double sigma2) {
  if (x_full.rows() != x_sub.rows()) throw InvalidArgument("project_linear: row counts differ");
  if (w.size() != x_full.cols()) throw InvalidArgument("project_linear: weight length mismatch");
  const double n = static_cast<double>(x_full.rows());
  const Eigen::VectorXd f = x_full * w;

  LinearProjection out;
  if (x_sub.cols() == 0) {
    out.w_perp = Eigen::VectorXd();
    out.sigma2_perp = sigma2 + f.squaredNorm() / n;
    return out;
  }
  const Eigen::MatrixXd gram = x_sub.transpose() * x_sub;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  if (!lu.isInvertible()) throw SingularDesign("project_linear: rank-deficient column subset");
  out.w_perp = lu.solve(x_sub.transpose() * f);
  const Eigen::VectorXd resid = f - x_sub * out.w_perp;
  out.sigma2_perp = sigma2 + resid.squaredNorm() / n;
  return out;
}

}  // namespace gpsel
