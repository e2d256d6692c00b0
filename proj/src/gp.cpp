#include "gpsel/gp.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "gpsel/errors.hpp"
#include "gpsel/linalg.hpp"

namespace gpsel {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

void check_coverage(const Eigen::MatrixXd& x, const HyperParams& h) {
  for (int j : h.active_inputs) {
    if (j < 0 || j >= x.cols()) throw InvalidArgument("active input index outside the point set");
  }
}

LmlResult lml_with_cache(const PointSetCache& cache, const Eigen::VectorXd& y,
                         const HyperParams& h, double noise_var) {
  if (!(noise_var > 0.0)) throw InvalidArgument("noise variance must be positive");
  const Eigen::Index n = y.size();
  const bool with_extra = h.log_extra_noise.has_value();

  Eigen::MatrixXd ky = full_cov(cache, h, with_extra).values;
  ky.diagonal().array() += noise_var;
  // ky has an explicit positive noise diagonal; escalation alone covers the rest.
  const Cholesky chol = chol_spd(ky, 0.0);

  const Eigen::VectorXd alpha = chol.solve(y);
  LmlResult res;
  res.value = -0.5 * y.dot(alpha) - 0.5 * chol.log_det() - 0.5 * static_cast<double>(n) * kLog2Pi;

  // d lml / d theta = 0.5 tr((alpha alpha' - Ky^-1) dK/dtheta)
  const Eigen::MatrixXd w = alpha * alpha.transpose() - chol.inverse();
  const auto ids = hyper_param_ids(h);
  res.gradient.resize(static_cast<Eigen::Index>(ids.size()) + 1);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const Eigen::MatrixXd dk = cov_grad(cache, h, ids[k]);
    res.gradient[static_cast<Eigen::Index>(k)] = 0.5 * w.cwiseProduct(dk).sum();
  }
  res.gradient[res.gradient.size() - 1] = 0.5 * noise_var * w.trace();
  return res;
}

}  // namespace

LmlResult log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  const HyperParams& h, double noise_var) {
  if (x.rows() != y.size()) throw InvalidArgument("X and y row counts differ");
  check_coverage(x, h);
  const PointSetCache cache(select_columns(x, h.active_inputs));
  return lml_with_cache(cache, y, h, noise_var);
}

LmlResult log_marginal_likelihood(const Dataset& d, const HyperParams& h, double noise_var) {
  return log_marginal_likelihood(d.x, d.y, h, noise_var);
}

FitResult fit_ml2(const Dataset& d, int restarts, std::uint64_t seed) {
  std::vector<int> all(d.n_inputs());
  for (int j = 0; j < d.n_inputs(); ++j) all[j] = j;
  return fit_ml2(d, std::move(all), restarts, seed);
}

FitResult fit_ml2(const Dataset& d, std::vector<int> active_inputs, int restarts,
                  std::uint64_t seed, const OptimOptions& opts) {
  if (restarts < 1) throw InvalidArgument("fit_ml2: restarts must be >= 1");
  HyperParams tmpl;
  tmpl.active_inputs = std::move(active_inputs);
  tmpl.log_lengthscales = Eigen::VectorXd::Zero(tmpl.n_active());
  tmpl.validate(d.n_inputs());

  const PointSetCache cache(select_columns(d.x, tmpl.active_inputs));
  const Eigen::Index n_hyper = static_cast<Eigen::Index>(hyper_param_ids(tmpl).size());

  // Draw every initial point up front so the restart loop order cannot change
  // the random stream.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform_log = [&](double lo, double hi) { return std::log(lo) + u01(rng) * (std::log(hi) - std::log(lo)); };
  std::vector<Eigen::VectorXd> inits(static_cast<std::size_t>(restarts));
  for (auto& x0 : inits) {
    x0.resize(n_hyper + 1);
    Eigen::Index k = 0;
    x0[k++] = std::log(0.1);  // constant-kernel variance
    if (tmpl.n_active() > 0) {
      x0[k++] = uniform_log(0.1, 2.0);  // magnitude
      for (int dI = 0; dI < tmpl.n_active(); ++dI) x0[k++] = uniform_log(0.3, 3.0);
    }
    x0[k] = uniform_log(0.01, 1.0);  // noise variance
  }

  auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) -> double {
    const HyperParams h = unpack_hyper(x.head(n_hyper), tmpl);
    const double noise_var = std::exp(x[n_hyper]);
    if (!std::isfinite(noise_var) || noise_var <= 0.0) return std::numeric_limits<double>::infinity();
    try {
      const LmlResult r = lml_with_cache(cache, d.y, h, noise_var);
      grad = -r.gradient;
      return -r.value;
    } catch (const IllConditioned&) {
      return std::numeric_limits<double>::infinity();
    } catch (const InvalidArgument&) {  // overflowing exp() during line search probes
      return std::numeric_limits<double>::infinity();
    }
  };

  FitResult best;
  bool any = false;
  for (int r = 0; r < restarts; ++r) {
    const OptimResult opt = minimize(objective, inits[static_cast<std::size_t>(r)], opts);
    if (!std::isfinite(opt.value)) continue;
    const double lml = -opt.value;
    if (!any || lml > best.log_marginal) {
      best.hyper = unpack_hyper(opt.x.head(n_hyper), tmpl);
      best.noise_var = std::exp(opt.x[n_hyper]);
      best.log_marginal = lml;
      best.converged = opt.converged;
      best.best_restart = r;
      any = true;
    }
  }
  if (!any) throw IllConditioned("fit_ml2: every restart failed to produce a finite objective");
  return best;
}

LatentPosterior latent_posterior(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 const HyperParams& h, double noise_var) {
  if (!(noise_var > 0.0)) throw InvalidArgument("noise variance must be positive");
  if (x.rows() != y.size()) throw InvalidArgument("X and y row counts differ");
  check_coverage(x, h);
  const Eigen::MatrixXd xa = select_columns(x, h.active_inputs);
  const Eigen::MatrixXd k = full_cov(xa, h, h.log_extra_noise.has_value()).values;
  Eigen::MatrixXd ky = k;
  ky.diagonal().array() += noise_var;
  const Cholesky chol = chol_spd(ky, 0.0);

  LatentPosterior lp;
  lp.mu = k * chol.solve(y);
  lp.sigma = symmetrized(k - k * chol.solve(k));
  lp.noise_var = noise_var;
  lp.source = LatentPosterior::kMl2;
  lp.ref_hyper = h;
  return lp;
}

LatentPosterior latent_posterior(const Dataset& d, const HyperParams& h, double noise_var) {
  return latent_posterior(d.x, d.y, h, noise_var);
}

Prediction predict(const Dataset& d, const HyperParams& h, double noise_var,
                   const Eigen::MatrixXd& x_new, bool with_noise) {
  if (!(noise_var > 0.0)) throw InvalidArgument("noise variance must be positive");
  if (x_new.cols() != d.x.cols()) {
    throw InvalidArgument("predict: new points live in a different input space");
  }
  check_coverage(d.x, h);
  const bool with_extra = h.log_extra_noise.has_value();
  const Eigen::MatrixXd xa_train = select_columns(d.x, h.active_inputs);
  const Eigen::MatrixXd xa_new = select_columns(x_new, h.active_inputs);

  Eigen::MatrixXd ky = full_cov(xa_train, h, with_extra).values;
  ky.diagonal().array() += noise_var;
  const Cholesky chol = chol_spd(ky, 0.0);

  // The diagonal extra-noise component does not transfer between the observed
  // latent values and a fresh draw, so the cross covariance never carries it.
  const Eigen::MatrixXd k_cross = full_cov(xa_new, xa_train, h, false).values;
  const Eigen::MatrixXd k_new = full_cov(xa_new, h, with_extra).values;

  Prediction p;
  p.mean = k_cross * chol.solve(d.y);
  const Eigen::MatrixXd k_cross_t = k_cross.transpose();
  p.cov = symmetrized(k_new - k_cross * chol.solve(k_cross_t));
  if (with_noise) p.cov.diagonal().array() += noise_var;
  p.includes_noise = with_noise;
  return p;
}

Prediction destandardize(const Prediction& p, const Standardization& s) {
  Prediction out;
  out.mean = (p.mean.array() * s.y_scale + s.y_mean).matrix();
  out.cov = p.cov * (s.y_scale * s.y_scale);
  out.includes_noise = p.includes_noise;
  return out;
}

double mlpd(const Prediction& p, const Eigen::VectorXd& y_true) {
  if (!p.includes_noise) throw InvalidArgument("mlpd needs a noise-inclusive prediction");
  if (p.mean.size() != y_true.size()) throw InvalidArgument("mlpd: length mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < y_true.size(); ++i) {
    const double var = p.cov(i, i);
    if (!(var > 0.0)) throw Error("mlpd: non-positive predictive variance");
    const double r = y_true[i] - p.mean[i];
    total += -0.5 * (kLog2Pi + std::log(var)) - 0.5 * r * r / var;
  }
  return total / static_cast<double>(y_true.size());
}

}  // namespace gpsel
