#include "gpsel/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "gpsel/errors.hpp"
#include "gpsel/linalg.hpp"

namespace gpsel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogPriorBound = 10.0;

bool in_box(const Eigen::VectorXd& q, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  if (lower.size() > 0 && (q.array() < lower.array()).any()) return false;
  if (upper.size() > 0 && (q.array() > upper.array()).any()) return false;
  return true;
}

}  // namespace

void SamplerConfig::validate() const {
  if (n_samples < 1) throw InvalidArgument("sampler: n_samples must be >= 1");
  if (n_warmup < 0) throw InvalidArgument("sampler: n_warmup must be >= 0");
  if (leapfrog_steps < 1) throw InvalidArgument("sampler: leapfrog_steps must be >= 1");
  if (!(step_size > 0.0)) throw InvalidArgument("sampler: step_size must be positive");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw InvalidArgument("sampler: target_accept must be in (0, 1)");
  }
}

HmcResult hmc_chain(const Potential& u, Eigen::VectorXd q0, const SamplerConfig& cfg,
                    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  cfg.validate();
  const Eigen::Index dim = q0.size();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> momentum(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  Eigen::VectorXd q = std::move(q0);
  Eigen::VectorXd grad(dim);
  double energy = u(q, grad);
  if (!std::isfinite(energy)) throw InvalidArgument("hmc: potential is not finite at the initial point");

  // Dual-averaging state (shrinks the step size towards the target
  // acceptance rate during warmup, then freezes the running average).
  const double mu = std::log(10.0 * cfg.step_size);
  double log_eps = std::log(cfg.step_size);
  double log_eps_bar = log_eps;  // replaced by the running average once warmup runs
  double h_bar = 0.0;
  constexpr double gamma = 0.05, t0 = 10.0, kappa = 0.75;

  HmcResult res;
  res.samples.reserve(static_cast<std::size_t>(cfg.n_samples));
  int accepted_post = 0;

  const int total = cfg.n_warmup + cfg.n_samples;
  for (int iter = 1; iter <= total; ++iter) {
    const bool warming = iter <= cfg.n_warmup;
    const double eps = std::exp(warming ? log_eps : log_eps_bar);

    Eigen::VectorXd p(dim);
    for (Eigen::Index i = 0; i < dim; ++i) p[i] = momentum(rng);
    const double h0 = energy + 0.5 * p.squaredNorm();

    Eigen::VectorXd q_new = q;
    Eigen::VectorXd g_new = grad;
    Eigen::VectorXd p_new = p;
    double e_new = energy;
    bool divergent = false;

    p_new -= 0.5 * eps * g_new;
    for (int step = 0; step < cfg.leapfrog_steps; ++step) {
      q_new += eps * p_new;
      e_new = u(q_new, g_new);
      if (!std::isfinite(e_new)) {
        divergent = true;
        break;
      }
      if (step + 1 < cfg.leapfrog_steps) p_new -= eps * g_new;
    }
    if (!divergent) p_new -= 0.5 * eps * g_new;

    double alpha = 0.0;
    if (divergent) {
      ++res.diagnostics.n_divergent;
    } else if (!in_box(q_new, lower, upper)) {
      ++res.diagnostics.n_out_of_bounds;
    } else {
      const double h1 = e_new + 0.5 * p_new.squaredNorm();
      alpha = std::isfinite(h1) ? std::min(1.0, std::exp(h0 - h1)) : 0.0;
    }

    if (u01(rng) < alpha) {
      q = std::move(q_new);
      grad = std::move(g_new);
      energy = e_new;
      if (!warming) ++accepted_post;
    }

    if (warming) {
      const double m = static_cast<double>(iter);
      h_bar = (1.0 - 1.0 / (m + t0)) * h_bar + (cfg.target_accept - alpha) / (m + t0);
      log_eps = mu - std::sqrt(m) / gamma * h_bar;
      const double w = std::pow(m, -kappa);
      log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
    } else {
      res.samples.push_back({q, -energy});
    }
  }

  res.diagnostics.acceptance_rate =
      static_cast<double>(accepted_post) / static_cast<double>(cfg.n_samples);
  res.diagnostics.adapted_step_size = std::exp(log_eps_bar);
  if (res.diagnostics.acceptance_rate < 0.1) {
    std::ostringstream msg;
    msg << "hmc: acceptance rate " << res.diagnostics.acceptance_rate
        << " after warmup (step size " << res.diagnostics.adapted_step_size << ")";
    throw SamplerError(msg.str(), res.diagnostics.acceptance_rate,
                       res.diagnostics.adapted_step_size);
  }
  return res;
}

HyperParams unpack_sample(const Eigen::VectorXd& params, int n_inputs) {
  if (params.size() != n_inputs + 3) throw InvalidArgument("hyper sample has the wrong length");
  HyperParams h;
  h.log_const_var = params[0];
  h.log_magnitude = params[1];
  h.log_lengthscales = params.segment(2, n_inputs);
  h.active_inputs.resize(static_cast<std::size_t>(n_inputs));
  std::iota(h.active_inputs.begin(), h.active_inputs.end(), 0);
  return h;
}

double sample_noise_var(const Eigen::VectorXd& params) {
  return std::exp(params[params.size() - 1]);
}

HmcResult hmc_sample(const Dataset& d, const SamplerConfig& cfg, const HyperParams& init,
                     double init_noise_var) {
  if (init.n_active() != d.n_inputs()) {
    throw InvalidArgument("hmc_sample: the chain runs on the full input set");
  }
  if (!(init_noise_var > 0.0)) throw InvalidArgument("hmc_sample: noise variance must be positive");

  const Eigen::Index dim = d.n_inputs() + 3;
  Eigen::VectorXd q0(dim);
  q0.head(dim - 1) = pack_hyper(init);
  q0[dim - 1] = std::log(init_noise_var);
  q0 = q0.cwiseMax(-kLogPriorBound).cwiseMin(kLogPriorBound);

  const PointSetCache cache(d.x);
  const HyperParams tmpl = unpack_sample(q0, d.n_inputs());

  Potential u = [&](const Eigen::VectorXd& q, Eigen::VectorXd& grad) -> double {
    try {
      const HyperParams h = unpack_hyper(q.head(dim - 1), tmpl);
      const double noise_var = std::exp(q[dim - 1]);
      const LmlResult r = log_marginal_likelihood(d.x, d.y, h, noise_var);
      grad = -r.gradient;
      return -r.value;
    } catch (const IllConditioned&) {
      return kInf;
    } catch (const InvalidArgument&) {
      return kInf;
    }
  };

  const Eigen::VectorXd lower = Eigen::VectorXd::Constant(dim, -kLogPriorBound);
  const Eigen::VectorXd upper = Eigen::VectorXd::Constant(dim, kLogPriorBound);
  return hmc_chain(u, std::move(q0), cfg, lower, upper);
}

LatentPosterior integrate_latent(const Dataset& d, const std::vector<HyperSample>& samples) {
  if (samples.empty()) throw InvalidArgument("integrate_latent: no samples");
  for (const auto& s : samples) {
    if (s.params.size() != d.n_inputs() + 3) {
      throw InvalidArgument("integrate_latent: sample length does not match the data");
    }
  }

  // Canonical processing order makes the floating-point reduction invariant
  // to the order the samples arrived in.
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = samples[a].params;
    const auto& pb = samples[b].params;
    for (Eigen::Index i = 0; i < pa.size(); ++i) {
      if (pa[i] != pb[i]) return pa[i] < pb[i];
    }
    return samples[a].log_density < samples[b].log_density;
  });

  std::vector<Eigen::VectorXd> mus;
  std::vector<Eigen::MatrixXd> seconds;  // Sigma_s + mu_s mu_s'
  std::vector<double> noises;
  std::vector<Eigen::VectorXd> params_used;
  int skipped = 0;
  for (std::size_t i : order) {
    try {
      const HyperParams h = unpack_sample(samples[i].params, d.n_inputs());
      const double noise_var = sample_noise_var(samples[i].params);
      LatentPosterior lp = latent_posterior(d, h, noise_var);
      seconds.push_back(lp.sigma + lp.mu * lp.mu.transpose());
      mus.push_back(std::move(lp.mu));
      noises.push_back(noise_var);
      params_used.push_back(samples[i].params);
    } catch (const IllConditioned&) {
      ++skipped;
    } catch (const InvalidArgument&) {  // overflowing parameters are equally unusable
      ++skipped;
    }
  }
  if (skipped * 2 > static_cast<int>(samples.size())) {
    std::ostringstream msg;
    msg << "integrate_latent: " << skipped << " of " << samples.size()
        << " samples failed their posterior computation";
    throw IntegrationError(msg.str());
  }

  const double count = static_cast<double>(mus.size());
  LatentPosterior out;
  out.mu = pairwise_sum(mus) / count;
  out.sigma = symmetrized(pairwise_sum(seconds) / count - out.mu * out.mu.transpose());
  out.noise_var = pairwise_sum(noises) / count;
  out.source = LatentPosterior::kIntegrated;

  const Eigen::VectorXd mean_params = pairwise_sum(params_used) / count;
  out.ref_hyper = unpack_sample(mean_params, d.n_inputs());
  return out;
}

}  // namespace gpsel
