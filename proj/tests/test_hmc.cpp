#include <cmath>
#include <random>

#include <doctest.h>

#include "gpsel/errors.hpp"
#include "gpsel/hmc.hpp"
#include "gpsel/linalg.hpp"
#include "test_util.hpp"

using namespace gpsel;

namespace {

Potential standard_normal_1d() {
  return [](const Eigen::VectorXd& q, Eigen::VectorXd& g) {
    g = q;
    return 0.5 * q.squaredNorm();
  };
}

SamplerConfig quick_cfg(int n_samples, std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.n_samples = n_samples;
  cfg.n_warmup = 200;
  cfg.leapfrog_steps = 20;
  cfg.step_size = 0.2;
  cfg.seed = seed;
  return cfg;
}

const Eigen::VectorXd kNoBounds;

}  // namespace

TEST_SUITE("hmc") {

TEST_CASE("standard normal target: first two moments") {
  Eigen::VectorXd q0 = Eigen::VectorXd::Constant(1, 0.5);
  const HmcResult res = hmc_chain(standard_normal_1d(), q0, quick_cfg(2000, 7), kNoBounds, kNoBounds);
  REQUIRE(res.samples.size() == 2000);
  double mean = 0.0, second = 0.0;
  for (const auto& s : res.samples) {
    mean += s.params[0];
    second += s.params[0] * s.params[0];
  }
  mean /= 2000.0;
  second /= 2000.0;
  CHECK(std::abs(mean) < 0.1);
  CHECK(std::abs(second - mean * mean - 1.0) < 0.15);
  CHECK(res.diagnostics.acceptance_rate > 0.5);
}

TEST_CASE("chains are identical under the same seed") {
  Eigen::VectorXd q0 = Eigen::VectorXd::Zero(1);
  const HmcResult a = hmc_chain(standard_normal_1d(), q0, quick_cfg(200, 42), kNoBounds, kNoBounds);
  const HmcResult b = hmc_chain(standard_normal_1d(), q0, quick_cfg(200, 42), kNoBounds, kNoBounds);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].params[0] == b.samples[i].params[0]);
    CHECK(a.samples[i].log_density == b.samples[i].log_density);
  }
  const HmcResult c = hmc_chain(standard_normal_1d(), q0, quick_cfg(200, 43), kNoBounds, kNoBounds);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    any_diff = any_diff || a.samples[i].params[0] != c.samples[i].params[0];
  }
  CHECK(any_diff);
}

TEST_CASE("correlated 2-d gaussian: empirical covariance converges") {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.6, 0.6, 0.8;
  const Eigen::MatrixXd prec = cov.inverse();
  Potential u = [&prec](const Eigen::VectorXd& q, Eigen::VectorXd& g) {
    g = prec * q;
    return 0.5 * q.dot(prec * q);
  };
  SamplerConfig cfg = quick_cfg(5000, 11);
  cfg.n_warmup = 300;
  const HmcResult res = hmc_chain(u, Eigen::VectorXd::Zero(2), cfg, kNoBounds, kNoBounds);

  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& s : res.samples) mean += s.params;
  mean /= static_cast<double>(res.samples.size());
  Eigen::Matrix2d emp = Eigen::Matrix2d::Zero();
  for (const auto& s : res.samples) {
    const Eigen::Vector2d c = s.params - mean;
    emp += c * c.transpose();
  }
  emp /= static_cast<double>(res.samples.size());
  CHECK((emp - cov).norm() < 0.1);
}

TEST_CASE("proposals outside the support are rejected") {
  // Flat potential: every trajectory drifts; a tight box must keep the chain inside.
  Potential u = [](const Eigen::VectorXd&, Eigen::VectorXd& g) {
    g = Eigen::VectorXd::Zero(1);
    return 0.0;
  };
  SamplerConfig cfg = quick_cfg(500, 3);
  cfg.n_warmup = 0;
  cfg.step_size = 0.05;
  const Eigen::VectorXd lower = Eigen::VectorXd::Constant(1, -0.5);
  const Eigen::VectorXd upper = Eigen::VectorXd::Constant(1, 0.5);
  const HmcResult res = hmc_chain(u, Eigen::VectorXd::Zero(1), cfg, lower, upper);
  for (const auto& s : res.samples) {
    CHECK(s.params[0] >= -0.5);
    CHECK(s.params[0] <= 0.5);
  }
  CHECK(res.diagnostics.n_out_of_bounds > 0);
}

TEST_CASE("hopeless step size raises a sampler error with statistics") {
  // A potential whose gradient explodes makes every trajectory divergent.
  Potential u = [](const Eigen::VectorXd& q, Eigen::VectorXd& g) {
    g = 1e12 * q;
    return 0.5e12 * q.squaredNorm();
  };
  SamplerConfig cfg = quick_cfg(50, 5);
  cfg.n_warmup = 0;
  cfg.step_size = 1.0;
  Eigen::VectorXd q0 = Eigen::VectorXd::Constant(1, 0.1);
  try {
    hmc_chain(u, q0, cfg, kNoBounds, kNoBounds);
    FAIL("expected SamplerError");
  } catch (const SamplerError& e) {
    CHECK(e.acceptance_rate < 0.1);
    CHECK(e.step_size > 0.0);
  }
}

TEST_CASE("full-model sampling stores finite log densities") {
  std::mt19937_64 rng(13);
  const int n = 60, d = 5;
  Eigen::MatrixXd x = test::random_matrix(rng, n, d);
  Eigen::VectorXd y = (1.4 * x.col(0).array().sin() + 0.5 * x.col(1).array()).matrix() +
                      0.3 * test::random_vector(rng, n);
  const Dataset data = Dataset::from_raw(x, y);
  const FitResult fit = fit_ml2(data, 2, 3);

  SamplerConfig cfg;
  cfg.n_samples = 100;
  cfg.n_warmup = 150;
  cfg.leapfrog_steps = 10;
  cfg.step_size = 0.05;
  cfg.seed = 21;
  const HmcResult res = hmc_sample(data, cfg, fit.hyper, fit.noise_var);
  REQUIRE(static_cast<int>(res.samples.size()) == 100);
  for (const auto& s : res.samples) {
    CHECK(std::isfinite(s.log_density));
    CHECK(s.params.allFinite());
    CHECK(s.params.cwiseAbs().maxCoeff() <= 10.0);
  }
}

TEST_CASE("a single sample integrates to its own posterior") {
  std::mt19937_64 rng(17);
  const Dataset d = Dataset::from_raw(test::random_matrix(rng, 20, 2), test::random_vector(rng, 20));
  Eigen::VectorXd params(5);
  params << std::log(0.1), std::log(0.9), std::log(0.7), std::log(1.4), std::log(0.2);
  const LatentPosterior direct =
      latent_posterior(d, unpack_sample(params, 2), sample_noise_var(params));
  const LatentPosterior mixed = integrate_latent(d, {{params, 0.0}});
  CHECK((mixed.mu - direct.mu).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((mixed.sigma - direct.sigma).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(mixed.noise_var == doctest::Approx(direct.noise_var).epsilon(1e-15));
  CHECK(mixed.source == LatentPosterior::kIntegrated);
}

TEST_CASE("two samples combine by the two-component moment formula") {
  std::mt19937_64 rng(19);
  const Dataset d = Dataset::from_raw(test::random_matrix(rng, 15, 2), test::random_vector(rng, 15));
  // Mean of the covariances plus the rank-one spread of the means.
  Eigen::VectorXd pa(5), pb(5);
  pa << std::log(0.2), std::log(1.1), std::log(0.5), std::log(1.2), std::log(0.3);
  pb << std::log(0.1), std::log(0.8), std::log(1.5), std::log(0.6), std::log(0.2);
  const LatentPosterior la = latent_posterior(d, unpack_sample(pa, 2), sample_noise_var(pa));
  const LatentPosterior lb = latent_posterior(d, unpack_sample(pb, 2), sample_noise_var(pb));

  const LatentPosterior mixed = integrate_latent(d, {{pa, 0.0}, {pb, 0.0}});
  const Eigen::VectorXd mu = 0.5 * (la.mu + lb.mu);
  const Eigen::VectorXd diff = la.mu - lb.mu;
  const Eigen::MatrixXd sigma =
      0.5 * (la.sigma + lb.sigma) + 0.25 * diff * diff.transpose();
  CHECK((mixed.mu - mu).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((mixed.sigma - sigma).cwiseAbs().maxCoeff() < 1e-12);

  // The mixture covariance dominates the average member covariance.
  const Eigen::MatrixXd gap = mixed.sigma - 0.5 * (la.sigma + lb.sigma);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrized(gap));
  CHECK(eig.eigenvalues().minCoeff() > -1e-10);
}

TEST_CASE("integration is exactly invariant to sample order") {
  std::mt19937_64 rng(23);
  const Dataset d = Dataset::from_raw(test::random_matrix(rng, 12, 2), test::random_vector(rng, 12));
  std::vector<HyperSample> samples;
  for (int s = 0; s < 7; ++s) {
    Eigen::VectorXd p = 0.3 * test::random_vector(rng, 5);
    p[4] = std::log(0.2 + 0.1 * s);
    samples.push_back({p, static_cast<double>(s)});
  }
  const LatentPosterior a = integrate_latent(d, samples);
  std::shuffle(samples.begin(), samples.end(), rng);
  const LatentPosterior b = integrate_latent(d, samples);
  CHECK((a.mu - b.mu).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.sigma - b.sigma).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.noise_var == b.noise_var);
}

TEST_CASE("integration fails when more than half the samples are unusable") {
  std::mt19937_64 rng(29);
  const Dataset d = Dataset::from_raw(test::random_matrix(rng, 10, 2), test::random_vector(rng, 10));
  Eigen::VectorXd good(5);
  good << std::log(0.1), std::log(1.0), 0.0, 0.0, std::log(0.3);
  Eigen::VectorXd bad(5);
  // Overflowing magnitude makes the covariance non-finite.
  bad << 0.0, 800.0, 0.0, 0.0, std::log(0.3);
  CHECK_THROWS_AS(integrate_latent(d, {{bad, 0.0}, {bad, 0.0}, {good, 0.0}}), IntegrationError);
  CHECK_NOTHROW(integrate_latent(d, {{bad, 0.0}, {good, 0.0}, {good, 0.0}}));
}

TEST_CASE("sampler configuration is validated") {
  SamplerConfig cfg;
  cfg.n_samples = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.n_samples = 1;
  cfg.step_size = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.step_size = 0.1;
  cfg.leapfrog_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

}  // TEST_SUITE
