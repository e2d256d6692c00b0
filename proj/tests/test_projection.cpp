#include <cmath>
#include <random>

#include <doctest.h>

#include "gpsel/errors.hpp"
#include "gpsel/gp.hpp"
#include "gpsel/linalg.hpp"
#include "gpsel/projection.hpp"
#include "test_util.hpp"

using namespace gpsel;

namespace {

// A reference posterior from a moderate ML-II style fit on smooth data.
struct Fixture {
  Dataset data;
  LatentPosterior lp;
};

Fixture make_fixture(std::mt19937_64& rng, int n, int d, double noise_var = 0.2) {
  Eigen::MatrixXd x = gpsel::test::random_matrix(rng, n, d);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < d; ++j) {
    y += ((1.0 + 0.3 * j) * x.col(j).array()).sin().matrix() / std::sqrt(static_cast<double>(d));
  }
  y += std::sqrt(noise_var) * gpsel::test::random_vector(rng, n);
  Fixture f{Dataset::from_raw(std::move(x), std::move(y)), {}};
  HyperParams h = gpsel::test::random_hyper(rng, d, false, -0.3, 0.5);
  f.lp = latent_posterior(f.data, h, noise_var);
  return f;
}

HyperParams submodel_hyper(std::mt19937_64& rng, const std::vector<int>& subset,
                           double extra_lo = -3.0, double extra_hi = 0.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> ue(extra_lo, extra_hi);
  HyperParams h;
  h.log_const_var = u(rng);
  h.log_magnitude = u(rng);
  h.log_lengthscales.resize(static_cast<Eigen::Index>(subset.size()));
  for (Eigen::Index i = 0; i < h.log_lengthscales.size(); ++i) h.log_lengthscales[i] = u(rng);
  h.log_extra_noise = ue(rng);
  h.active_inputs = subset;
  return h;
}

}  // namespace

TEST_SUITE("projection") {

TEST_CASE("gaussian_kl of identical distributions is zero") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd s = gpsel::test::random_spd(rng, 6);
  const Eigen::VectorXd m = gpsel::test::random_vector(rng, 6);
  CHECK(gaussian_kl(m, s, m, s) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("gaussian_kl matches the scalar formula") {
  Eigen::VectorXd mu0(1), mu1(1);
  mu0 << 0.0;
  mu1 << 1.0;
  Eigen::MatrixXd s0(1, 1), s1(1, 1);
  s0 << 1.0;
  s1 << 2.0;
  // 0.5 (1/2 + 1/2 - 1 + log 2) = 0.5 log 2, up to the documented base jitter
  CHECK(gaussian_kl(mu0, s0, mu1, s1) ==
        doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-7));
}

TEST_CASE("gaussian_kl is nonnegative on random instances") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 25; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 19);
    const Eigen::MatrixXd s0 = gpsel::test::random_spd(rng, n);
    const Eigen::MatrixXd s1 = gpsel::test::random_spd(rng, n);
    const Eigen::VectorXd m0 = gpsel::test::random_vector(rng, n);
    const Eigen::VectorXd m1 = gpsel::test::random_vector(rng, n);
    CHECK(gaussian_kl(m0, s0, m1, s1) >= 0.0);
  }
}

TEST_CASE("gaussian_kl rejects mismatched shapes") {
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd m3 = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd s3 = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(gaussian_kl(m2, s2, m3, s3), InvalidArgument);
}

TEST_CASE("null-model posterior mean shrinks the targets") {
  std::mt19937_64 rng(11);
  Fixture f = make_fixture(rng, 25, 2, 0.01);

  HyperParams null_h;
  null_h.log_const_var = -60.0;
  null_h.log_extra_noise = std::log(1.0);
  const SubmodelPosterior sp = submodel_posterior(f.lp, f.data, null_h);
  // mu = s0 / (s0 + sigma^2) y with sigma^2 << s0, so nearly y itself.
  const Eigen::VectorXd expected = (1.0 / (1.0 + f.lp.noise_var)) * f.data.y;
  CHECK((sp.mu - expected).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((sp.mu - f.data.y).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("submodel posterior identities") {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 8 + static_cast<int>(rng() % 13);
    Fixture f = make_fixture(rng, n, 3);
    const HyperParams h = submodel_hyper(rng, {0, 2});
    const SubmodelPosterior sp = submodel_posterior(f.lp, f.data, h);

    // Rebuild the effective kernel exactly as documented: base jitter
    // relative to the mean diagonal.
    Eigen::MatrixXd k = full_cov(select_columns(f.data.x, h.active_inputs), h, true).values;
    k.diagonal().array() += kBaseJitterRel * k.diagonal().mean();
    Eigen::MatrixXd ky = k;
    ky.diagonal().array() += f.lp.noise_var;

    // Sigma_perp = sigma^2 K (K + sigma^2 I)^-1
    const Eigen::MatrixXd alt = f.lp.noise_var * ky.fullPivLu().solve(k).transpose();
    CHECK((sp.sigma - symmetrized(alt)).cwiseAbs().maxCoeff() /
              sp.sigma.cwiseAbs().maxCoeff() <
          1e-8);

    // Sigma_perp^-1 = sigma^-2 I + K^-1
    const Eigen::MatrixXd lhs = sp.sigma.fullPivLu().inverse();
    const Eigen::MatrixXd rhs = Eigen::MatrixXd::Identity(n, n) / f.lp.noise_var +
                                k.fullPivLu().inverse();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() / rhs.cwiseAbs().maxCoeff() < 1e-6);

    // v = sigma^-2 Sigma_perp y reproduces the posterior mean.
    const Eigen::VectorXd v = sp.sigma * f.data.y / f.lp.noise_var;
    CHECK((v - sp.mu).cwiseAbs().maxCoeff() / std::max(1.0, sp.mu.cwiseAbs().maxCoeff()) < 1e-8);
  }
}

TEST_CASE("the objective is twice the posterior KL") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 8 + static_cast<int>(rng() % 13);
    Fixture f = make_fixture(rng, n, 3);
    const HyperParams h = submodel_hyper(rng, {0, 1});
    const auto [e, grad] = kl_objective(f.lp, f.data, h);
    const SubmodelPosterior sp = submodel_posterior(f.lp, f.data, h);
    const double kl = gaussian_kl(f.lp.mu, f.lp.sigma, sp.mu, sp.sigma);
    CHECK(std::abs(e - 2.0 * kl) / std::max(1.0, std::abs(e)) < 1e-8);
  }
}

TEST_CASE("objective gradient matches finite differences") {
  std::mt19937_64 rng(19);
  const Fixture f = make_fixture(rng, 20, 3);
  const HyperParams h = submodel_hyper(rng, {0, 2});
  const auto [e0, grad] = kl_objective(f.lp, f.data, h);
  const Eigen::VectorXd x0 = pack_hyper(h);
  const double step = 1e-5;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    auto value_at = [&](double delta) {
      Eigen::VectorXd x = x0;
      x[i] += delta;
      return kl_objective(f.lp, f.data, unpack_hyper(x, h)).first;
    };
    const double fd = (value_at(step) - value_at(-step)) / (2.0 * step);
    CHECK(std::abs(grad[i] - fd) / std::max(1.0, std::abs(fd)) < 1e-4);
  }
}

TEST_CASE("projecting onto every input from its own fit is nearly exact") {
  std::mt19937_64 rng(23);
  const Fixture f = make_fixture(rng, 30, 3);
  HyperParams init = *f.lp.ref_hyper;
  init.log_extra_noise = std::log(1e-8);
  const Submodel sub = project(f.lp, f.data, {0, 1, 2}, init);
  CHECK(sub.posterior_kl < 1e-4);
  CHECK(sub.predictive_divergence >= 0.0);
}

TEST_CASE("null-model predictive mean is exactly zero with no constant term") {
  std::mt19937_64 rng(29);
  const Fixture f = make_fixture(rng, 20, 2);
  HyperParams h;
  h.log_const_var = -60.0;
  h.log_extra_noise = std::log(0.8);

  // With zero constant the noise-free cross covariance vanishes, so the
  // prediction is the prior mean everywhere while the posterior tracks y.
  const SubmodelPosterior sp = submodel_posterior(f.lp, f.data, h);
  CHECK(sp.mu.cwiseAbs().minCoeff() > 0.0);

  const double delta = predictive_divergence(f.lp, f.data, h);
  const double kl_to_prior =
      gaussian_kl(f.lp.mu, f.lp.sigma, Eigen::VectorXd::Zero(f.data.n()),
                  Eigen::MatrixXd::Identity(f.data.n(), f.data.n()) *
                      (0.8 + chol_spd(full_cov(Eigen::MatrixXd(f.data.n(), 0), h, true).values, 0.0).jitter()));
  CHECK(delta == doctest::Approx(kl_to_prior).epsilon(1e-6));
}

TEST_CASE("predictive and posterior divergences coincide as the extra noise vanishes") {
  std::mt19937_64 rng(31);
  const Fixture f = make_fixture(rng, 18, 2);
  HyperParams h = submodel_hyper(rng, {0, 1});
  h.log_extra_noise = std::log(1e-13);
  const auto [e, grad] = kl_objective(f.lp, f.data, h);
  const double posterior_kl = 0.5 * e;
  const double delta = predictive_divergence(f.lp, f.data, h);
  CHECK(std::abs(delta - posterior_kl) < 1e-6);
  CHECK(delta >= 0.0);
}

TEST_CASE("projection with an empty subset fits only the constant and extra variance") {
  std::mt19937_64 rng(37);
  const Fixture f = make_fixture(rng, 25, 2);
  const Submodel sub = project(f.lp, f.data, {});
  CHECK(sub.active_inputs.empty());
  CHECK(sub.hyper.n_active() == 0);
  CHECK(sub.hyper.log_extra_noise.has_value());
  CHECK(sub.posterior_kl >= 0.0);
  CHECK(sub.predictive_divergence >= 0.0);
}

TEST_CASE("warm-started nested projections never get worse") {
  std::mt19937_64 rng(41);
  int checked = 0;
  while (checked < 20) {
    const int d = 3;
    Fixture f = make_fixture(rng, 16 + static_cast<int>(rng() % 10), d);
    const int extra = static_cast<int>(rng() % d);
    std::vector<int> small, big;
    for (int j = 0; j < d; ++j) {
      if (j != extra && (rng() % 2 == 0)) small.push_back(j);
    }
    big = small;
    big.insert(std::upper_bound(big.begin(), big.end(), extra), extra);

    const Submodel parent = project(f.lp, f.data, small);
    HyperParams init;
    init.active_inputs = big;
    init.log_const_var = parent.hyper.log_const_var;
    // A parent without a smooth term is reproduced by a negligible magnitude.
    init.log_magnitude = parent.hyper.n_active() > 0 ? parent.hyper.log_magnitude : -30.0;
    init.log_lengthscales.resize(static_cast<Eigen::Index>(big.size()));
    for (std::size_t i = 0; i < big.size(); ++i) {
      if (big[i] == extra) {
        init.log_lengthscales[static_cast<Eigen::Index>(i)] = 30.0;  // effectively inactive
      } else {
        for (int pi = 0; pi < parent.hyper.n_active(); ++pi) {
          if (parent.hyper.active_inputs[pi] == big[i]) {
            init.log_lengthscales[static_cast<Eigen::Index>(i)] = parent.hyper.log_lengthscales[pi];
          }
        }
      }
    }
    init.log_extra_noise = parent.hyper.log_extra_noise;
    const Submodel child = project(f.lp, f.data, big, init);
    CHECK(child.posterior_kl <= parent.posterior_kl + 1e-6);
    ++checked;
  }
}

TEST_CASE("linear projection onto the full column set is the identity") {
  std::mt19937_64 rng(43);
  const Eigen::MatrixXd x = gpsel::test::random_matrix(rng, 30, 4);
  const Eigen::VectorXd w = gpsel::test::random_vector(rng, 4);
  const LinearProjection p = project_linear(x, x, w, 0.3);
  CHECK((p.w_perp - w).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(p.sigma2_perp == doctest::Approx(0.3).epsilon(1e-10));
}

TEST_CASE("linear projection onto nothing moves all signal into the noise") {
  std::mt19937_64 rng(47);
  const Eigen::MatrixXd x = gpsel::test::random_matrix(rng, 30, 3);
  const Eigen::VectorXd w = gpsel::test::random_vector(rng, 3);
  const Eigen::VectorXd f = x * w;
  const LinearProjection p = project_linear(x, Eigen::MatrixXd(30, 0), w, 0.5);
  CHECK(p.w_perp.size() == 0);
  CHECK(p.sigma2_perp == doctest::Approx(0.5 + f.squaredNorm() / 30.0).epsilon(1e-12));
}

TEST_CASE("dropping an orthogonal column moves exactly its share of signal") {
  // Orthogonal design: remaining weights are untouched and the dropped
  // component's energy lands in the noise term.
  const int n = 8;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, 3);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = (i & 1) ? -1.0 : 1.0;
    x(i, 1) = (i & 2) ? -1.0 : 1.0;
    x(i, 2) = (i & 4) ? -1.0 : 1.0;
  }
  REQUIRE((x.transpose() * x - static_cast<double>(n) * Eigen::MatrixXd::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  Eigen::VectorXd w(3);
  w << 1.5, -0.7, 0.4;
  const LinearProjection p = project_linear(x, x.leftCols(2), w, 0.2);
  CHECK(std::abs(p.w_perp[0] - 1.5) < 1e-12);
  CHECK(std::abs(p.w_perp[1] + 0.7) < 1e-12);
  CHECK(p.sigma2_perp ==
        doctest::Approx(0.2 + 0.4 * 0.4 * static_cast<double>(n) / n).epsilon(1e-12));
}

TEST_CASE("rank-deficient designs are rejected") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 2, 2, 4, 3, 6, 4, 8;  // second column is twice the first
  Eigen::VectorXd w(2);
  w << 1.0, 1.0;
  CHECK_THROWS_AS(project_linear(x, x, w, 0.1), SingularDesign);
}

TEST_CASE("single-input divergence ranking matches the linear oracle in the flat regime") {
  // Linear data, reference GP with very long length-scales: the projection
  // score must order single inputs exactly like the least-squares residuals.
  int agreements = 0;
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(1000 + static_cast<unsigned>(seed));
    const int n = 40, d = 4;
    Eigen::MatrixXd x = gpsel::test::random_matrix(rng, n, d);
    Eigen::VectorXd w(d);
    w << 1.2, 1.0, 0.8, 0.2;
    for (int j = 0; j < d; ++j) {
      if (rng() % 2 == 0) w[j] = -w[j];
    }
    Eigen::VectorXd y = x * w + 0.3 * gpsel::test::random_vector(rng, n);
    const Dataset data = Dataset::from_raw(std::move(x), y);

    HyperParams h_ref;
    h_ref.log_const_var = std::log(0.01);
    h_ref.log_magnitude = 2.0 * std::log(1000.0);  // unit linear weight at ell = 1000
    h_ref.log_lengthscales = Eigen::VectorXd::Constant(d, std::log(1000.0));
    h_ref.active_inputs = {0, 1, 2, 3};
    const LatentPosterior lp = latent_posterior(data, h_ref, 0.5);
    const Projector projector(lp, data);

    std::vector<double> divergence(d), residual(d);
    for (int j = 0; j < d; ++j) {
      divergence[static_cast<std::size_t>(j)] =
          projector.project({j}).predictive_divergence;
      // Linear oracle on the same reference fit.
      const Eigen::MatrixXd xj = data.x.col(j);
      const Eigen::VectorXd wj =
          (xj.transpose() * xj).fullPivLu().solve(xj.transpose() * lp.mu);
      residual[static_cast<std::size_t>(j)] = (lp.mu - xj * wj).squaredNorm();
    }
    if (gpsel::test::spearman(divergence, residual) == doctest::Approx(1.0)) ++agreements;
  }
  CHECK(agreements == 10);
}

TEST_CASE("projection failures identify the subset") {
  std::mt19937_64 rng(53);
  const Fixture f = make_fixture(rng, 12, 2);
  HyperParams init;
  init.active_inputs = {0};
  init.log_const_var = 710.0;  // overflows the kernel at every jitter boost
  init.log_magnitude = 710.0;
  init.log_lengthscales = Eigen::VectorXd::Zero(1);
  init.log_extra_noise = 0.0;
  try {
    project(f.lp, f.data, {0}, init);
    FAIL("expected ProjectionFailure");
  } catch (const ProjectionFailure& e) {
    CHECK(e.subset == std::vector<int>{0});
  }
}

}  // TEST_SUITE
