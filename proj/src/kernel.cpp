#include "gpsel/kernel.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "gpsel/errors.hpp"
#include "gpsel/linalg.hpp"

namespace gpsel {

namespace {

void check_point_set(const Eigen::MatrixXd& x, const HyperParams& h, const char* who) {
  if (x.cols() != h.n_active()) {
    std::ostringstream msg;
    msg << who << ": point set has " << x.cols() << " columns but " << h.n_active()
        << " inputs are active";
    throw InvalidArgument(msg.str());
  }
}

Eigen::MatrixXd sq_diff_dim(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::MatrixXd d = a.replicate(1, b.size());
  d.rowwise() -= b.transpose();
  return d.array().square();
}

// exp(-0.5 * sum_d sqdist_d / ell_d^2), scaled by sigma_f^2; zero matrix when
// no inputs are active.
Eigen::MatrixXd se_values(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2,
                          const HyperParams& h) {
  const Eigen::Index n1 = x1.rows(), n2 = x2.rows();
  if (h.n_active() == 0) return Eigen::MatrixXd::Zero(n1, n2);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n1, n2);
  for (int d = 0; d < h.n_active(); ++d) {
    const double inv_ell2 = std::exp(-2.0 * h.log_lengthscales[d]);
    m.noalias() += inv_ell2 * sq_diff_dim(x1.col(d), x2.col(d));
  }
  return h.magnitude() * (-0.5 * m).array().exp();
}

Eigen::MatrixXd se_values(const PointSetCache& cache, const HyperParams& h) {
  const Eigen::Index n = cache.n_points();
  if (h.n_active() == 0) return Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int d = 0; d < h.n_active(); ++d) {
    m.noalias() += std::exp(-2.0 * h.log_lengthscales[d]) * cache.sqdist(d);
  }
  return h.magnitude() * (-0.5 * m).array().exp();
}

double checked_exp(double log_value, const char* name) {
  const double v = std::exp(log_value);
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << name << " = exp(" << log_value << ") is not finite";
    throw InvalidArgument(msg.str());
  }
  return v;
}

}  // namespace

double HyperParams::const_var() const { return checked_exp(log_const_var, "const_var"); }
double HyperParams::magnitude() const { return checked_exp(log_magnitude, "magnitude"); }

double HyperParams::extra_noise() const {
  if (!log_extra_noise) throw InvalidArgument("extra noise variance is not set");
  return checked_exp(*log_extra_noise, "extra_noise");
}

Eigen::VectorXd HyperParams::lengthscales() const {
  return log_lengthscales.array().exp();
}

void HyperParams::validate(int n_inputs_total) const {
  if (log_lengthscales.size() != n_active()) {
    throw InvalidArgument("number of length-scales does not match the active input set");
  }
  auto check_finite = [](double v, const char* name) {
    if (!std::isfinite(v) || !std::isfinite(std::exp(v))) {
      throw InvalidArgument(std::string(name) + " is not a finite log parameter");
    }
  };
  check_finite(log_const_var, "log_const_var");
  check_finite(log_magnitude, "log_magnitude");
  for (int d = 0; d < n_active(); ++d) check_finite(log_lengthscales[d], "log_lengthscale");
  if (log_extra_noise) check_finite(*log_extra_noise, "log_extra_noise");
  for (std::size_t i = 0; i < active_inputs.size(); ++i) {
    const int idx = active_inputs[i];
    if (idx < 0 || (n_inputs_total >= 0 && idx >= n_inputs_total)) {
      throw InvalidArgument("active input index out of range");
    }
    if (i > 0 && active_inputs[i - 1] >= idx) {
      throw InvalidArgument("active_inputs must be strictly increasing");
    }
  }
}

std::vector<ParamId> hyper_param_ids(const HyperParams& h) {
  std::vector<ParamId> ids;
  ids.push_back(ParamId::const_var());
  if (h.n_active() > 0) {
    ids.push_back(ParamId::magnitude());
    for (int d = 0; d < h.n_active(); ++d) ids.push_back(ParamId::lengthscale(d));
  }
  if (h.log_extra_noise) ids.push_back(ParamId::extra_noise());
  return ids;
}

std::string param_name(const ParamId& id, const HyperParams& h) {
  switch (id.kind) {
    case ParamId::kConstVar: return "log_const_var";
    case ParamId::kMagnitude: return "log_magnitude";
    case ParamId::kLengthscale: {
      const int input = (id.dim >= 0 && id.dim < h.n_active()) ? h.active_inputs[id.dim] : id.dim;
      return "log_lengthscale[" + std::to_string(input) + "]";
    }
    case ParamId::kExtraNoise: return "log_extra_noise";
    case ParamId::kNoiseVar: return "log_noise_var";
  }
  return "unknown";
}

Eigen::VectorXd pack_hyper(const HyperParams& h) {
  const auto ids = hyper_param_ids(h);
  Eigen::VectorXd x(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    switch (ids[i].kind) {
      case ParamId::kConstVar: x[i] = h.log_const_var; break;
      case ParamId::kMagnitude: x[i] = h.log_magnitude; break;
      case ParamId::kLengthscale: x[i] = h.log_lengthscales[ids[i].dim]; break;
      case ParamId::kExtraNoise: x[i] = *h.log_extra_noise; break;
      case ParamId::kNoiseVar: throw InvalidArgument("noise variance is not part of HyperParams");
    }
  }
  return x;
}

HyperParams unpack_hyper(const Eigen::VectorXd& x, const HyperParams& tmpl) {
  HyperParams h = tmpl;
  const auto ids = hyper_param_ids(tmpl);
  if (x.size() != static_cast<Eigen::Index>(ids.size())) {
    throw InvalidArgument("packed parameter vector has the wrong length");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    switch (ids[i].kind) {
      case ParamId::kConstVar: h.log_const_var = x[i]; break;
      case ParamId::kMagnitude: h.log_magnitude = x[i]; break;
      case ParamId::kLengthscale: h.log_lengthscales[ids[i].dim] = x[i]; break;
      case ParamId::kExtraNoise: h.log_extra_noise = x[i]; break;
      case ParamId::kNoiseVar: break;
    }
  }
  return h;
}

PointSetCache::PointSetCache(Eigen::MatrixXd x_active) : x_(std::move(x_active)) {
  sqdist_.reserve(x_.cols());
  for (Eigen::Index d = 0; d < x_.cols(); ++d) {
    sqdist_.push_back(sq_diff_dim(x_.col(d), x_.col(d)));
  }
}

CovMatrix se_ard(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2, const HyperParams& h) {
  check_point_set(x1, h, "se_ard");
  check_point_set(x2, h, "se_ard");
  const bool symmetric = (&x1 == &x2) || (x1.rows() == x2.rows() && x1.isApprox(x2, 0.0));
  return {se_values(x1, x2, h), symmetric};
}

CovMatrix se_ard(const PointSetCache& cache, const HyperParams& h) {
  check_point_set(cache.x(), h, "se_ard");
  return {se_values(cache, h), true};
}

namespace {

CovMatrix assemble_full(Eigen::MatrixXd se, bool symmetric, const HyperParams& h,
                        bool include_extra_noise) {
  if (include_extra_noise && !h.log_extra_noise) {
    throw InvalidArgument("full_cov: extra noise requested but log_extra_noise is absent");
  }
  se.array() += h.const_var();
  if (include_extra_noise && symmetric) se.diagonal().array() += h.extra_noise();
  if (symmetric) se = symmetrized(se);
  return {std::move(se), symmetric};
}

}  // namespace

CovMatrix full_cov(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2, const HyperParams& h,
                   bool include_extra_noise) {
  CovMatrix se = se_ard(x1, x2, h);
  return assemble_full(std::move(se.values), se.symmetric, h, include_extra_noise);
}

CovMatrix full_cov(const Eigen::MatrixXd& x, const HyperParams& h, bool include_extra_noise) {
  check_point_set(x, h, "full_cov");
  return assemble_full(se_values(x, x, h), true, h, include_extra_noise);
}

CovMatrix full_cov(const PointSetCache& cache, const HyperParams& h, bool include_extra_noise) {
  check_point_set(cache.x(), h, "full_cov");
  return assemble_full(se_values(cache, h), true, h, include_extra_noise);
}

namespace {

Eigen::MatrixXd cov_grad_impl(const Eigen::MatrixXd& x, const PointSetCache* cache,
                              const HyperParams& h, const ParamId& which) {
  const Eigen::Index n = x.rows();
  switch (which.kind) {
    case ParamId::kConstVar:
      return Eigen::MatrixXd::Constant(n, n, h.const_var());
    case ParamId::kMagnitude: {
      if (h.n_active() == 0) throw InvalidArgument("cov_grad: magnitude has no effect with no active inputs");
      return cache ? se_values(*cache, h) : se_values(x, x, h);
    }
    case ParamId::kLengthscale: {
      if (which.dim < 0 || which.dim >= h.n_active()) {
        throw InvalidArgument("cov_grad: length-scale index out of range");
      }
      const Eigen::MatrixXd se = cache ? se_values(*cache, h) : se_values(x, x, h);
      const double inv_ell2 = std::exp(-2.0 * h.log_lengthscales[which.dim]);
      if (cache) return se.cwiseProduct(cache->sqdist(which.dim)) * inv_ell2;
      return se.cwiseProduct(sq_diff_dim(x.col(which.dim), x.col(which.dim))) * inv_ell2;
    }
    case ParamId::kExtraNoise:
      return h.extra_noise() * Eigen::MatrixXd::Identity(n, n);
    case ParamId::kNoiseVar:
      break;
  }
  throw InvalidArgument("cov_grad: unknown parameter " + param_name(which, h));
}

}  // namespace

Eigen::MatrixXd cov_grad(const Eigen::MatrixXd& x, const HyperParams& h, const ParamId& which) {
  check_point_set(x, h, "cov_grad");
  return cov_grad_impl(x, nullptr, h, which);
}

Eigen::MatrixXd cov_grad(const PointSetCache& cache, const HyperParams& h, const ParamId& which) {
  check_point_set(cache.x(), h, "cov_grad");
  return cov_grad_impl(cache.x(), &cache, h, which);
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<int>& idx) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= x.cols()) throw InvalidArgument("column index out of range");
    out.col(static_cast<Eigen::Index>(i)) = x.col(idx[i]);
  }
  return out;
}

}  // namespace gpsel
