#include "gpsel/optim.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "gpsel/errors.hpp"

namespace gpsel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Box {
  const Eigen::VectorXd* lower = nullptr;
  const Eigen::VectorXd* upper = nullptr;

  Eigen::VectorXd clip(Eigen::VectorXd x) const {
    if (lower && lower->size() > 0) x = x.cwiseMax(*lower);
    if (upper && upper->size() > 0) x = x.cwiseMin(*upper);
    return x;
  }

  // Gradient components that push against an active bound do not count
  // towards convergence.
  double projected_grad_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g) const {
    double norm = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      double gi = g[i];
      if (lower && lower->size() > 0 && x[i] <= (*lower)[i] && gi > 0.0) gi = 0.0;
      if (upper && upper->size() > 0 && x[i] >= (*upper)[i] && gi < 0.0) gi = 0.0;
      norm = std::max(norm, std::abs(gi));
    }
    return norm;
  }
};

struct Memory {
  std::deque<Eigen::VectorXd> s, y;
  std::deque<double> rho;

  void push(const Eigen::VectorXd& si, const Eigen::VectorXd& yi, int history) {
    const double sy = si.dot(yi);
    if (!(sy > 1e-12 * si.norm() * yi.norm())) return;  // keep memory positive definite
    s.push_back(si);
    y.push_back(yi);
    rho.push_back(1.0 / sy);
    while (static_cast<int>(s.size()) > history) {
      s.pop_front();
      y.pop_front();
      rho.pop_front();
    }
  }

  void clear() {
    s.clear();
    y.clear();
    rho.clear();
  }

  // Standard two-loop recursion; returns an approximation of H * g.
  Eigen::VectorXd apply(const Eigen::VectorXd& g) const {
    Eigen::VectorXd q = g;
    const int m = static_cast<int>(s.size());
    std::vector<double> alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho[i] * s[i].dot(q);
      q -= alpha[i] * y[i];
    }
    if (m > 0) q *= s[m - 1].dot(y[m - 1]) / y[m - 1].squaredNorm();
    for (int i = 0; i < m; ++i) {
      const double beta = rho[i] * y[i].dot(q);
      q += (alpha[i] - beta) * s[i];
    }
    return q;
  }
};

}  // namespace

OptimResult minimize(const Objective& f, Eigen::VectorXd x0, const OptimOptions& opts,
                     const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  if (opts.max_iterations < 1) throw InvalidArgument("minimize: max_iterations must be >= 1");
  const Box box{&lower, &upper};

  OptimResult res;
  res.x = box.clip(std::move(x0));
  res.gradient.resize(res.x.size());
  res.value = f(res.x, res.gradient);
  res.evaluations = 1;
  if (!std::isfinite(res.value)) return res;  // infeasible start; caller decides what to do

  Memory mem;
  Eigen::VectorXd g_new(res.x.size());

  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    if (box.projected_grad_norm(res.x, res.gradient) < opts.grad_tolerance) {
      res.converged = true;
      return res;
    }

    Eigen::VectorXd dir = -mem.apply(res.gradient);
    if (!(dir.dot(res.gradient) < 0.0)) {
      mem.clear();
      dir = -res.gradient;
    }

    bool accepted = false;
    double t = (mem.s.empty()) ? std::min(1.0, 1.0 / std::max(1.0, res.gradient.lpNorm<Eigen::Infinity>())) : 1.0;
    Eigen::VectorXd x_new;
    double f_new = kInf;
    for (int ls = 0; ls < opts.max_line_search; ++ls, t *= 0.5) {
      x_new = box.clip(res.x + t * dir);
      const Eigen::VectorXd step = x_new - res.x;
      if (step.lpNorm<Eigen::Infinity>() == 0.0) break;  // fully blocked by bounds
      f_new = f(x_new, g_new);
      ++res.evaluations;
      if (!std::isfinite(f_new)) continue;
      if (f_new <= res.value + opts.armijo_c1 * res.gradient.dot(step)) {
        accepted = true;
        break;
      }
    }

    if (!accepted) {
      if (!mem.s.empty()) {
        // Retry from a clean steepest-descent state before giving up.
        mem.clear();
        continue;
      }
      res.converged = box.projected_grad_norm(res.x, res.gradient) < opts.grad_tolerance;
      return res;
    }

    // The secant pair of the actual (possibly projected) displacement still
    // satisfies the curvature guard, so clipped steps feed the memory too.
    mem.push(x_new - res.x, g_new - res.gradient, opts.history);
    res.x = std::move(x_new);
    res.value = f_new;
    res.gradient = g_new;
  }

  res.converged = box.projected_grad_norm(res.x, res.gradient) < opts.grad_tolerance;
  return res;
}

}  // namespace gpsel
