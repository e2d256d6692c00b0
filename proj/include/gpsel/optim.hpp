#pragma once

#include <functional>

#include <Eigen/Dense>

namespace gpsel {

// Objective for minimization. Fills `grad` and returns the value; returning a
// non-finite value marks the point as infeasible and makes the line search
// back off.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct OptimOptions {
  int max_iterations = 500;
  double grad_tolerance = 1e-5;  // infinity norm of the (projected) gradient
  int history = 10;              // quasi-Newton memory
  int max_line_search = 40;
  double armijo_c1 = 1e-4;
};

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// Limited-memory quasi-Newton descent with backtracking line search. Optional
// element-wise bounds are enforced by projection; steps that hit a bound drop
// the curvature memory instead of polluting it.
OptimResult minimize(const Objective& f, Eigen::VectorXd x0, const OptimOptions& opts = {},
                     const Eigen::VectorXd& lower = Eigen::VectorXd(),
                     const Eigen::VectorXd& upper = Eigen::VectorXd());

}  // namespace gpsel
