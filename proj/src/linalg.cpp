#include "gpsel/linalg.hpp"

#include <cmath>
#include <sstream>

#include "gpsel/errors.hpp"

namespace gpsel {

double Cholesky::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Eigen::MatrixXd Cholesky::inverse() const {
  const Eigen::Index n = llt_.matrixLLT().rows();
  return llt_.solve(Eigen::MatrixXd::Identity(n, n));
}

Cholesky chol_spd(const Eigen::MatrixXd& a, double initial_rel, double max_rel) {
  if (a.rows() != a.cols()) throw InvalidArgument("chol_spd: matrix is not square");
  const Eigen::Index n = a.rows();
  double scale = a.diagonal().mean();
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;

  double rel = initial_rel;
  while (true) {
    const double jitter = rel * scale;
    Eigen::MatrixXd work = a;
    if (jitter > 0.0) work.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) return Cholesky(std::move(llt), jitter);
    // Escalate. A zero start jumps to the base level rather than multiplying.
    rel = (rel == 0.0) ? kBaseJitterRel : rel * 10.0;
    if (rel > max_rel * 1.0000001) {
      std::ostringstream msg;
      msg << "Cholesky failed for " << n << "x" << n
          << " matrix after jitter escalation to " << rel << " * mean diagonal";
      throw IllConditioned(msg.str());
    }
  }
}

}  // namespace gpsel
