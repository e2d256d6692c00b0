#pragma once

#include <Eigen/Dense>

namespace gpsel {

// Relative jitter added to the diagonal before factorizing a symmetric
// covariance matrix, and the escalation ceiling when that is not enough.
inline constexpr double kBaseJitterRel = 1e-8;
inline constexpr double kMaxJitterRel = 1e-2;

// Cholesky factor of A + jitter*I together with the jitter that was applied.
class Cholesky {
 public:
  Cholesky(Eigen::LLT<Eigen::MatrixXd> llt, double jitter)
      : llt_(std::move(llt)), jitter_(jitter) {}

  // log |A + jitter*I|
  double log_det() const;

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt_.solve(b); }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const { return llt_.solve(b); }
  Eigen::MatrixXd inverse() const;

  double jitter() const { return jitter_; }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
};

// Factorizes A + j*I where j starts at initial_rel * mean(diag(A)) and grows
// tenfold until the factorization succeeds. Throws IllConditioned once j
// would exceed max_rel * mean(diag(A)). Passing initial_rel = 0 tries the
// matrix as given before escalating.
Cholesky chol_spd(const Eigen::MatrixXd& a, double initial_rel = kBaseJitterRel,
                  double max_rel = kMaxJitterRel);

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

// Sums vector/matrix contributions with a fixed pairwise reduction tree so the
// result does not depend on how the work was scheduled.
template <typename T>
T pairwise_sum(const std::vector<T>& items, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return items[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(items, lo, mid) + pairwise_sum(items, mid, hi);
}

template <typename T>
T pairwise_sum(const std::vector<T>& items) {
  return pairwise_sum(items, 0, items.size());
}

}  // namespace gpsel
