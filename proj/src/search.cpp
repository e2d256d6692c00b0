#include "gpsel/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "gpsel/errors.hpp"
#include "gpsel/parallel.hpp"

namespace gpsel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieTolerance = 1e-10;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<int> sorted_insert(std::vector<int> subset, int j) {
  subset.insert(std::upper_bound(subset.begin(), subset.end(), j), j);
  return subset;
}

// Smallest divergence wins; near-ties go to the smaller input index.
int argmin_candidate(const std::vector<double>& scores, const std::vector<int>& candidates) {
  int best = -1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) continue;
    if (best < 0 || scores[i] < scores[static_cast<std::size_t>(best)] - kTieTolerance ||
        (std::abs(scores[i] - scores[static_cast<std::size_t>(best)]) <= kTieTolerance &&
         candidates[i] < candidates[static_cast<std::size_t>(best)])) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::string reference_tag(const LatentPosterior& lp) {
  return lp.source == LatentPosterior::kIntegrated ? "integrated" : "ml2";
}

}  // namespace

std::vector<int> SearchTrace::ordering() const {
  std::vector<int> order;
  for (const auto& s : steps) {
    if (s.added_input >= 0) order.push_back(s.added_input);
  }
  return order;
}

std::string method_name(RelevanceRanking::Method m) {
  switch (m) {
    case RelevanceRanking::kArd: return "ard";
    case RelevanceRanking::kLio: return "lio";
    case RelevanceRanking::kForward: return "forward";
  }
  return "unknown";
}

SearchTrace forward_search(const LatentPosterior& lp, const Dataset& d, int max_steps) {
  const int n_inputs = d.n_inputs();
  if (max_steps < 1 || max_steps > n_inputs) {
    throw InvalidArgument("forward_search: max_steps must be in [1, n_inputs]");
  }
  const Projector projector(lp, d);

  SearchTrace trace;
  trace.reference = reference_tag(lp);

  auto t0 = std::chrono::steady_clock::now();
  Submodel current = projector.project({});
  trace.steps.push_back({-1, {}, current.predictive_divergence, current, seconds_since(t0)});

  std::vector<int> subset;
  for (int step = 0; step < max_steps; ++step) {
    t0 = std::chrono::steady_clock::now();
    std::vector<int> candidates;
    for (int j = 0; j < n_inputs; ++j) {
      if (!std::binary_search(subset.begin(), subset.end(), j)) candidates.push_back(j);
    }

    std::vector<double> scores(candidates.size(), kInf);
    std::vector<Submodel> fits(candidates.size());
    std::vector<std::string> failures(candidates.size());
    parallel_for(static_cast<int>(candidates.size()), [&](int i) {
      const auto sub = sorted_insert(subset, candidates[static_cast<std::size_t>(i)]);
      try {
        Submodel fit = projector.project(sub, std::nullopt, &current.hyper);
        scores[static_cast<std::size_t>(i)] = fit.predictive_divergence;
        fits[static_cast<std::size_t>(i)] = std::move(fit);
      } catch (const Error& e) {
        failures[static_cast<std::size_t>(i)] = e.what();
      }
    });

    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (!failures[i].empty()) {
        std::ostringstream w;
        w << "step " << step + 1 << ": candidate " << candidates[i] << " failed: " << failures[i];
        trace.warnings.push_back(w.str());
      }
    }

    const int pick = argmin_candidate(scores, candidates);
    if (pick < 0) throw SearchError("forward_search: every candidate projection failed");

    subset = sorted_insert(subset, candidates[static_cast<std::size_t>(pick)]);
    current = std::move(fits[static_cast<std::size_t>(pick)]);
    trace.steps.push_back({candidates[static_cast<std::size_t>(pick)], subset,
                           current.predictive_divergence, current, seconds_since(t0)});
  }
  return trace;
}

RelevanceRanking leave_input_out(const LatentPosterior& lp, const Dataset& d, bool normalize) {
  const int n_inputs = d.n_inputs();
  if (n_inputs < 2) throw InvalidArgument("leave_input_out needs at least two inputs");
  const Projector projector(lp, d);

  RelevanceRanking r;
  r.method = RelevanceRanking::kLio;
  r.scores = Eigen::VectorXd::Constant(n_inputs, kInf);
  parallel_for(n_inputs, [&](int j) {
    std::vector<int> subset;
    for (int k = 0; k < n_inputs; ++k) {
      if (k != j) subset.push_back(k);
    }
    try {
      r.scores[j] = projector.project(subset).predictive_divergence;
    } catch (const Error&) {
      // keep +inf: the input could not be assessed
    }
  });

  if (normalize) {
    double max_finite = 0.0;
    for (int j = 0; j < n_inputs; ++j) {
      if (std::isfinite(r.scores[j])) max_finite = std::max(max_finite, r.scores[j]);
    }
    if (max_finite > 0.0) {
      for (int j = 0; j < n_inputs; ++j) {
        if (std::isfinite(r.scores[j])) r.scores[j] /= max_finite;
      }
      r.normalized = true;
    }
  }
  return r;
}

RelevanceRanking ard_rank(const HyperParams& h_full, bool normalize) {
  const int d = h_full.n_active();
  for (int j = 0; j < d; ++j) {
    if (h_full.active_inputs[j] != j) {
      throw InvalidArgument("ard_rank: the fit must cover all inputs");
    }
  }
  RelevanceRanking r;
  r.method = RelevanceRanking::kArd;
  r.scores = (-h_full.log_lengthscales.array()).exp();
  if (normalize) {
    const double max = r.scores.maxCoeff();
    if (max > 0.0) {
      r.scores /= max;
      r.normalized = true;
    }
  }
  return r;
}

std::vector<int> ranking_order(const RelevanceRanking& r) {
  std::vector<int> order(static_cast<std::size_t>(r.scores.size()));
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = static_cast<int>(j);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (r.scores[a] != r.scores[b]) return r.scores[a] > r.scores[b];
    return a < b;
  });
  return order;
}

double test_mlpd_raw(const Dataset& test, const Prediction& pred_standardized) {
  return mlpd(destandardize(pred_standardized, test.standardization), test.raw_y());
}

namespace {

std::vector<Submodel> project_prefix_chain(const Projector& projector,
                                           const std::vector<int>& order, int max_k) {
  std::vector<Submodel> chain;
  chain.reserve(static_cast<std::size_t>(max_k) + 1);
  chain.push_back(projector.project({}));
  std::vector<int> subset;
  for (int k = 0; k < max_k; ++k) {
    subset = sorted_insert(subset, order[static_cast<std::size_t>(k)]);
    chain.push_back(projector.project(subset, std::nullopt, &chain.back().hyper));
  }
  return chain;
}

}  // namespace

std::vector<MlpdCurve> evaluate_orderings(const Dataset& train, const Dataset& test,
                                          const LatentPosterior* lp,
                                          const std::vector<OrderingSpec>& orderings,
                                          SubmodelParamMode mode, const Ml2Options& ml2) {
  if (mode == SubmodelParamMode::kProjected && lp == nullptr) {
    throw InvalidArgument("evaluate_orderings: projected mode needs the reference posterior");
  }
  std::vector<MlpdCurve> curves;
  curves.reserve(orderings.size());

  for (std::size_t oi = 0; oi < orderings.size(); ++oi) {
    const OrderingSpec& spec = orderings[oi];
    for (int j : spec.order) {
      if (j < 0 || j >= train.n_inputs()) throw InvalidArgument("ordering index out of range");
    }
    const int max_k = static_cast<int>(spec.order.size());
    MlpdCurve curve;
    curve.name = spec.name;
    curve.mode = mode;
    curve.mlpd.assign(static_cast<std::size_t>(max_k) + 1,
                      std::numeric_limits<double>::quiet_NaN());
    curve.ok.assign(static_cast<std::size_t>(max_k) + 1, false);

    if (mode == SubmodelParamMode::kProjected) {
      std::vector<Submodel> chain = spec.chain;
      if (chain.empty()) {
        chain = project_prefix_chain(Projector(*lp, train), spec.order, max_k);
      }
      if (static_cast<int>(chain.size()) != max_k + 1) {
        throw InvalidArgument("evaluate_orderings: chain length does not match the ordering");
      }
      for (int k = 0; k <= max_k; ++k) {
        const Submodel& sub = chain[static_cast<std::size_t>(k)];
        const Prediction pred = predict(train, sub.hyper, lp->noise_var, test.x, true);
        curve.mlpd[static_cast<std::size_t>(k)] = test_mlpd_raw(test, pred);
        curve.ok[static_cast<std::size_t>(k)] = true;
      }
    } else {
      std::vector<int> subset;
      for (int k = 0; k <= max_k; ++k) {
        if (k > 0) subset = sorted_insert(subset, spec.order[static_cast<std::size_t>(k - 1)]);
        try {
          const FitResult fit =
              fit_ml2(train, subset, ml2.restarts,
                      ml2.seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(
                                                              oi * 1000 + static_cast<std::size_t>(k) + 1)));
          const Prediction pred = predict(train, fit.hyper, fit.noise_var, test.x, true);
          curve.mlpd[static_cast<std::size_t>(k)] = test_mlpd_raw(test, pred);
          curve.ok[static_cast<std::size_t>(k)] = true;
        } catch (const Error&) {
          // missing point; the curve keeps going
        }
      }
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

}  // namespace gpsel
