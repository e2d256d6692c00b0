#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpsel/dataset.hpp"
#include "gpsel/gp.hpp"
#include "gpsel/projection.hpp"

namespace gpsel {

struct SearchStep {
  int added_input = -1;  // -1 for the initial null model
  std::vector<int> subset;
  double predictive_divergence = 0.0;
  Submodel submodel;
  double wall_time_s = 0.0;
};

struct SearchTrace {
  std::vector<SearchStep> steps;  // steps[0] is the null model
  std::string reference;          // descriptor of the reference posterior
  std::vector<std::string> warnings;

  std::vector<int> ordering() const;  // added inputs in selection order
};

struct RelevanceRanking {
  enum Method { kArd, kLio, kForward };
  Method method = kArd;
  Eigen::VectorXd scores;  // one per input, higher = more relevant
  bool normalized = false;
};

std::string method_name(RelevanceRanking::Method m);

// Greedy selection: at each step projects every candidate extension of the
// current subset (warm-started from the parent solution) and keeps the one
// with the smallest predictive divergence. Failed candidates score +inf and
// leave a warning on the trace.
SearchTrace forward_search(const LatentPosterior& lp, const Dataset& d, int max_steps);

// Relevance of input j as the divergence of the submodel that omits j.
RelevanceRanking leave_input_out(const LatentPosterior& lp, const Dataset& d,
                                 bool normalize = true);

// Relevance as the inverse length-scale of a full-input fit.
RelevanceRanking ard_rank(const HyperParams& h_full, bool normalize = true);

// Descending-score input order; ties go to the smaller index.
std::vector<int> ranking_order(const RelevanceRanking& r);

enum class SubmodelParamMode { kProjected, kMl2 };

struct OrderingSpec {
  std::string name;
  std::vector<int> order;        // permutation prefix of the inputs
  std::vector<Submodel> chain;   // optional: chain[k] fitted on the first k inputs
};

struct MlpdCurve {
  std::string name;
  SubmodelParamMode mode = SubmodelParamMode::kProjected;
  std::vector<double> mlpd;  // index k = number of inputs used, starting at 0
  std::vector<bool> ok;      // false where the submodel fit failed
};

struct Ml2Options {
  int restarts = 2;
  std::uint64_t seed = 0;
};

// Test-set MLPD (in raw target units) of the nested submodels along each
// ordering. Projected mode reuses the supplied chains or projects prefix
// chains from lp; ml2 mode refits each prefix by marginal likelihood.
std::vector<MlpdCurve> evaluate_orderings(const Dataset& train, const Dataset& test,
                                          const LatentPosterior* lp,
                                          const std::vector<OrderingSpec>& orderings,
                                          SubmodelParamMode mode, const Ml2Options& ml2 = {});

// MLPD of a noise-inclusive prediction made on the standardized training
// scale, reported in raw target units.
double test_mlpd_raw(const Dataset& test, const Prediction& pred_standardized);

}  // namespace gpsel
