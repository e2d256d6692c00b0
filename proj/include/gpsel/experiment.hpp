#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpsel/csv.hpp"
#include "gpsel/dataset.hpp"
#include "gpsel/hmc.hpp"
#include "gpsel/report.hpp"
#include "gpsel/toy.hpp"

namespace gpsel {

// Desk-scale defaults; the published protocol (50 splits, 100 samples,
// 200 replications) is reachable by overriding them.
struct ExperimentConfig {
  std::string data_path;            // CSV experiments
  std::optional<ToySpec> toy_spec;  // synthetic experiments (fresh data per split)
  CsvRecipe recipe;

  int n_train = 300;
  int n_splits = 10;
  int max_steps = -1;  // -1: all inputs, capped at 20
  int ml2_restarts = 2;
  SamplerConfig sampler{.n_samples = 30, .n_warmup = 200, .leapfrog_steps = 20,
                        .step_size = 0.05, .target_accept = 0.8, .seed = 0};
  std::uint64_t seed = 0;
  bool record_timings = false;

  void validate() const;
};

// Stable per-task seed derivation.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

// MLPD of the full model on the test set with the predictive density averaged
// over the hyperparameter samples.
double full_model_reference_mlpd(const Dataset& train, const Dataset& test,
                                 const std::vector<HyperSample>& samples);

// Repeatedly generates the sinusoid benchmark, fits by marginal likelihood,
// and records relevance by inverse length-scale and by leave-input-out
// projection error. Scores are averaged over replications and scaled to a
// maximum of one.
ResultReport run_toy_ard_experiment(int reps, const ToySpec& spec, int restarts,
                                    std::uint64_t seed);

// Per split: full-model sampling, integrated posterior, forward search and
// inverse-length-scale orderings, and their test MLPD curves in projected and
// refitted parameter modes, plus the full-model reference level.
ResultReport run_benchmark(const ExperimentConfig& cfg);

}  // namespace gpsel
