#include "gpsel/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "gpsel/errors.hpp"
#include "gpsel/linalg.hpp"
#include "gpsel/parallel.hpp"
#include "gpsel/search.hpp"
#include "gpsel/version.hpp"

namespace gpsel {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TraceRecord trace_record(const SearchTrace& trace, int split, bool with_timings) {
  TraceRecord rec;
  rec.split = split;
  for (const auto& s : trace.steps) {
    rec.added_inputs.push_back(s.added_input);
    rec.divergences.push_back(s.predictive_divergence);
    rec.posterior_kls.push_back(s.submodel.posterior_kl);
    if (with_timings) rec.wall_time_s.push_back(s.wall_time_s);
  }
  rec.warnings = trace.warnings;
  return rec;
}

std::string mode_name(SubmodelParamMode mode) {
  return mode == SubmodelParamMode::kProjected ? "projected" : "ml2";
}

// Mean and normal-approximation 95% interval per position, ignoring NaNs.
nlohmann::json summarize_curves(const std::vector<CurveRecord>& curves) {
  std::map<std::string, std::vector<const CurveRecord*>> by_method;
  for (const auto& c : curves) by_method[c.method].push_back(&c);

  nlohmann::json out = nlohmann::json::array();
  for (const auto& [method, group] : by_method) {
    std::size_t len = 0;
    for (const auto* c : group) len = std::max(len, c->mlpd.size());
    std::vector<double> mean(len, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> lo(len, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> hi(len, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < len; ++k) {
      std::vector<double> vals;
      for (const auto* c : group) {
        if (k < c->mlpd.size() && c->ok[k] && std::isfinite(c->mlpd[k])) vals.push_back(c->mlpd[k]);
      }
      if (vals.empty()) continue;
      double m = 0.0;
      for (double v : vals) m += v;
      m /= static_cast<double>(vals.size());
      double var = 0.0;
      for (double v : vals) var += (v - m) * (v - m);
      var = vals.size() > 1 ? var / static_cast<double>(vals.size() - 1) : 0.0;
      const double half = 1.96 * std::sqrt(var / static_cast<double>(vals.size()));
      mean[k] = m;
      lo[k] = m - half;
      hi[k] = m + half;
    }
    out.push_back({{"method", method}, {"mean", mean}, {"lo", lo}, {"hi", hi},
                   {"n_curves", group.size()}});
  }
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (data_path.empty() == !toy_spec.has_value()) {
    throw InvalidArgument("experiment: exactly one of data_path and toy_spec must be set");
  }
  if (toy_spec) toy_spec->validate();
  if (n_splits < 1) throw InvalidArgument("experiment: n_splits must be >= 1");
  if (!data_path.empty() && n_train < 2) throw InvalidArgument("experiment: n_train must be >= 2");
  if (ml2_restarts < 1) throw InvalidArgument("experiment: ml2_restarts must be >= 1");
  sampler.validate();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 over a stream/index tag; cheap and collision-resistant enough.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream * 0x100000001ull + index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double full_model_reference_mlpd(const Dataset& train, const Dataset& test,
                                 const std::vector<HyperSample>& samples) {
  if (samples.empty()) throw InvalidArgument("reference mlpd: no samples");
  const Eigen::Index m = test.y.size();
  const double y_scale = test.standardization.y_scale;

  // log of the sample-averaged predictive density, accumulated per point.
  Eigen::MatrixXd logp(m, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const HyperParams h = unpack_sample(samples[s].params, train.n_inputs());
    const double noise_var = sample_noise_var(samples[s].params);
    const Prediction pred = predict(train, h, noise_var, test.x, true);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double var = pred.cov(i, i);
      const double r = test.y[i] - pred.mean[i];
      logp(i, static_cast<Eigen::Index>(s)) = -0.5 * (kLog2Pi + std::log(var)) - 0.5 * r * r / var;
    }
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double mx = logp.row(i).maxCoeff();
    const double mix = mx + std::log((logp.row(i).array() - mx).exp().mean());
    total += mix;
  }
  // Shift to raw target units.
  return total / static_cast<double>(m) - std::log(y_scale);
}

ResultReport run_toy_ard_experiment(int reps, const ToySpec& spec, int restarts,
                                    std::uint64_t seed) {
  if (reps < 1) throw InvalidArgument("toy experiment: reps must be >= 1");
  spec.validate();

  const int d = spec.n_inputs + spec.n_noise_inputs;
  std::vector<Eigen::VectorXd> ard_scores(static_cast<std::size_t>(reps));
  std::vector<Eigen::VectorXd> lio_scores(static_cast<std::size_t>(reps));
  std::vector<char> failed(static_cast<std::size_t>(reps), 0);
  std::vector<std::string> failures;

  parallel_for(reps, [&](int r) {
    try {
      ToySpec rep_spec = spec;
      rep_spec.seed = derive_seed(seed, 1, static_cast<std::uint64_t>(r));
      auto [train, test] = gen_toy(rep_spec);
      const FitResult fit = fit_ml2(train, restarts, derive_seed(seed, 2, static_cast<std::uint64_t>(r)));
      ard_scores[static_cast<std::size_t>(r)] = ard_rank(fit.hyper, false).scores;
      const LatentPosterior lp = latent_posterior(train, fit.hyper, fit.noise_var);
      lio_scores[static_cast<std::size_t>(r)] = leave_input_out(lp, train, false).scores;
    } catch (const Error&) {
      failed[static_cast<std::size_t>(r)] = 1;
    }
  });

  std::vector<Eigen::VectorXd> ard_ok, lio_ok;
  for (int r = 0; r < reps; ++r) {
    if (failed[static_cast<std::size_t>(r)]) {
      failures.push_back("replication " + std::to_string(r) + " failed");
      continue;
    }
    ard_ok.push_back(ard_scores[static_cast<std::size_t>(r)]);
    lio_ok.push_back(lio_scores[static_cast<std::size_t>(r)]);
  }
  if (static_cast<int>(failures.size()) * 5 > reps) {
    throw ExperimentError("toy experiment: more than 20% of replications failed");
  }

  auto normalized_mean = [&](const std::vector<Eigen::VectorXd>& scores) {
    Eigen::VectorXd mean = pairwise_sum(scores) / static_cast<double>(scores.size());
    const double mx = mean.maxCoeff();
    if (mx > 0.0) mean /= mx;
    return mean;
  };
  const Eigen::VectorXd ard_mean = normalized_mean(ard_ok);
  const Eigen::VectorXd lio_mean = normalized_mean(lio_ok);

  ResultReport report;
  report.schema_version = kReportSchemaVersion;
  report.software_version = std::string("gpsel ") + kVersion;
  report.config = {{"experiment", "toy_ard"},
                   {"reps", reps},
                   {"n", spec.n},
                   {"n_inputs", spec.n_inputs},
                   {"n_noise_inputs", spec.n_noise_inputs},
                   {"noise_sd", spec.noise_sd},
                   {"restarts", restarts},
                   {"seed", seed}};
  report.rankings.push_back(
      {"ard", -1, {ard_mean.data(), ard_mean.data() + d}, true});
  report.rankings.push_back(
      {"lio", -1, {lio_mean.data(), lio_mean.data() + d}, true});
  for (std::size_t r = 0, kept = 0; r < static_cast<std::size_t>(reps); ++r) {
    if (failed[r]) continue;
    report.rankings.push_back({"ard", static_cast<int>(r),
                               {ard_ok[kept].data(), ard_ok[kept].data() + d}, false});
    report.rankings.push_back({"lio", static_cast<int>(r),
                               {lio_ok[kept].data(), lio_ok[kept].data() + d}, false});
    ++kept;
  }
  report.diagnostics = {{"failures", failures}};
  report.summary = nlohmann::json::object();
  return report;
}

ResultReport run_benchmark(const ExperimentConfig& cfg) {
  cfg.validate();

  std::optional<Dataset> full_data;
  if (!cfg.data_path.empty()) full_data = load_csv(cfg.data_path, cfg.recipe).dataset;

  struct SplitOutcome {
    std::vector<RankingRecord> rankings;
    std::vector<CurveRecord> curves;
    std::vector<TraceRecord> traces;
    std::optional<ReferenceMlpd> reference;
    nlohmann::json diagnostics;
    bool failed = false;
    std::string failure;
  };
  std::vector<SplitOutcome> outcomes(static_cast<std::size_t>(cfg.n_splits));

  parallel_for(cfg.n_splits, [&](int s) {
    SplitOutcome& out = outcomes[static_cast<std::size_t>(s)];
    try {
      const auto t0 = std::chrono::steady_clock::now();
      Dataset train, test;
      if (full_data) {
        std::tie(train, test) = split(*full_data, cfg.n_train, derive_seed(cfg.seed, 10, static_cast<std::uint64_t>(s)));
      } else {
        ToySpec spec = *cfg.toy_spec;
        spec.seed = derive_seed(cfg.seed, 10, static_cast<std::uint64_t>(s));
        std::tie(train, test) = gen_toy(spec);
      }
      const int n_inputs = train.n_inputs();
      const int max_steps =
          cfg.max_steps > 0 ? std::min(cfg.max_steps, n_inputs) : std::min(n_inputs, 20);

      const FitResult fit =
          fit_ml2(train, cfg.ml2_restarts, derive_seed(cfg.seed, 11, static_cast<std::uint64_t>(s)));

      SamplerConfig sampler = cfg.sampler;
      sampler.seed = derive_seed(cfg.seed, 12, static_cast<std::uint64_t>(s));
      const HmcResult hmc = hmc_sample(train, sampler, fit.hyper, fit.noise_var);
      const LatentPosterior lp = integrate_latent(train, hmc.samples);

      const RelevanceRanking ard = ard_rank(fit.hyper, true);
      std::vector<int> ard_order = ranking_order(ard);
      ard_order.resize(static_cast<std::size_t>(max_steps));

      const SearchTrace trace = forward_search(lp, train, max_steps);

      std::vector<OrderingSpec> orderings;
      {
        OrderingSpec forward{"forward", trace.ordering(), {}};
        for (const auto& step : trace.steps) forward.chain.push_back(step.submodel);
        orderings.push_back(std::move(forward));
        orderings.push_back({"ard", ard_order, {}});
      }

      const Ml2Options ml2{cfg.ml2_restarts, derive_seed(cfg.seed, 13, static_cast<std::uint64_t>(s))};
      for (const auto mode : {SubmodelParamMode::kProjected, SubmodelParamMode::kMl2}) {
        for (auto& curve : evaluate_orderings(train, test, &lp, orderings, mode, ml2)) {
          out.curves.push_back(
              {curve.name + "/" + mode_name(mode), s, curve.mlpd, curve.ok});
        }
      }

      out.rankings.push_back({"ard", s,
                              {ard.scores.data(), ard.scores.data() + n_inputs},
                              ard.normalized});
      RelevanceRanking fwd;
      fwd.method = RelevanceRanking::kForward;
      fwd.scores = Eigen::VectorXd::Zero(n_inputs);
      const auto order = trace.ordering();
      for (std::size_t pos = 0; pos < order.size(); ++pos) {
        fwd.scores[order[pos]] = static_cast<double>(n_inputs - static_cast<int>(pos));
      }
      out.rankings.push_back({"forward", s,
                              {fwd.scores.data(), fwd.scores.data() + n_inputs},
                              false});

      out.traces.push_back(trace_record(trace, s, cfg.record_timings));
      out.reference = ReferenceMlpd{s, full_model_reference_mlpd(train, test, hmc.samples)};
      out.diagnostics = {{"split", s},
                         {"acceptance_rate", hmc.diagnostics.acceptance_rate},
                         {"step_size", hmc.diagnostics.adapted_step_size},
                         {"divergent", hmc.diagnostics.n_divergent},
                         {"out_of_bounds", hmc.diagnostics.n_out_of_bounds},
                         {"ml2_log_marginal", fit.log_marginal}};
      if (cfg.record_timings) out.diagnostics["wall_time_s"] = seconds_since(t0);
    } catch (const Error& e) {
      out.failed = true;
      out.failure = e.what();
    }
  });

  ResultReport report;
  report.schema_version = kReportSchemaVersion;
  report.software_version = std::string("gpsel ") + kVersion;
  report.config = {{"experiment", "benchmark"},
                   {"data_path", cfg.data_path},
                   {"n_train", cfg.n_train},
                   {"n_splits", cfg.n_splits},
                   {"max_steps", cfg.max_steps},
                   {"ml2_restarts", cfg.ml2_restarts},
                   {"hmc_samples", cfg.sampler.n_samples},
                   {"hmc_warmup", cfg.sampler.n_warmup},
                   {"leapfrog_steps", cfg.sampler.leapfrog_steps},
                   {"seed", cfg.seed}};
  if (cfg.toy_spec) {
    report.config["toy"] = {{"n", cfg.toy_spec->n},
                            {"n_inputs", cfg.toy_spec->n_inputs},
                            {"n_noise_inputs", cfg.toy_spec->n_noise_inputs},
                            {"noise_sd", cfg.toy_spec->noise_sd}};
  }

  int failures = 0;
  nlohmann::json diag = nlohmann::json::array();
  for (auto& out : outcomes) {
    if (out.failed) {
      ++failures;
      diag.push_back({{"failure", out.failure}});
      continue;
    }
    for (auto& x : out.rankings) report.rankings.push_back(std::move(x));
    for (auto& x : out.curves) report.curves.push_back(std::move(x));
    for (auto& x : out.traces) report.traces.push_back(std::move(x));
    if (out.reference) report.reference_mlpd.push_back(*out.reference);
    diag.push_back(std::move(out.diagnostics));
  }
  if (failures * 5 > cfg.n_splits) {
    throw ExperimentError("benchmark: more than 20% of splits failed");
  }
  report.diagnostics = std::move(diag);
  report.summary = summarize_curves(report.curves);
  return report;
}

}  // namespace gpsel
