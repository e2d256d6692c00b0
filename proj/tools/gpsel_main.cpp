// Command-line front end: fits full models, runs the relevance experiments,
// and serializes reports for external plotting.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gpsel/csv.hpp"
#include "gpsel/errors.hpp"
#include "gpsel/experiment.hpp"
#include "gpsel/gp.hpp"
#include "gpsel/report.hpp"
#include "gpsel/search.hpp"
#include "gpsel/toy.hpp"
#include "gpsel/version.hpp"

namespace {

using gpsel::Dataset;

struct DataOptions {
  std::string data_path;
  std::string target;
  std::string recipe_path;
  int toy_n = 0;  // nonzero selects the synthetic benchmark
  int toy_inputs = 8;
  int toy_noise_inputs = 0;
  double toy_noise_sd = 0.3;
};

void add_data_options(CLI::App* cmd, DataOptions* opts) {
  cmd->add_option("--data", opts->data_path, "CSV file with a header row");
  cmd->add_option("--target", opts->target, "target column name");
  cmd->add_option("--recipe", opts->recipe_path, "JSON preprocessing recipe");
  cmd->add_option("--toy-n", opts->toy_n, "use the sinusoid benchmark with this many training points");
  cmd->add_option("--toy-inputs", opts->toy_inputs, "signal inputs for the sinusoid benchmark");
  cmd->add_option("--toy-noise-inputs", opts->toy_noise_inputs, "pure-noise inputs to append");
  cmd->add_option("--toy-noise-sd", opts->toy_noise_sd, "noise level of the sinusoid benchmark");
}

gpsel::ToySpec toy_spec_from(const DataOptions& opts, std::uint64_t seed) {
  gpsel::ToySpec spec;
  spec.n = opts.toy_n;
  spec.n_inputs = opts.toy_inputs;
  spec.n_noise_inputs = opts.toy_noise_inputs;
  spec.noise_sd = opts.toy_noise_sd;
  spec.seed = seed;
  return spec;
}

gpsel::CsvRecipe recipe_from(const DataOptions& opts) {
  gpsel::CsvRecipe recipe;
  if (!opts.recipe_path.empty()) {
    recipe = gpsel::load_recipe(opts.recipe_path);
    if (!opts.target.empty()) recipe.target = opts.target;
  } else {
    if (opts.target.empty()) {
      throw gpsel::InvalidArgument("either --target or --recipe is required with --data");
    }
    recipe.target = opts.target;
  }
  return recipe;
}

// Train set (plus test set when the source provides one).
std::pair<Dataset, std::optional<Dataset>> load_data(const DataOptions& opts, std::uint64_t seed,
                                                     int n_train) {
  if (opts.toy_n > 0) {
    auto [train, test] = gpsel::gen_toy(toy_spec_from(opts, seed));
    return {std::move(train), std::move(test)};
  }
  if (opts.data_path.empty()) {
    throw gpsel::InvalidArgument("either --data or --toy-n is required");
  }
  Dataset d = gpsel::load_csv(opts.data_path, recipe_from(opts)).dataset;
  if (n_train > 0 && n_train < d.n()) {
    auto [train, test] = gpsel::split(d, n_train, seed);
    return {std::move(train), std::move(test)};
  }
  return {std::move(d), std::nullopt};
}

void print_fit(const Dataset& d, const gpsel::FitResult& fit) {
  std::printf("log marginal likelihood: %.17g\n", fit.log_marginal);
  std::printf("noise_var: %.17g\n", fit.noise_var);
  std::printf("const_var: %.17g\n", fit.hyper.const_var());
  std::printf("magnitude: %.17g\n", fit.hyper.magnitude());
  for (int j = 0; j < fit.hyper.n_active(); ++j) {
    std::printf("lengthscale[%s]: %.17g\n",
                d.feature_names[static_cast<std::size_t>(fit.hyper.active_inputs[j])].c_str(),
                std::exp(fit.hyper.log_lengthscales[j]));
  }
}

int run(int argc, char** argv) {
  CLI::App app{std::string("gpsel ") + gpsel::kVersion +
               " - projection predictive input selection for GP regression"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int n_train = 0;
  int splits = 10;
  int samples = 30;
  int max_steps = -1;
  int restarts = 2;
  std::string out_path;
  bool timings = false;
  app.add_option("--seed", seed, "random seed")->capture_default_str();

  DataOptions data_opts;

  auto* fit_cmd = app.add_subcommand("fit", "fit the full model and print its hyperparameters");
  add_data_options(fit_cmd, &data_opts);
  fit_cmd->add_option("--n-train", n_train, "restrict fitting to a random training subset");
  fit_cmd->add_option("--restarts", restarts, "optimizer restarts")->capture_default_str();
  fit_cmd->add_option("--out", out_path, "write the fitted model as JSON");

  auto* toy_cmd = app.add_subcommand("toy", "replicate the sinusoid relevance experiment");
  int toy_reps = 20;
  toy_cmd->add_option("--reps", toy_reps, "data replications")->capture_default_str();
  add_data_options(toy_cmd, &data_opts);
  toy_cmd->add_option("--restarts", restarts, "optimizer restarts")->capture_default_str();
  toy_cmd->add_option("--out", out_path, "report path");

  auto* lio_cmd = app.add_subcommand("lio", "leave-input-out relevance from a full-model fit");
  add_data_options(lio_cmd, &data_opts);
  lio_cmd->add_option("--n-train", n_train, "restrict to a random training subset");
  lio_cmd->add_option("--restarts", restarts, "optimizer restarts")->capture_default_str();
  lio_cmd->add_option("--out", out_path, "report path");

  auto* select_cmd = app.add_subcommand("select", "forward search, printing the trace");
  add_data_options(select_cmd, &data_opts);
  select_cmd->add_option("--n-train", n_train, "restrict to a random training subset");
  select_cmd->add_option("--samples", samples, "hyperparameter samples (0 uses the point estimate)")
      ->capture_default_str();
  select_cmd->add_option("--max-steps", max_steps, "inputs to add (-1: all, capped at 20)");
  select_cmd->add_option("--restarts", restarts, "optimizer restarts")->capture_default_str();
  select_cmd->add_option("--out", out_path, "report path");

  auto* bench_cmd = app.add_subcommand("bench", "full benchmark over random splits");
  add_data_options(bench_cmd, &data_opts);
  bench_cmd->add_option("--n-train", n_train, "training points per split");
  bench_cmd->add_option("--splits", splits, "random splits")->capture_default_str();
  bench_cmd->add_option("--samples", samples, "hyperparameter samples per split")->capture_default_str();
  bench_cmd->add_option("--max-steps", max_steps, "inputs to add (-1: all, capped at 20)");
  bench_cmd->add_option("--restarts", restarts, "optimizer restarts")->capture_default_str();
  bench_cmd->add_option("--out", out_path, "report path")->required();
  bench_cmd->add_flag("--timings", timings, "record wall-clock timings (breaks byte-identical reruns)");

  auto* report_cmd = app.add_subcommand("report", "re-render the flat CSV from a saved report");
  std::string in_path, csv_path;
  report_cmd->add_option("--in", in_path, "saved report")->required();
  report_cmd->add_option("--out", csv_path, "CSV output path")->required();

  CLI11_PARSE(app, argc, argv);

  if (fit_cmd->parsed()) {
    auto [train, test] = load_data(data_opts, seed, n_train);
    const gpsel::FitResult fit = gpsel::fit_ml2(train, restarts, seed);
    print_fit(train, fit);
    if (!out_path.empty()) {
      nlohmann::json j{{"schema_version", gpsel::kReportSchemaVersion},
                       {"software_version", std::string("gpsel ") + gpsel::kVersion},
                       {"log_marginal", fit.log_marginal},
                       {"noise_var", fit.noise_var},
                       {"log_const_var", fit.hyper.log_const_var},
                       {"log_magnitude", fit.hyper.log_magnitude},
                       {"log_lengthscales",
                        std::vector<double>(fit.hyper.log_lengthscales.data(),
                                            fit.hyper.log_lengthscales.data() +
                                                fit.hyper.log_lengthscales.size())},
                       {"feature_names", train.feature_names},
                       {"converged", fit.converged}};
      std::ofstream out(out_path);
      if (!out) throw gpsel::IoError("cannot write " + out_path);
      out << j.dump(2) << "\n";
    }
    return 0;
  }

  if (toy_cmd->parsed()) {
    gpsel::ToySpec spec = toy_spec_from(data_opts, seed);
    if (data_opts.toy_n <= 0) spec.n = 300;
    gpsel::ResultReport report = gpsel::run_toy_ard_experiment(toy_reps, spec, restarts, seed);
    for (const auto& r : report.rankings) {
      if (r.split != -1) continue;
      std::printf("%s:", r.method.c_str());
      for (double s : r.scores) std::printf(" %.4f", s);
      std::printf("\n");
    }
    if (!out_path.empty()) gpsel::emit_report(report, out_path);
    return 0;
  }

  if (lio_cmd->parsed() || select_cmd->parsed()) {
    auto [train, test] = load_data(data_opts, seed, n_train);
    const gpsel::FitResult fit = gpsel::fit_ml2(train, restarts, gpsel::derive_seed(seed, 21, 0));
    gpsel::LatentPosterior lp;
    nlohmann::json diag = nlohmann::json::object();
    if (select_cmd->parsed() && samples > 0) {
      gpsel::SamplerConfig sampler;
      sampler.n_samples = samples;
      sampler.seed = gpsel::derive_seed(seed, 22, 0);
      const gpsel::HmcResult hmc = gpsel::hmc_sample(train, sampler, fit.hyper, fit.noise_var);
      lp = gpsel::integrate_latent(train, hmc.samples);
      diag = {{"acceptance_rate", hmc.diagnostics.acceptance_rate},
              {"step_size", hmc.diagnostics.adapted_step_size}};
    } else {
      lp = gpsel::latent_posterior(train, fit.hyper, fit.noise_var);
    }

    gpsel::ResultReport report;
    report.schema_version = gpsel::kReportSchemaVersion;
    report.software_version = std::string("gpsel ") + gpsel::kVersion;
    report.diagnostics = diag;
    report.summary = nlohmann::json::object();

    if (lio_cmd->parsed()) {
      const gpsel::RelevanceRanking lio = gpsel::leave_input_out(lp, train);
      std::printf("input,score\n");
      for (int j = 0; j < train.n_inputs(); ++j) {
        std::printf("%s,%.17g\n", train.feature_names[static_cast<std::size_t>(j)].c_str(),
                    lio.scores[j]);
      }
      report.config = {{"experiment", "lio"}, {"seed", seed}};
      report.rankings.push_back({"lio", -1,
                                 {lio.scores.data(), lio.scores.data() + train.n_inputs()},
                                 lio.normalized});
    } else {
      const int steps = max_steps > 0 ? std::min(max_steps, train.n_inputs())
                                      : std::min(train.n_inputs(), 20);
      const gpsel::SearchTrace trace = gpsel::forward_search(lp, train, steps);
      std::printf("step,input,divergence\n");
      for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const auto& s = trace.steps[i];
        const std::string name =
            s.added_input < 0 ? "-" : train.feature_names[static_cast<std::size_t>(s.added_input)];
        std::printf("%zu,%s,%.17g\n", i, name.c_str(), s.predictive_divergence);
      }
      report.config = {{"experiment", "select"}, {"seed", seed}, {"samples", samples},
                       {"max_steps", steps}};
      gpsel::TraceRecord rec;
      rec.split = 0;
      for (const auto& s : trace.steps) {
        rec.added_inputs.push_back(s.added_input);
        rec.divergences.push_back(s.predictive_divergence);
        rec.posterior_kls.push_back(s.submodel.posterior_kl);
      }
      rec.warnings = trace.warnings;
      report.traces.push_back(std::move(rec));
    }
    if (!out_path.empty()) gpsel::emit_report(report, out_path);
    return 0;
  }

  if (bench_cmd->parsed()) {
    gpsel::ExperimentConfig cfg;
    if (data_opts.toy_n > 0) {
      cfg.toy_spec = toy_spec_from(data_opts, 0);
    } else {
      if (data_opts.data_path.empty()) {
        throw gpsel::InvalidArgument("bench needs --data or --toy-n");
      }
      cfg.data_path = data_opts.data_path;
      cfg.recipe = recipe_from(data_opts);
      if (n_train > 0) cfg.n_train = n_train;
    }
    cfg.n_splits = splits;
    cfg.sampler.n_samples = samples;
    cfg.max_steps = max_steps;
    cfg.ml2_restarts = restarts;
    cfg.seed = seed;
    cfg.record_timings = timings;
    gpsel::ResultReport report = gpsel::run_benchmark(cfg);
    gpsel::emit_report(report, out_path);
    std::printf("report written to %s (%zu curves, %zu splits ok)\n", out_path.c_str(),
                report.curves.size(), report.reference_mlpd.size());
    return 0;
  }

  if (report_cmd->parsed()) {
    gpsel::ResultReport report = gpsel::load_report(in_path);
    gpsel::write_curves_csv(report, csv_path);
    std::printf("wrote %s\n", csv_path.c_str());
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const gpsel::Error& e) {
    nlohmann::json err{{"error", "gpsel"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", "internal"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 2;
  }
}
