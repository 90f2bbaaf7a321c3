// Command-line surface: estimate / sensitivity / simulate subcommands over
// the placebo-sample estimation library. Every run is fully determined by
// its flags (plus optional key=value config file) and --seed; outputs are
// byte-identical across runs and thread counts.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "placebo/dataset.hpp"
#include "placebo/errors.hpp"
#include "placebo/inference.hpp"
#include "placebo/sensitivity.hpp"
#include "placebo/sim.hpp"

namespace {

using nlohmann::json;
using namespace placebo;

constexpr int kExitData = 2;
constexpr int kExitFit = 3;
constexpr int kExitInference = 4;
constexpr int kExitSkipRate = 5;

struct DataFlags {
  std::string path;
  std::string outcome = "y";
  std::string treatment = "a";
  std::string placebo = "s";
  std::vector<std::string> covariates;
  std::string weight;
};

void add_data_flags(CLI::App* cmd, DataFlags& flags) {
  cmd->add_option("--data", flags.path, "CSV file with a header row")->required();
  cmd->add_option("--outcome", flags.outcome, "outcome column")->capture_default_str();
  cmd->add_option("--treatment", flags.treatment, "treatment column (0/1)")
      ->capture_default_str();
  cmd->add_option("--placebo", flags.placebo,
                  "sample-indicator column (1 = primary, 0 = placebo)")
      ->capture_default_str();
  cmd->add_option("--covariates", flags.covariates, "covariate columns")
      ->required()
      ->delimiter(',');
  cmd->add_option("--weight", flags.weight, "optional frequency-weight column");
}

Dataset load_from_flags(const DataFlags& flags) {
  CsvColumns columns;
  columns.outcome = flags.outcome;
  columns.treatment = flags.treatment;
  columns.placebo = flags.placebo;
  columns.covariates = flags.covariates;
  if (!flags.weight.empty()) columns.weight = flags.weight;
  return load_csv(flags.path, columns);
}

struct DesignFlags {
  std::string mu, pis, pia;
};

void add_design_flags(CLI::App* cmd, DesignFlags& flags) {
  cmd->add_option("--mu-design", flags.mu,
                  "outcome-model terms, e.g. \"1 + X1 + S + A + S:A\" "
                  "(default: 1 + covariates + S + A + S:A)");
  cmd->add_option("--pis-design", flags.pis,
                  "sample-propensity terms (default: 1 + covariates)");
  cmd->add_option("--pia-design", flags.pia,
                  "treatment-propensity terms (default: 1 + covariates + S)");
}

std::string default_mu_design(const std::vector<std::string>& covs) {
  std::string out = "1";
  for (const auto& c : covs) out += " + " + c;
  return out + " + S + A + S:A";
}

std::string default_pis_design(const std::vector<std::string>& covs) {
  std::string out = "1";
  for (const auto& c : covs) out += " + " + c;
  return out;
}

std::string default_pia_design(const std::vector<std::string>& covs) {
  return default_pis_design(covs) + " + S";
}

EstimatorRecipe build_recipe(const Dataset& d, const std::string& estimator,
                             DesignFlags& designs, bool block_normalized) {
  EstimatorRecipe recipe;
  recipe.kind = estimator_kind_from_string(estimator);
  recipe.block_normalized_dr = block_normalized;
  const bool naive = recipe.kind == EstimatorKind::reg_naive ||
                     recipe.kind == EstimatorKind::dr_naive;

  // Naive fits run within s = 1, so their defaults must not reference S.
  const auto& covs = d.covariate_names;
  if (designs.mu.empty()) {
    designs.mu = naive ? default_pis_design(covs) + " + A" : default_mu_design(covs);
  }
  if (designs.pis.empty()) designs.pis = default_pis_design(covs);
  if (designs.pia.empty()) {
    designs.pia = naive ? default_pis_design(covs) : default_pia_design(covs);
  }

  if (needs_outcome_model(recipe.kind)) {
    recipe.mu = DesignSpec::parse(designs.mu, covs, Link::identity);
  }
  if (needs_propensity_models(recipe.kind) ||
      recipe.kind == EstimatorKind::dr_naive) {
    recipe.pia = DesignSpec::parse(designs.pia, covs, Link::logit);
  }
  if (needs_propensity_models(recipe.kind)) {
    recipe.pis = DesignSpec::parse(designs.pis, covs, Link::logit);
  }
  return recipe;
}

json positivity_to_json(const PositivityReport& report) {
  json out;
  out["cells"] = {{"s0_a0", report.cell_counts[0]},
                  {"s0_a1", report.cell_counts[1]},
                  {"s1_a0", report.cell_counts[2]},
                  {"s1_a1", report.cell_counts[3]}};
  out["epsilon"] = report.epsilon;
  out["diagnostic_available"] = report.diagnostic_available;
  if (report.diagnostic_available) {
    out["pi_s_range"] = {report.min_pi_s, report.max_pi_s};
    out["pi_a_range"] = {report.min_pi_a, report.max_pi_a};
    out["flagged_rows"] = report.flagged_rows.size();
  }
  return out;
}

void emit(const json& payload, const std::string& out_path) {
  const std::string text = payload.dump(2) + "\n";
  std::cout << text;
  if (!out_path.empty()) {
    std::ofstream file(out_path);
    if (!file) {
      throw DataError(errc::invalid_argument, "cannot write '" + out_path + "'");
    }
    file << text;
  }
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream file(path);
  if (!file) {
    throw DataError(errc::invalid_argument, "cannot write '" + path + "'");
  }
  file << text;
}

int run_estimate(const DataFlags& data_flags, DesignFlags& designs,
                 const std::string& estimator, bool block_normalized,
                 const std::string& se_method, int boot_reps, double alpha,
                 std::uint64_t seed, int threads, double epsilon,
                 const std::string& out_path) {
  const Dataset d = load_from_flags(data_flags);
  const PositivityReport positivity = positivity_check(d, epsilon);
  if (!positivity.flagged_rows.empty()) {
    std::cerr << "warning: " << positivity.flagged_rows.size()
              << " rows have fitted propensities outside [" << epsilon << ", "
              << 1 - epsilon << "]\n";
  }
  if (!positivity.diagnostic_available) {
    std::cerr << "warning: positivity diagnostic unavailable (fit did not converge)\n";
  }

  const EstimatorRecipe recipe = build_recipe(d, estimator, designs, block_normalized);
  BootstrapOptions options;
  options.b = boot_reps;
  options.alpha = alpha;
  options.seed = seed;
  options.threads = threads;
  const EstimateResult result = estimate_with_inference(
      d, recipe, inference_method_from_string(se_method), options);

  json config;
  config["command"] = "estimate";
  config["data"] = data_flags.path;
  config["outcome"] = data_flags.outcome;
  config["treatment"] = data_flags.treatment;
  config["placebo"] = data_flags.placebo;
  config["covariates"] = data_flags.covariates;
  if (!data_flags.weight.empty()) config["weight"] = data_flags.weight;
  config["estimator"] = estimator;
  config["block_normalized_dr"] = block_normalized;
  config["mu_design"] = designs.mu;
  config["pis_design"] = designs.pis;
  config["pia_design"] = designs.pia;
  config["se"] = se_method;
  config["boot_reps"] = boot_reps;
  config["alpha"] = alpha;
  config["seed"] = seed;
  config["positivity_epsilon"] = epsilon;

  json payload;
  payload["config"] = config;
  payload["result"] = {{"estimate", result.estimate},
                       {"se", result.se},
                       {"ci", {result.ci_lo, result.ci_hi}},
                       {"method", to_string(result.method)},
                       {"estimator", to_string(result.estimator)},
                       {"n", result.n},
                       {"n11", result.n11},
                       {"diagnostics",
                        {{"bootstrap_failures", result.diagnostics.bootstrap_failures},
                         {"bootstrap_total", result.diagnostics.bootstrap_total},
                         {"estimate_outside_ci", result.diagnostics.estimate_outside_ci},
                         {"positivity", positivity_to_json(positivity)}}}};
  emit(payload, out_path);
  return 0;
}

std::pair<double, double> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw DataError(errc::invalid_argument,
                    "range must look like lo:hi, got '" + text + "'");
  }
  return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
}

int coordinate_index(const std::string& name, const std::vector<std::string>& covs) {
  if (name == "1") return 0;
  for (std::size_t j = 0; j < covs.size(); ++j) {
    if (covs[j] == name) return static_cast<int>(j) + 1;
  }
  throw DataError(errc::invalid_argument,
                  "unknown override coordinate '" + name + "' (use 1 or a covariate name)");
}

void parse_overrides(const std::vector<std::string>& specs,
                     const std::vector<std::string>& covs,
                     std::map<int, std::pair<double, double>>& out) {
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      throw DataError(errc::invalid_argument,
                      "override must look like NAME=lo:hi, got '" + spec + "'");
    }
    out[coordinate_index(spec.substr(0, eq), covs)] = parse_range(spec.substr(eq + 1));
  }
}

json sensitivity_to_json(const SensitivityResult& result) {
  json out;
  out["theta_l"] = result.theta_l;
  out["theta_u"] = result.theta_u;
  out["ci"] = {result.ci_lo, result.ci_hi};
  out["model"] = result.model;
  out["estimator"] = to_string(result.estimator);
  if (result.marginal) {
    out["params"] = {{"gamma", result.marginal->gamma},
                     {"lambda", result.marginal->lambda}};
  }
  if (result.box) {
    out["params"] = {{"gamma", {result.box->gamma_lo, result.box->gamma_hi}},
                     {"lambda", {result.box->lambda_lo, result.box->lambda_hi}}};
  }
  out["diagnostics"] = {{"bootstrap_failures", result.bootstrap_failures},
                        {"bootstrap_total", result.bootstrap_total}};
  return out;
}

int run_sensitivity(const DataFlags& data_flags, DesignFlags& designs,
                    const std::string& estimator, const std::string& model,
                    const LinearBox& box_flags,
                    const std::vector<std::string>& gamma_overrides,
                    const std::vector<std::string>& lambda_overrides,
                    double marginal_gamma, double marginal_lambda,
                    const std::vector<double>& gamma_grid,
                    const std::vector<double>& lambda_grid,
                    std::optional<double> shift_outcome, int boot_reps, double alpha,
                    std::uint64_t seed, int threads, const std::string& out_path) {
  Dataset d = load_from_flags(data_flags);
  if (shift_outcome) {
    std::cerr << "warning: shifting every outcome by " << *shift_outcome
              << "; sensitivity bound widths depend on this choice\n";
    d = d.with_shifted_outcome(*shift_outcome);
  }
  const EstimatorRecipe recipe = build_recipe(d, estimator, designs, false);
  BootstrapOptions options;
  options.b = boot_reps;
  options.alpha = alpha;
  options.seed = seed;
  options.threads = threads;

  json config;
  config["command"] = "sensitivity";
  config["data"] = data_flags.path;
  config["estimator"] = estimator;
  config["model"] = model;
  config["mu_design"] = designs.mu;
  config["pis_design"] = designs.pis;
  config["pia_design"] = designs.pia;
  config["boot_reps"] = boot_reps;
  config["alpha"] = alpha;
  config["seed"] = seed;
  if (shift_outcome) config["shift_outcome"] = *shift_outcome;

  if (model == "linear") {
    LinearBox box = box_flags;
    parse_overrides(gamma_overrides, d.covariate_names, box.gamma_overrides);
    parse_overrides(lambda_overrides, d.covariate_names, box.lambda_overrides);
    const SensitivityResult result = linear_ci(d, recipe, box, options);
    json payload;
    config["gamma_range"] = {box.gamma_lo, box.gamma_hi};
    config["lambda_range"] = {box.lambda_lo, box.lambda_hi};
    payload["config"] = config;
    payload["result"] = sensitivity_to_json(result);
    emit(payload, out_path);
    return 0;
  }
  if (model != "marginal") {
    throw DataError(errc::invalid_argument, "model must be linear or marginal");
  }

  const bool grid = !gamma_grid.empty() || !lambda_grid.empty();
  if (!grid) {
    MarginalParams params{marginal_gamma, marginal_lambda};
    const SensitivityResult result = marginal_ci(d, recipe, params, options);
    json payload;
    config["gamma"] = marginal_gamma;
    config["lambda"] = marginal_lambda;
    payload["config"] = config;
    payload["result"] = sensitivity_to_json(result);
    emit(payload, out_path);
    return 0;
  }

  std::vector<double> gammas = gamma_grid.empty()
                                   ? std::vector<double>{marginal_gamma}
                                   : gamma_grid;
  std::vector<double> lambdas = lambda_grid.empty()
                                    ? std::vector<double>{marginal_lambda}
                                    : lambda_grid;
  std::string csv = "gamma,lambda,theta_l,theta_u,ci_lo,ci_hi\n";
  char buf[256];
  for (double g : gammas) {
    for (double l : lambdas) {
      const SensitivityResult result = marginal_ci(d, recipe, {g, l}, options);
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", g, l,
                    result.theta_l, result.theta_u, result.ci_lo, result.ci_hi);
      csv += buf;
    }
  }
  std::cout << csv;
  if (!out_path.empty()) write_text(csv, out_path);
  return 0;
}

int run_simulate(const std::vector<std::string>& scenario_names, int reps,
                 Eigen::Index n, int boot_reps, double alpha, std::uint64_t seed,
                 int threads, double trim, const std::string& out_csv,
                 const std::string& out_table, const std::string& dump_estimates) {
  sim::StudySpec spec;
  spec.scenarios.clear();
  for (const auto& name : scenario_names) {
    if (name == "all") {
      spec.scenarios = sim::all_scenarios();
      break;
    }
    spec.scenarios.push_back(sim::scenario_from_string(name));
  }
  spec.reps = reps;
  spec.n = n;
  spec.boot_b = boot_reps;
  spec.alpha = alpha;
  spec.seed = seed;
  spec.threads = threads;
  spec.trim_fraction = trim;
  spec.keep_estimates = !dump_estimates.empty();

  const sim::SimReport report = sim::run_study(spec);
  std::cout << report.to_table();
  if (!out_csv.empty()) write_text(report.to_csv(), out_csv);
  if (!out_table.empty()) write_text(report.to_table(), out_table);
  if (!dump_estimates.empty()) write_text(report.raw_to_csv(), dump_estimates);

  if (report.max_skip_rate() > 0.05) {
    std::cerr << "error: replicate skip rate " << report.max_skip_rate()
              << " exceeds 5%\n";
    return kExitSkipRate;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Placebo-sample estimation of treated-group effects"};
  app.require_subcommand(1);
  // config goes before the subcommand and uses a [subcommand] section:
  //   placebo --config run.ini estimate ...
  app.set_config("--config", "", "key = value config file; flags win");

  const int default_threads =
      std::max(1u, std::thread::hardware_concurrency());

  // estimate ---------------------------------------------------------------
  auto* est = app.add_subcommand("estimate", "point estimate with SE and CI");
  DataFlags est_data;
  DesignFlags est_designs;
  std::string est_kind = "dr", est_se = "bootstrap", est_out;
  bool est_block = false;
  int est_boot = 1000, est_threads = default_threads;
  double est_alpha = 0.05, est_eps = 0.01;
  std::uint64_t est_seed = 0;
  add_data_flags(est, est_data);
  add_design_flags(est, est_designs);
  est->add_option("--estimator", est_kind,
                  "reg_naive | dr_naive | reg | ipw | ipw_stabilized | dr")
      ->capture_default_str();
  est->add_flag("--block-normalized-dr", est_block,
                "normalize each dr weight block separately");
  est->add_option("--se", est_se, "plugin | sandwich | bootstrap")
      ->capture_default_str();
  est->add_option("--boot-reps", est_boot, "bootstrap replicates")
      ->capture_default_str();
  est->add_option("--alpha", est_alpha, "two-sided CI level is 1 - alpha")
      ->capture_default_str();
  est->add_option("--seed", est_seed, "random seed")->envname("PLACEBO_SEED");
  est->add_option("--threads", est_threads, "worker threads")
      ->envname("PLACEBO_THREADS");
  est->add_option("--positivity-epsilon", est_eps, "diagnostic threshold")
      ->capture_default_str();
  est->add_option("--out", est_out, "also write the JSON result here");

  // sensitivity --------------------------------------------------------------
  auto* sens = app.add_subcommand("sensitivity", "partial identification bounds");
  DataFlags sens_data;
  DesignFlags sens_designs;
  std::string sens_kind = "dr", sens_model = "marginal", sens_out;
  LinearBox sens_box;
  std::vector<std::string> sens_gamma_over, sens_lambda_over;
  double sens_gamma = 1.0, sens_lambda = 0.0;
  std::vector<double> sens_gamma_grid, sens_lambda_grid;
  double sens_shift_value = 0.0;
  int sens_boot = 1000, sens_threads = default_threads;
  double sens_alpha = 0.05;
  std::uint64_t sens_seed = 0;
  add_data_flags(sens, sens_data);
  add_design_flags(sens, sens_designs);
  sens->add_option("--estimator", sens_kind, "reg | ipw | dr")->capture_default_str();
  sens->add_option("--model", sens_model, "linear | marginal")->capture_default_str();
  sens->add_option("--gamma-l", sens_box.gamma_lo,
                   "linear: lower bound for confounding-difference coefficients");
  sens->add_option("--gamma-u", sens_box.gamma_hi, "linear: upper bound");
  sens->add_option("--lambda-l", sens_box.lambda_lo,
                   "linear: lower bound for placebo-effect coefficients");
  sens->add_option("--lambda-u", sens_box.lambda_hi, "linear: upper bound");
  sens->add_option("--gamma-override", sens_gamma_over,
                   "linear: per-coordinate range NAME=lo:hi (NAME is 1 or a covariate)");
  sens->add_option("--lambda-override", sens_lambda_over,
                   "linear: per-coordinate range NAME=lo:hi");
  sens->add_option("--gamma", sens_gamma, "marginal: odds-ratio bound >= 1")
      ->capture_default_str();
  sens->add_option("--lambda", sens_lambda, "marginal: placebo-effect bound >= 0")
      ->capture_default_str();
  sens->add_option("--gamma-grid", sens_gamma_grid, "marginal: sweep of gamma values")
      ->delimiter(',');
  sens->add_option("--lambda-grid", sens_lambda_grid, "marginal: sweep of lambda values")
      ->delimiter(',');
  auto* shift_opt =
      sens->add_option("--shift-outcome", sens_shift_value,
                       "add this constant to every outcome before the analysis");
  sens->add_option("--boot-reps", sens_boot, "bootstrap replicates")
      ->capture_default_str();
  sens->add_option("--alpha", sens_alpha, "two-sided CI level is 1 - alpha")
      ->capture_default_str();
  sens->add_option("--seed", sens_seed, "random seed")->envname("PLACEBO_SEED");
  sens->add_option("--threads", sens_threads, "worker threads")
      ->envname("PLACEBO_THREADS");
  sens->add_option("--out", sens_out, "also write the result here");

  // simulate -----------------------------------------------------------------
  auto* simu = app.add_subcommand("simulate", "factorial Monte-Carlo study");
  std::vector<std::string> sim_scenarios{"I"};
  int sim_reps = 500, sim_boot = 200, sim_threads = default_threads;
  long long sim_n = 1000;
  double sim_alpha = 0.05, sim_trim = 0.01;
  std::uint64_t sim_seed = 0;
  std::string sim_out_csv, sim_out_table, sim_dump;
  simu->add_option("--scenario", sim_scenarios, "I..VIII or all")
      ->capture_default_str()
      ->delimiter(',');
  simu->add_option("--reps", sim_reps, "Monte-Carlo replicates")->capture_default_str();
  simu->add_option("--n", sim_n, "sample size per replicate")->capture_default_str();
  simu->add_option("--boot-reps", sim_boot, "bootstrap replicates per CI (0 = none)")
      ->capture_default_str();
  simu->add_option("--alpha", sim_alpha, "CI level is 1 - alpha")->capture_default_str();
  simu->add_option("--seed", sim_seed, "random seed")->envname("PLACEBO_SEED");
  simu->add_option("--threads", sim_threads, "worker threads")
      ->envname("PLACEBO_THREADS");
  simu->add_option("--trim", sim_trim, "total tail fraction trimmed from the bias")
      ->capture_default_str();
  simu->add_option("--out-csv", sim_out_csv, "write the report CSV here");
  simu->add_option("--out-table", sim_out_table, "write the aligned table here");
  simu->add_option("--dump-estimates", sim_dump, "write raw replicate estimates here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitData;
  }

  try {
    if (est->parsed()) {
      return run_estimate(est_data, est_designs, est_kind, est_block, est_se,
                          est_boot, est_alpha, est_seed, est_threads, est_eps,
                          est_out);
    }
    if (sens->parsed()) {
      std::optional<double> shift;
      if (shift_opt->count() > 0) shift = sens_shift_value;
      return run_sensitivity(sens_data, sens_designs, sens_kind, sens_model,
                             sens_box, sens_gamma_over, sens_lambda_over,
                             sens_gamma, sens_lambda, sens_gamma_grid,
                             sens_lambda_grid, shift, sens_boot, sens_alpha,
                             sens_seed, sens_threads, sens_out);
    }
    if (simu->parsed()) {
      return run_simulate(sim_scenarios, sim_reps, static_cast<Eigen::Index>(sim_n),
                          sim_boot, sim_alpha, sim_seed, sim_threads, sim_trim,
                          sim_out_csv, sim_out_table, sim_dump);
    }
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return kExitFit;
  } catch (const InferenceError& e) {
    std::cerr << "inference error: " << e.what() << "\n";
    return kExitInference;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
