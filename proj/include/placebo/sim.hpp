#pragma once
// Monte-Carlo harness: the eight-scenario factorial data-generating process,
// the nine estimator/specification combinations, and bias / median-SE /
// coverage summaries with symmetric tail trimming.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "placebo/dataset.hpp"
#include "placebo/design.hpp"
#include "placebo/estimators.hpp"

namespace placebo::sim {

enum class Scenario { i = 1, ii, iii, iv, v, vi, vii, viii };

struct Factors {
  bool heterogeneous_confounder;  // confounder probability depends on sign(x1+x2)
  bool sample_specific_outcome;   // outcome slope on x3 terms switches with s
  bool noisy_effect;              // treatment effect drawn around 1 instead of exactly 1
};

Factors scenario_factors(Scenario scenario);
std::string to_string(Scenario scenario);
Scenario scenario_from_string(const std::string& name);
std::vector<Scenario> all_scenarios();

struct ScenarioConfig {
  Scenario scenario = Scenario::i;
  Eigen::Index n = 1000;
  std::uint64_t seed = 0;
  std::uint32_t replicate = 0;  // stream index; studies use one per replicate
};

// Deviations from the default process, used by designed-violation studies.
struct GenerateOptions {
  double confounder_effect = 2.0;
  // Adds s*a*(delta0 + delta'x) to the baseline outcome mean: a linear
  // violation of equi-confounding with known coefficients.
  double violation_delta0 = 0.0;
  Eigen::Vector3d violation_delta = Eigen::Vector3d::Zero();
  // Constant treatment effect in the placebo sample (violates the null).
  double placebo_effect = 0.0;
  // Scales P(u=1 | s=1, a, x) relative to the s=0 value, bounding the
  // density ratio the marginal model reasons about.
  double u_primary_prob_scale = 1.0;
  // Added to every baseline mean; use to keep outcomes nonnegative.
  double outcome_shift = 0.0;
};

struct GeneratedData {
  Dataset data;
  Eigen::VectorXd u;   // latent confounder (not part of data)
  Eigen::VectorXd y0;  // latent control potential outcome
  Eigen::VectorXd y1;  // latent treated potential outcome
  double theta0 = 1.0;
};

GeneratedData generate(const ScenarioConfig& config,
                       const GenerateOptions& options = {});

// Simulation design specs over covariates (x1, x2, x3). Misspecification
// drops every term containing the x2*x3 product.
DesignSpec sim_mu_design(bool correct);
DesignSpec sim_pis_design(bool correct);
DesignSpec sim_pia_design(bool correct);
DesignSpec sim_naive_mu_design();
DesignSpec sim_naive_pia_design();

// One estimator/specification combination of the factorial study.
struct SimCombo {
  EstimatorKind kind;
  std::string spec_label;
  bool mu_correct = true;
  bool pi_correct = true;
};

// The nine rows: two naive estimators, reg (correct/incorrect outcome model),
// stabilized ipw (correct/incorrect propensities), dr (all correct, only
// outcome correct, only propensities correct).
const std::vector<SimCombo>& default_combos();

struct MetricSummary {
  double bias = 0.0;
  double median_se = 0.0;
  double coverage = 0.0;
  int reps_used = 0;
  int trimmed = 0;
};

// Trimmed-mean bias (total trim = ceil(trim_fraction * m), split across the
// two tails of the sorted estimates, upper tail taking the odd one), median
// of the estimated SEs, and untrimmed CI coverage of theta0.
MetricSummary metrics(const std::vector<double>& estimates,
                      const std::vector<double>& ses,
                      const std::vector<bool>& covered, double theta0,
                      double trim_fraction = 0.01);

struct StudySpec {
  std::vector<Scenario> scenarios{Scenario::i};
  Eigen::Index n = 1000;
  int reps = 500;
  int boot_b = 200;  // 0 disables interval computation (coverage = NaN)
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int threads = 1;
  double trim_fraction = 0.01;
  bool keep_estimates = false;  // retain per-replicate rows for dumping
};

struct SimRow {
  std::string scenario;
  std::string estimator;
  std::string spec;
  double bias = 0.0;
  double median_se = 0.0;
  double coverage = 0.0;
  int reps_used = 0;
  int trimmed = 0;
  int skipped = 0;
};

struct RawRecord {
  std::string scenario;
  std::string estimator;
  std::string spec;
  int replicate = 0;
  double estimate = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct SimReport {
  std::vector<SimRow> rows;
  std::vector<RawRecord> raw;

  std::string to_csv() const;
  std::string to_table() const;  // human-readable, scenario column blocks
  std::string raw_to_csv() const;
  double max_skip_rate() const;
};

SimReport run_study(const StudySpec& spec);

}  // namespace placebo::sim
