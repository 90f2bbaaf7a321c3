#pragma once
// Point estimators of the treated-group effect in the primary sample:
// two naive single-sample estimators and three placebo-sample estimators
// (outcome regression, inverse probability weighting, doubly robust),
// plus the per-row influence-function values behind the doubly robust one.

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "placebo/dataset.hpp"
#include "placebo/glm.hpp"

namespace placebo {

enum class EstimatorKind {
  reg_naive,       // outcome regression within s = 1 only
  dr_naive,        // treated-group AIPW within s = 1 only
  reg,             // placebo-sample outcome regression
  ipw,             // placebo-sample IPW, raw weights
  ipw_stabilized,  // placebo-sample IPW, block-normalized weights
  dr,              // placebo-sample doubly robust
};

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(const std::string& name);

bool needs_outcome_model(EstimatorKind kind);
bool needs_propensity_models(EstimatorKind kind);

// The fitted nuisance models an estimator draws on. For the naive kinds,
// mu and pia are fit on the s = 1 stratum.
struct NuisanceFits {
  std::optional<GlmFit> mu;
  std::optional<GlmFit> pis;
  std::optional<GlmFit> pia;
};

// Row-level fitted values shared by the placebo-sample estimators:
// counterfactual outcome means and the two propensities.
struct Predictions {
  Eigen::VectorXd mu10, mu01, mu00;  // mu(s,a,x) at (1,0), (0,1), (0,0)
  Eigen::VectorXd pis;               // P(s=1 | x)
  Eigen::VectorXd pia1, pia0;        // P(a=1 | x, s) at s = 1, s = 0
};

Eigen::VectorXd mu_columns_needed(const GlmFit& mu_fit, const Dataset& d);
Predictions predict_all(const Dataset& d, const NuisanceFits& fits);

// Outcome-regression estimator: average of the between-sample difference in
// treatment contrasts over treated primary rows.
double theta_reg(const Dataset& d, const GlmFit& mu_fit);

// IPW estimator; stabilized = true normalizes each of the four weight blocks
// to mean one before differencing.
double theta_ipw(const Dataset& d, const GlmFit& pis_fit, const GlmFit& pia_fit,
                 bool stabilized);

// Doubly robust estimator (closed form of the influence-function zero).
// block_normalized replaces the common treated-stratum denominator with
// per-block weight-sum normalization.
double theta_dr(const Dataset& d, const GlmFit& mu_fit, const GlmFit& pis_fit,
                const GlmFit& pia_fit, bool block_normalized = false);

// Naive estimators computed within the s = 1 stratum of d. The fits must
// have been computed on d.primary_subset().
double theta_reg_naive(const Dataset& d, const GlmFit& mu_fit);
double theta_dr_naive(const Dataset& d, const GlmFit& mu_fit, const GlmFit& pia_fit);

struct EifVector {
  Eigen::VectorXd values;  // per-row influence function at (theta_at, fits)
  double theta_at = 0.0;
  double lambda_hat = 0.0;  // weighted share of the treated primary stratum
};

// Per-row influence-function values at an arbitrary theta. Their weighted
// mean vanishes at theta = theta_dr.
EifVector eif_values(const Dataset& d, const NuisanceFits& fits, double theta);

// A full estimation recipe: which estimator plus which nuisance designs.
struct EstimatorRecipe {
  EstimatorKind kind = EstimatorKind::dr;
  std::optional<DesignSpec> mu;
  std::optional<DesignSpec> pis;
  std::optional<DesignSpec> pia;
  bool block_normalized_dr = false;
};

struct PointEstimate {
  double theta = 0.0;
  NuisanceFits fits;
};

// Fits the recipe's nuisance models on d (naive kinds fit on the primary
// stratum) and evaluates the estimator. Throws FitError on non-convergence,
// empty required cells, or degenerate weights.
PointEstimate estimate_point(const Dataset& d, const EstimatorRecipe& recipe);

}  // namespace placebo
