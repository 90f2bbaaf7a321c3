#pragma once
// Partial identification under two sensitivity models. The linear model puts
// interval bounds on linear violations of the placebo-null and
// equi-confounding assumptions; the marginal model bounds the odds ratio by
// which unmeasured confounders may shift sample membership, plus a cap on
// the placebo-sample treatment effect.

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "placebo/dataset.hpp"
#include "placebo/estimators.hpp"
#include "placebo/inference.hpp"

namespace placebo {

struct LinearBox {
  // Range for the equi-confounding violation coefficients (constant and one
  // per covariate)...
  double gamma_lo = 0.0, gamma_hi = 0.0;
  // ...and for the placebo-effect coefficients.
  double lambda_lo = 0.0, lambda_hi = 0.0;
  // Optional per-coordinate ranges; key 0 is the constant, key j >= 1 the
  // j-th covariate.
  std::map<int, std::pair<double, double>> gamma_overrides;
  std::map<int, std::pair<double, double>> lambda_overrides;

  std::pair<double, double> gamma_range(int coord) const;
  std::pair<double, double> lambda_range(int coord) const;
  void validate(Eigen::Index n_covariates) const;
  bool is_zero(Eigen::Index n_covariates) const;
};

struct MarginalParams {
  double gamma = 1.0;   // odds-ratio bound, >= 1
  double lambda = 0.0;  // placebo-effect magnitude bound, >= 0
  void validate() const;
};

struct SensitivityResult {
  double theta_l = 0.0, theta_u = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  double alpha = 0.05;
  std::string model;  // "linear" or "marginal"
  EstimatorKind estimator = EstimatorKind::dr;
  std::optional<LinearBox> box;
  std::optional<MarginalParams> marginal;
  int bootstrap_failures = 0;
  int bootstrap_total = 0;
};

// Exact extrema of the affine sensitivity adjustment over the box: the
// adjusted estimate is separately monotone in every coordinate, so each
// coordinate sits at a box endpoint chosen by the sign of its multiplier.
std::pair<double, double> linear_bounds(double theta_hat, const Dataset& d,
                                        const LinearBox& box);

// Union-style bootstrap interval: per resample, recompute the estimate and
// the box extrema; report the lower quantile of the infima and the upper
// quantile of the suprema.
SensitivityResult linear_ci(const Dataset& d, const EstimatorRecipe& recipe,
                            const LinearBox& box, const BootstrapOptions& options);

// Bound estimates for the marginal model, one of three bases (reg, ipw, dr).
// Requires a nonnegative outcome; no silent shifting is performed.
std::pair<double, double> marginal_bounds(const Dataset& d, const NuisanceFits& fits,
                                          EstimatorKind base,
                                          const MarginalParams& params);

// Normal-approximation interval: bound estimates plus/minus z times the
// bootstrap standard errors of the respective bound statistics.
SensitivityResult marginal_ci(const Dataset& d, const EstimatorRecipe& recipe,
                              const MarginalParams& params,
                              const BootstrapOptions& options);

}  // namespace placebo
