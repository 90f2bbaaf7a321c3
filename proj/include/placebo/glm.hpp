#pragma once
// Weighted GLM fitting for the three nuisance models: least squares for the
// outcome mean, IRLS logistic regression for the two propensities. Fits
// expose per-row score contributions so estimating equations can be stacked
// for the sandwich variance.

#include <Eigen/Dense>

#include "placebo/dataset.hpp"
#include "placebo/design.hpp"

namespace placebo {

enum class Response { outcome, treatment, sample_indicator };

struct GlmFit {
  DesignSpec spec;
  Response response = Response::outcome;
  Eigen::VectorXd coefficients;
  bool converged = false;
  int iterations = 0;
  // Logistic deviance after each IRLS iteration (empty for least squares).
  std::vector<double> deviance_path;

  // Wraps externally supplied coefficients (e.g. known truth) as a usable fit.
  static GlmFit from_coefficients(DesignSpec spec, Response response,
                                  Eigen::VectorXd coefficients);
};

const Eigen::VectorXd& response_vector(const Dataset& d, Response response);

// Weighted least squares via column-pivoted QR; throws FitError naming the
// collinear term on rank deficiency.
GlmFit fit_ols(const Dataset& d, const DesignSpec& spec,
               Response response = Response::outcome);

// IRLS with step-halving on deviance increase; at most 100 iterations.
// converged = false on separation-like degeneracy (fitted probabilities
// pinned at 0/1) or when the score tolerance is not met.
GlmFit fit_logistic(const Dataset& d, const DesignSpec& spec, Response response);

// Counterfactual outcome-mean prediction: (s, a) substituted into every
// S/A-bearing term. Requires a converged fit.
double predict_mu(const GlmFit& fit, int s_val, int a_val,
                  const Eigen::RowVectorXd& xrow);

// Fitted probability, with S substituted for treatment-propensity
// evaluation; s_val is ignored by designs without S terms.
double predict_pi(const GlmFit& fit, const Eigen::RowVectorXd& xrow,
                  double s_val = 0.0);

// Column of counterfactual predictions over a whole dataset.
Eigen::VectorXd predict_mu_column(const GlmFit& fit, const Dataset& d, int s_val,
                                  int a_val);
Eigen::VectorXd predict_pi_column(const GlmFit& fit, const Dataset& d,
                                  int s_override = -1);

// Per-row estimating-function contributions w_i * d_i * (response_i - fit_i),
// an n x k matrix whose column sums vanish at the solution.
Eigen::MatrixXd score_matrix(const GlmFit& fit, const Dataset& d);

// Weighted logistic log-likelihood for a coefficient vector (used by the
// finite-difference checks).
double logistic_loglik(const Dataset& d, const DesignSpec& spec, Response response,
                       const Eigen::VectorXd& coefficients);

void require_converged(const GlmFit& fit, const char* what);

}  // namespace placebo
