#pragma once
// Standard errors and confidence intervals: influence-function plug-in,
// stacked-estimating-equation sandwich, and nonparametric bootstrap.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>

#include "placebo/dataset.hpp"
#include "placebo/estimators.hpp"

namespace placebo {

enum class InferenceMethod { plugin, sandwich, bootstrap };

std::string to_string(InferenceMethod method);
InferenceMethod inference_method_from_string(const std::string& name);

struct EstimateResult {
  double estimate = 0.0;
  double se = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  double alpha = 0.05;
  InferenceMethod method = InferenceMethod::bootstrap;
  EstimatorKind estimator = EstimatorKind::dr;
  long n = 0;
  double n11 = 0.0;
  struct Diagnostics {
    int bootstrap_failures = 0;
    int bootstrap_total = 0;
    // percentile intervals can exclude the point estimate in pathological
    // resamples; flagged rather than silently widened
    bool estimate_outside_ci = false;
  } diagnostics;
};

// Plug-in standard error from influence-function values: the square root of
// their mean square, divided by sqrt(n). Weighted when d carries weights.
double plugin_se(const Eigen::VectorXd& values);
double plugin_se(const EifVector& eif, const Dataset& d);

// ---------------------------------------------------------------------------
// Stacked estimating equations for the doubly robust estimator: the three
// nuisance score blocks plus the influence-function equation for theta,
// stacked into one per-row function psi(o; gamma) whose weighted sum is zero
// at the fitted parameters.

class StackedSystem {
public:
  StackedSystem(const Dataset& d, const NuisanceFits& fits, double theta);

  Eigen::Index dim() const { return dim_; }
  const Eigen::VectorXd& gamma_hat() const { return gamma_hat_; }

  // Weighted mean of psi over the dataset at an arbitrary gamma.
  Eigen::VectorXd mean_psi(const Eigen::VectorXd& gamma) const;

  // n x dim matrix of per-row psi values.
  Eigen::MatrixXd psi_matrix(const Eigen::VectorXd& gamma) const;

  // Outer-product average B and the negative finite-difference Jacobian A.
  Eigen::MatrixXd bread_fd(double step_scale = 1e-6) const;
  Eigen::MatrixXd meat() const;

  // Segment offsets into gamma: [pi_s | pi_a | mu | theta].
  Eigen::Index pis_offset() const { return 0; }
  Eigen::Index pia_offset() const { return pis_dim_; }
  Eigen::Index mu_offset() const { return pis_dim_ + pia_dim_; }
  Eigen::Index theta_index() const { return dim_ - 1; }
  Eigen::Index pis_dim() const { return pis_dim_; }
  Eigen::Index pia_dim() const { return pia_dim_; }
  Eigen::Index mu_dim() const { return mu_dim_; }

private:
  const Dataset& d_;
  double lambda_hat_;
  Eigen::Index pis_dim_, pia_dim_, mu_dim_, dim_;
  Eigen::VectorXd gamma_hat_;
  // precomputed design matrices (observed and counterfactual rows)
  Eigen::MatrixXd ds_, da_obs_, da1_, da0_, dmu_obs_, dmu10_, dmu01_, dmu00_;
};

// Sandwich standard error of theta: sqrt of the theta-diagonal element of
// A^{-1} B A^{-T} / n with A from central finite differences. Throws
// InferenceError when the bread matrix is numerically singular.
double sandwich_se(const Dataset& d, const StackedSystem& system);

// ---------------------------------------------------------------------------
// Bootstrap machinery. Resample indices for replicate b are a pure function
// of (seed, context, b), so results are independent of thread count and are
// shared across every consumer (plain CIs and sensitivity CIs alike).

std::vector<std::int32_t> bootstrap_indices(Eigen::Index n, std::uint64_t seed,
                                            std::uint32_t context, std::uint32_t replicate);

struct ResampleStats {
  Eigen::MatrixXd stats;  // surviving replicates x stat_dim, in replicate order
  int failures = 0;
  int total = 0;
};

// Evaluates fn on each resample; replicates where fn throws a placebo::Error
// (failed refit, empty cell, degenerate weight) are dropped and counted.
ResampleStats bootstrap_statistics(
    const Dataset& d, int b, std::uint64_t seed, std::uint32_t context, int threads,
    int stat_dim, const std::function<void(const Dataset&, double*)>& fn);

struct BootstrapOptions {
  int b = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int threads = 1;
  double max_failure_rate = 0.10;
};

// Full pipeline bootstrap: refits all nuisances and recomputes the estimator
// on each resample; percentile interval at level 1 - alpha.
EstimateResult bootstrap(const Dataset& d, const EstimatorRecipe& recipe,
                         const BootstrapOptions& options);

// One call surface for the CLI: point estimate plus the requested inference.
// plugin and sandwich are defined for the doubly robust estimator only.
EstimateResult estimate_with_inference(const Dataset& d, const EstimatorRecipe& recipe,
                                       InferenceMethod method,
                                       const BootstrapOptions& options);

}  // namespace placebo
