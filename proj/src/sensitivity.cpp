#include "placebo/sensitivity.hpp"

#include <algorithm>
#include <cmath>

#include "placebo/errors.hpp"
#include "placebo/stats.hpp"

namespace placebo {

namespace {

constexpr double kBoundaryTol = 1e-12;

// Weighted covariate means over the treated primary stratum.
Eigen::VectorXd treated_covariate_means(const Dataset& d) {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(d.p());
  double wsum = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    if (d.s[i] == 1.0 && d.a[i] == 1.0) {
      sums += d.weights[i] * d.x.row(i).transpose();
      wsum += d.weights[i];
    }
  }
  if (wsum <= 0.0) {
    throw FitError(errc::empty_cell, "no treated primary rows");
  }
  return sums / wsum;
}

void require_nonnegative_outcome(const Dataset& d) {
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    if (d.y[i] < 0.0) {
      throw DataError(errc::negative_outcome,
                      "marginal model requires nonnegative outcomes (row " +
                          std::to_string(i) + "); shift the outcome explicitly");
    }
  }
}

void check_positive(double v, Eigen::Index row, const char* name) {
  if (v <= kBoundaryTol) {
    throw FitError(errc::degenerate_weight,
                   std::string("degenerate weight: ") + name + " at row " +
                       std::to_string(row));
  }
}

}  // namespace

std::pair<double, double> LinearBox::gamma_range(int coord) const {
  const auto it = gamma_overrides.find(coord);
  if (it != gamma_overrides.end()) return it->second;
  return {gamma_lo, gamma_hi};
}

std::pair<double, double> LinearBox::lambda_range(int coord) const {
  const auto it = lambda_overrides.find(coord);
  if (it != lambda_overrides.end()) return it->second;
  return {lambda_lo, lambda_hi};
}

void LinearBox::validate(Eigen::Index n_covariates) const {
  for (int coord = 0; coord <= static_cast<int>(n_covariates); ++coord) {
    const auto [glo, ghi] = gamma_range(coord);
    const auto [llo, lhi] = lambda_range(coord);
    if (!(glo <= ghi) || !(llo <= lhi)) {
      throw DataError(errc::invalid_argument,
                      "sensitivity box has an inverted range at coordinate " +
                          std::to_string(coord));
    }
  }
  for (const auto& [coord, range] : gamma_overrides) {
    if (coord < 0 || coord > n_covariates) {
      throw DataError(errc::invalid_argument, "override coordinate out of range");
    }
    (void)range;
  }
  for (const auto& [coord, range] : lambda_overrides) {
    if (coord < 0 || coord > n_covariates) {
      throw DataError(errc::invalid_argument, "override coordinate out of range");
    }
    (void)range;
  }
}

bool LinearBox::is_zero(Eigen::Index n_covariates) const {
  for (int coord = 0; coord <= static_cast<int>(n_covariates); ++coord) {
    const auto [glo, ghi] = gamma_range(coord);
    const auto [llo, lhi] = lambda_range(coord);
    if (glo != 0.0 || ghi != 0.0 || llo != 0.0 || lhi != 0.0) return false;
  }
  return true;
}

void MarginalParams::validate() const {
  if (!(gamma >= 1.0)) {
    throw DataError(errc::invalid_argument, "marginal gamma must be >= 1");
  }
  if (!(lambda >= 0.0)) {
    throw DataError(errc::invalid_argument, "marginal lambda must be >= 0");
  }
}

std::pair<double, double> linear_bounds(double theta_hat, const Dataset& d,
                                        const LinearBox& box) {
  box.validate(d.p());
  const Eigen::VectorXd xbar = treated_covariate_means(d);

  // adjustment = -(delta0 - lambda0) - sum_j (delta_j - lambda_j) * xbar_j;
  // maximize/minimize coordinate-wise.
  double sup = theta_hat, inf = theta_hat;
  for (int coord = 0; coord <= static_cast<int>(d.p()); ++coord) {
    const double mult = (coord == 0) ? 1.0 : xbar[coord - 1];
    const auto [glo, ghi] = box.gamma_range(coord);
    const auto [llo, lhi] = box.lambda_range(coord);
    // the delta coefficient enters with -mult, the lambda one with +mult
    if (mult >= 0.0) {
      sup += -mult * glo + mult * lhi;
      inf += -mult * ghi + mult * llo;
    } else {
      sup += -mult * ghi + mult * llo;
      inf += -mult * glo + mult * lhi;
    }
  }
  return {inf, sup};
}

SensitivityResult linear_ci(const Dataset& d, const EstimatorRecipe& recipe,
                            const LinearBox& box, const BootstrapOptions& options) {
  if (options.b < 50) {
    throw DataError(errc::invalid_argument, "bootstrap needs at least 50 replicates");
  }
  box.validate(d.p());
  const PointEstimate point = estimate_point(d, recipe);
  const auto [lo, hi] = linear_bounds(point.theta, d, box);

  const ResampleStats stats = bootstrap_statistics(
      d, options.b, options.seed, /*context=*/0, options.threads, /*stat_dim=*/2,
      [&](const Dataset& resampled, double* out) {
        const double theta_star = estimate_point(resampled, recipe).theta;
        const auto [inf_star, sup_star] = linear_bounds(theta_star, resampled, box);
        out[0] = inf_star;
        out[1] = sup_star;
      });
  const double failure_rate =
      static_cast<double>(stats.failures) / static_cast<double>(stats.total);
  if (failure_rate > options.max_failure_rate) {
    throw InferenceError(errc::bootstrap_unstable,
                         "bootstrap unstable: " + std::to_string(stats.failures) +
                             " of " + std::to_string(stats.total) +
                             " replicates failed");
  }

  std::vector<double> infs(stats.stats.rows()), sups(stats.stats.rows());
  for (Eigen::Index i = 0; i < stats.stats.rows(); ++i) {
    infs[static_cast<std::size_t>(i)] = stats.stats(i, 0);
    sups[static_cast<std::size_t>(i)] = stats.stats(i, 1);
  }
  std::sort(infs.begin(), infs.end());
  std::sort(sups.begin(), sups.end());

  SensitivityResult result;
  result.theta_l = lo;
  result.theta_u = hi;
  result.ci_lo = stats::quantile_sorted(infs, options.alpha / 2.0);
  result.ci_hi = stats::quantile_sorted(sups, 1.0 - options.alpha / 2.0);
  result.alpha = options.alpha;
  result.model = "linear";
  result.estimator = recipe.kind;
  result.box = box;
  result.bootstrap_failures = stats.failures;
  result.bootstrap_total = stats.total;
  return result;
}

namespace {

// The two weighted placebo-sample correction sums shared by the ipw and dr
// bound formulas: treated placebo rows and control placebo rows, each scaled
// by the sample- and treatment-propensity odds factors. values = y for the
// ipw base, y - mu for the dr base.
struct PlaceboSums {
  double treated = 0.0;  // (1-s) a block
  double control = 0.0;  // (1-s)(1-a) block
};

PlaceboSums placebo_weighted_sums(const Dataset& d, const Predictions& pred,
                                  const Eigen::VectorXd* residual_mu01,
                                  const Eigen::VectorXd* residual_mu00) {
  PlaceboSums sums;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    if (d.s[i] == 1.0) continue;
    check_positive(1.0 - pred.pis[i], i, "1 - pi_s");
    const double odds_s = pred.pis[i] / (1.0 - pred.pis[i]);
    if (d.a[i] == 1.0) {
      check_positive(pred.pia0[i], i, "pi_a(x,0)");
      const double w = d.weights[i] * odds_s * pred.pia1[i] / pred.pia0[i];
      const double v = residual_mu01 ? d.y[i] - (*residual_mu01)[i] : d.y[i];
      sums.treated += w * v;
    } else {
      check_positive(1.0 - pred.pia0[i], i, "1 - pi_a(x,0)");
      const double w = d.weights[i] * odds_s * pred.pia1[i] / (1.0 - pred.pia0[i]);
      const double v = residual_mu00 ? d.y[i] - (*residual_mu00)[i] : d.y[i];
      sums.control += w * v;
    }
  }
  return sums;
}

// Weighted means of the counterfactual placebo outcome models over treated
// primary rows.
std::pair<double, double> treated_mu_means(const Dataset& d, const Predictions& pred) {
  double m01 = 0.0, m00 = 0.0, wsum = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    if (d.s[i] == 1.0 && d.a[i] == 1.0) {
      m01 += d.weights[i] * pred.mu01[i];
      m00 += d.weights[i] * pred.mu00[i];
      wsum += d.weights[i];
    }
  }
  return {m01 / wsum, m00 / wsum};
}

}  // namespace

std::pair<double, double> marginal_bounds(const Dataset& d, const NuisanceFits& fits,
                                          EstimatorKind base,
                                          const MarginalParams& params) {
  params.validate();
  require_nonnegative_outcome(d);
  const double n11 = d.n11();
  const double g = params.gamma;
  const double g_inv_m1 = 1.0 / g - 1.0;
  const double g_m1 = g - 1.0;
  const double cap = params.lambda;

  double base_theta = 0.0;
  // term1 multiplies the gamma factors applied to the treated-placebo sums,
  // term0 the control-placebo sums
  double term1 = 0.0, term0 = 0.0;

  switch (base) {
    case EstimatorKind::reg: {
      if (!fits.mu) {
        throw DataError(errc::invalid_argument, "reg base needs the outcome fit");
      }
      base_theta = theta_reg(d, *fits.mu);
      const Predictions pred = predict_all(d, fits);
      const auto [m01, m00] = treated_mu_means(d, pred);
      term1 = m01;
      term0 = m00;
      break;
    }
    case EstimatorKind::ipw: {
      if (!fits.pis || !fits.pia) {
        throw DataError(errc::invalid_argument, "ipw base needs both propensity fits");
      }
      base_theta = theta_ipw(d, *fits.pis, *fits.pia, /*stabilized=*/false);
      const Predictions pred = predict_all(d, fits);
      const PlaceboSums sums = placebo_weighted_sums(d, pred, nullptr, nullptr);
      term1 = sums.treated / n11;
      term0 = sums.control / n11;
      break;
    }
    case EstimatorKind::dr: {
      if (!fits.mu || !fits.pis || !fits.pia) {
        throw DataError(errc::invalid_argument, "dr base needs all three fits");
      }
      base_theta = theta_dr(d, *fits.mu, *fits.pis, *fits.pia);
      const Predictions pred = predict_all(d, fits);
      const auto [m01, m00] = treated_mu_means(d, pred);
      const PlaceboSums sums =
          placebo_weighted_sums(d, pred, &pred.mu01, &pred.mu00);
      term1 = m01 + sums.treated / n11;
      term0 = m00 + sums.control / n11;
      break;
    }
    default:
      throw DataError(errc::invalid_argument,
                      "marginal bounds are defined for reg, ipw, and dr bases");
  }

  const double upper = base_theta + cap - g_inv_m1 * term1 + g_m1 * term0;
  const double lower = base_theta - cap - g_m1 * term1 + g_inv_m1 * term0;
  if (lower > upper + 1e-9) {
    throw FitError(errc::degenerate_weight,
                   "marginal bounds inverted (negative fitted outcome means)");
  }
  return {lower, upper};
}

SensitivityResult marginal_ci(const Dataset& d, const EstimatorRecipe& recipe,
                              const MarginalParams& params,
                              const BootstrapOptions& options) {
  if (options.b < 50) {
    throw DataError(errc::invalid_argument, "bootstrap needs at least 50 replicates");
  }
  params.validate();
  if (recipe.kind != EstimatorKind::reg && recipe.kind != EstimatorKind::ipw &&
      recipe.kind != EstimatorKind::dr) {
    throw DataError(errc::invalid_argument,
                    "marginal bounds are defined for reg, ipw, and dr bases");
  }
  const PointEstimate point = estimate_point(d, recipe);
  const auto [lo, hi] = marginal_bounds(d, point.fits, recipe.kind, params);

  const ResampleStats stats = bootstrap_statistics(
      d, options.b, options.seed, /*context=*/0, options.threads, /*stat_dim=*/2,
      [&](const Dataset& resampled, double* out) {
        const PointEstimate p = estimate_point(resampled, recipe);
        const auto [l, u] = marginal_bounds(resampled, p.fits, recipe.kind, params);
        out[0] = l;
        out[1] = u;
      });
  const double failure_rate =
      static_cast<double>(stats.failures) / static_cast<double>(stats.total);
  if (failure_rate > options.max_failure_rate) {
    throw InferenceError(errc::bootstrap_unstable,
                         "bootstrap unstable: " + std::to_string(stats.failures) +
                             " of " + std::to_string(stats.total) +
                             " replicates failed");
  }

  std::vector<double> lows(stats.stats.rows()), highs(stats.stats.rows());
  for (Eigen::Index i = 0; i < stats.stats.rows(); ++i) {
    lows[static_cast<std::size_t>(i)] = stats.stats(i, 0);
    highs[static_cast<std::size_t>(i)] = stats.stats(i, 1);
  }
  const double z = stats::z_two_sided(options.alpha);

  SensitivityResult result;
  result.theta_l = lo;
  result.theta_u = hi;
  result.ci_lo = lo - z * stats::sample_sd(lows);
  result.ci_hi = hi + z * stats::sample_sd(highs);
  result.alpha = options.alpha;
  result.model = "marginal";
  result.estimator = recipe.kind;
  result.marginal = params;
  result.bootstrap_failures = stats.failures;
  result.bootstrap_total = stats.total;
  return result;
}

}  // namespace placebo
