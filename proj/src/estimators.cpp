#include "placebo/estimators.hpp"

#include <cmath>

#include "placebo/errors.hpp"

namespace placebo {

namespace {

constexpr double kBoundaryTol = 1e-12;

void require_cells(const Dataset& d, bool all_four) {
  const auto counts = d.cell_counts();
  if (counts[3] == 0) {
    throw FitError(errc::empty_cell, "empty cell (1,1)");
  }
  if (all_four) {
    for (int sv = 0; sv <= 1; ++sv) {
      for (int av = 0; av <= 1; ++av) {
        if (counts[static_cast<std::size_t>(2 * sv + av)] == 0) {
          throw FitError(errc::empty_cell,
                         "empty cell (" + std::to_string(sv) + "," +
                             std::to_string(av) + ")");
        }
      }
    }
  }
}

void check_interior(double value, double lo_excl, double hi_excl, Eigen::Index row,
                    const char* name) {
  if (value <= lo_excl + kBoundaryTol || value >= hi_excl - kBoundaryTol) {
    throw FitError(errc::degenerate_weight,
                   std::string("degenerate weight: ") + name + " = " +
                       std::to_string(value) + " at row " + std::to_string(row));
  }
}

void check_below(double value, double hi_excl, Eigen::Index row, const char* name) {
  if (value >= hi_excl - kBoundaryTol) {
    throw FitError(errc::degenerate_weight,
                   std::string("degenerate weight: ") + name + " = " +
                       std::to_string(value) + " at row " + std::to_string(row));
  }
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::reg_naive: return "reg_naive";
    case EstimatorKind::dr_naive: return "dr_naive";
    case EstimatorKind::reg: return "reg";
    case EstimatorKind::ipw: return "ipw";
    case EstimatorKind::ipw_stabilized: return "ipw_stabilized";
    case EstimatorKind::dr: return "dr";
  }
  return "?";
}

EstimatorKind estimator_kind_from_string(const std::string& name) {
  if (name == "reg_naive") return EstimatorKind::reg_naive;
  if (name == "dr_naive") return EstimatorKind::dr_naive;
  if (name == "reg") return EstimatorKind::reg;
  if (name == "ipw") return EstimatorKind::ipw;
  if (name == "ipw_stabilized") return EstimatorKind::ipw_stabilized;
  if (name == "dr") return EstimatorKind::dr;
  throw DataError(errc::invalid_argument, "unknown estimator '" + name + "'");
}

bool needs_outcome_model(EstimatorKind kind) {
  return kind == EstimatorKind::reg || kind == EstimatorKind::dr ||
         kind == EstimatorKind::reg_naive || kind == EstimatorKind::dr_naive;
}

bool needs_propensity_models(EstimatorKind kind) {
  return kind == EstimatorKind::ipw || kind == EstimatorKind::ipw_stabilized ||
         kind == EstimatorKind::dr;
}

Predictions predict_all(const Dataset& d, const NuisanceFits& fits) {
  Predictions out;
  if (fits.mu) {
    out.mu10 = predict_mu_column(*fits.mu, d, 1, 0);
    out.mu01 = predict_mu_column(*fits.mu, d, 0, 1);
    out.mu00 = predict_mu_column(*fits.mu, d, 0, 0);
  }
  if (fits.pis) out.pis = predict_pi_column(*fits.pis, d);
  if (fits.pia) {
    out.pia1 = predict_pi_column(*fits.pia, d, /*s_override=*/1);
    out.pia0 = predict_pi_column(*fits.pia, d, /*s_override=*/0);
  }
  return out;
}

double theta_reg(const Dataset& d, const GlmFit& mu_fit) {
  require_converged(mu_fit, "theta_reg");
  require_cells(d, /*all_four=*/false);
  const Eigen::VectorXd mu11 = predict_mu_column(mu_fit, d, 1, 1);
  const Eigen::VectorXd mu10 = predict_mu_column(mu_fit, d, 1, 0);
  const Eigen::VectorXd mu01 = predict_mu_column(mu_fit, d, 0, 1);
  const Eigen::VectorXd mu00 = predict_mu_column(mu_fit, d, 0, 0);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    if (d.s[i] == 1.0 && d.a[i] == 1.0) {
      acc += d.weights[i] * ((mu11[i] - mu10[i]) - (mu01[i] - mu00[i]));
    }
  }
  return acc / d.n11();
}

double theta_ipw(const Dataset& d, const GlmFit& pis_fit, const GlmFit& pia_fit,
                 bool stabilized) {
  require_converged(pis_fit, "theta_ipw");
  require_converged(pia_fit, "theta_ipw");
  require_cells(d, /*all_four=*/true);

  const Eigen::VectorXd pis = predict_pi_column(pis_fit, d);
  const Eigen::VectorXd pia1 = predict_pi_column(pia_fit, d, 1);
  const Eigen::VectorXd pia0 = predict_pi_column(pia_fit, d, 0);

  if (!stabilized) {
    // raw weighting: every row enters through the same product form
    double acc = 0.0;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      check_below(pis[i], 1.0, i, "pi_s");
      const double pia_own = (d.s[i] == 1.0) ? pia1[i] : pia0[i];
      check_interior(pia_own, 0.0, 1.0, i, "pi_a");
      const double w_s = (d.s[i] - pis[i]) / (1.0 - pis[i]);
      const double w_a = pia1[i] * (d.a[i] - pia_own) / (pia_own * (1.0 - pia_own));
      acc += d.weights[i] * w_s * w_a * d.y[i];
    }
    return acc / d.n11();
  }

  // Normalized form: each of the four cell contributions is averaged with
  // weights summing to one, then combined with signs (+,-,-,+).
  double sum11 = 0.0, w11 = 0.0;
  double sum10 = 0.0, w10 = 0.0;
  double sum01 = 0.0, w01 = 0.0;
  double sum00 = 0.0, w00 = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double wt = d.weights[i];
    if (d.s[i] == 1.0 && d.a[i] == 1.0) {
      sum11 += wt * d.y[i];
      w11 += wt;
    } else if (d.s[i] == 1.0) {
      check_below(pia1[i], 1.0, i, "pi_a(x,1)");
      const double w = wt * pia1[i] / (1.0 - pia1[i]);
      sum10 += w * d.y[i];
      w10 += w;
    } else if (d.a[i] == 1.0) {
      check_below(pis[i], 1.0, i, "pi_s");
      check_interior(pia0[i], 0.0, 1.0, i, "pi_a(x,0)");
      const double w = wt * (pis[i] / (1.0 - pis[i])) * (pia1[i] / pia0[i]);
      sum01 += w * d.y[i];
      w01 += w;
    } else {
      check_below(pis[i], 1.0, i, "pi_s");
      check_below(pia0[i], 1.0, i, "pi_a(x,0)");
      const double w = wt * (pis[i] / (1.0 - pis[i])) * (pia1[i] / (1.0 - pia0[i]));
      sum00 += w * d.y[i];
      w00 += w;
    }
  }
  if (w10 <= 0.0 || w01 <= 0.0 || w00 <= 0.0) {
    throw FitError(errc::degenerate_weight,
                   "normalized weighting has an empty contribution block");
  }
  return sum11 / w11 - sum10 / w10 - sum01 / w01 + sum00 / w00;
}

namespace {

// The four signed residual blocks shared by the doubly robust estimator and
// the influence function. residual_* are (y - mu_sa).
struct DrTerms {
  double sum_treated = 0.0;        // s=1,a=1 block (no weight ratio)
  double sum10 = 0.0, w10 = 0.0;   // s=1,a=0 block
  double sum01 = 0.0, w01 = 0.0;   // s=0,a=1 block
  double sum00 = 0.0, w00 = 0.0;   // s=0,a=0 block
};

DrTerms dr_terms(const Dataset& d, const Predictions& pred) {
  DrTerms t;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double wt = d.weights[i];
    if (d.s[i] == 1.0 && d.a[i] == 1.0) {
      t.sum_treated +=
          wt * (d.y[i] - pred.mu10[i] - pred.mu01[i] + pred.mu00[i]);
    } else if (d.s[i] == 1.0) {
      check_below(pred.pia1[i], 1.0, i, "pi_a(x,1)");
      const double w = wt * pred.pia1[i] / (1.0 - pred.pia1[i]);
      t.sum10 += w * (d.y[i] - pred.mu10[i]);
      t.w10 += w;
    } else if (d.a[i] == 1.0) {
      check_below(pred.pis[i], 1.0, i, "pi_s");
      check_interior(pred.pia0[i], 0.0, 1.0, i, "pi_a(x,0)");
      const double w = wt * (pred.pia1[i] / pred.pia0[i]) *
                       (pred.pis[i] / (1.0 - pred.pis[i]));
      t.sum01 += w * (d.y[i] - pred.mu01[i]);
      t.w01 += w;
    } else {
      check_below(pred.pis[i], 1.0, i, "pi_s");
      check_below(pred.pia0[i], 1.0, i, "pi_a(x,0)");
      const double w = wt * (pred.pia1[i] / (1.0 - pred.pia0[i])) *
                       (pred.pis[i] / (1.0 - pred.pis[i]));
      t.sum00 += w * (d.y[i] - pred.mu00[i]);
      t.w00 += w;
    }
  }
  return t;
}

}  // namespace

double theta_dr(const Dataset& d, const GlmFit& mu_fit, const GlmFit& pis_fit,
                const GlmFit& pia_fit, bool block_normalized) {
  require_converged(mu_fit, "theta_dr");
  require_converged(pis_fit, "theta_dr");
  require_converged(pia_fit, "theta_dr");
  require_cells(d, /*all_four=*/true);

  NuisanceFits fits;
  fits.mu = mu_fit;
  fits.pis = pis_fit;
  fits.pia = pia_fit;
  const Predictions pred = predict_all(d, fits);
  const DrTerms t = dr_terms(d, pred);
  const double n11 = d.n11();

  if (!block_normalized) {
    return (t.sum_treated - t.sum10 - t.sum01 + t.sum00) / n11;
  }
  if (t.w10 <= 0.0 || t.w01 <= 0.0 || t.w00 <= 0.0) {
    throw FitError(errc::degenerate_weight,
                   "block normalization has an empty contribution block");
  }
  return t.sum_treated / n11 - t.sum10 / t.w10 - t.sum01 / t.w01 +
         t.sum00 / t.w00;
}

double theta_reg_naive(const Dataset& d, const GlmFit& mu_fit) {
  require_converged(mu_fit, "theta_reg_naive");
  const Dataset sub = d.primary_subset();
  if (sub.n() == 0) {
    throw FitError(errc::empty_cell, "no primary-sample rows");
  }
  require_cells(sub, /*all_four=*/false);
  // Mean treatment contrast over treated rows; equals the coefficient on the
  // treatment term when the design is additive in it.
  const Eigen::VectorXd mu1 = predict_mu_column(mu_fit, sub, 1, 1);
  const Eigen::VectorXd mu0 = predict_mu_column(mu_fit, sub, 1, 0);
  double acc = 0.0, wsum = 0.0;
  for (Eigen::Index i = 0; i < sub.n(); ++i) {
    if (sub.a[i] == 1.0) {
      acc += sub.weights[i] * (mu1[i] - mu0[i]);
      wsum += sub.weights[i];
    }
  }
  return acc / wsum;
}

double theta_dr_naive(const Dataset& d, const GlmFit& mu_fit, const GlmFit& pia_fit) {
  require_converged(mu_fit, "theta_dr_naive");
  require_converged(pia_fit, "theta_dr_naive");
  const Dataset sub = d.primary_subset();
  if (sub.cell_count(1, 1) == 0 || sub.cell_count(1, 0) == 0) {
    throw FitError(errc::empty_cell, "primary sample lacks a treatment arm");
  }
  const Eigen::VectorXd mu0 = predict_mu_column(mu_fit, sub, 1, 0);
  const Eigen::VectorXd pia = predict_pi_column(pia_fit, sub, 1);
  double acc = 0.0, wsum = 0.0;
  for (Eigen::Index i = 0; i < sub.n(); ++i) {
    const double wt = sub.weights[i];
    const double resid = sub.y[i] - mu0[i];
    if (sub.a[i] == 1.0) {
      acc += wt * resid;
      wsum += wt;
    } else {
      check_below(pia[i], 1.0, i, "pi_a");
      acc -= wt * (pia[i] / (1.0 - pia[i])) * resid;
    }
  }
  return acc / wsum;
}

EifVector eif_values(const Dataset& d, const NuisanceFits& fits, double theta) {
  if (!fits.mu || !fits.pis || !fits.pia) {
    throw DataError(errc::invalid_argument,
                    "influence function needs all three nuisance fits");
  }
  require_converged(*fits.mu, "eif_values");
  require_converged(*fits.pis, "eif_values");
  require_converged(*fits.pia, "eif_values");
  require_cells(d, /*all_four=*/true);

  const Predictions pred = predict_all(d, fits);
  const double lambda = d.n11() / d.weight_total();

  EifVector out;
  out.theta_at = theta;
  out.lambda_hat = lambda;
  out.values.resize(d.n());
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    double v = 0.0;
    if (d.s[i] == 1.0 && d.a[i] == 1.0) {
      v = (d.y[i] - pred.mu10[i] - pred.mu01[i] + pred.mu00[i] - theta) / lambda;
    } else if (d.s[i] == 1.0) {
      check_below(pred.pia1[i], 1.0, i, "pi_a(x,1)");
      v = -(pred.pia1[i] / (1.0 - pred.pia1[i])) * (d.y[i] - pred.mu10[i]) / lambda;
    } else if (d.a[i] == 1.0) {
      check_below(pred.pis[i], 1.0, i, "pi_s");
      check_interior(pred.pia0[i], 0.0, 1.0, i, "pi_a(x,0)");
      v = -(pred.pia1[i] / pred.pia0[i]) * (pred.pis[i] / (1.0 - pred.pis[i])) *
          (d.y[i] - pred.mu01[i]) / lambda;
    } else {
      check_below(pred.pis[i], 1.0, i, "pi_s");
      check_below(pred.pia0[i], 1.0, i, "pi_a(x,0)");
      v = (pred.pia1[i] / (1.0 - pred.pia0[i])) *
          (pred.pis[i] / (1.0 - pred.pis[i])) * (d.y[i] - pred.mu00[i]) / lambda;
    }
    out.values[i] = v;
  }
  return out;
}

PointEstimate estimate_point(const Dataset& d, const EstimatorRecipe& recipe) {
  PointEstimate out;
  const bool naive = recipe.kind == EstimatorKind::reg_naive ||
                     recipe.kind == EstimatorKind::dr_naive;

  if (naive) {
    const Dataset sub = d.primary_subset();
    if (sub.cell_count(1, 1) == 0 || sub.cell_count(1, 0) == 0) {
      throw FitError(errc::empty_cell, "primary sample lacks a treatment arm");
    }
    if (!recipe.mu) {
      throw DataError(errc::invalid_argument, "recipe needs an outcome design");
    }
    out.fits.mu = fit_ols(sub, *recipe.mu, Response::outcome);
    require_converged(*out.fits.mu, "estimate_point");
    if (recipe.kind == EstimatorKind::dr_naive) {
      if (!recipe.pia) {
        throw DataError(errc::invalid_argument,
                        "recipe needs a treatment-propensity design");
      }
      out.fits.pia = fit_logistic(sub, *recipe.pia, Response::treatment);
      require_converged(*out.fits.pia, "estimate_point");
      out.theta = theta_dr_naive(d, *out.fits.mu, *out.fits.pia);
    } else {
      out.theta = theta_reg_naive(d, *out.fits.mu);
    }
    return out;
  }

  require_cells(d, /*all_four=*/true);
  if (needs_outcome_model(recipe.kind)) {
    if (!recipe.mu) {
      throw DataError(errc::invalid_argument, "recipe needs an outcome design");
    }
    out.fits.mu = fit_ols(d, *recipe.mu, Response::outcome);
    require_converged(*out.fits.mu, "estimate_point");
  }
  if (needs_propensity_models(recipe.kind)) {
    if (!recipe.pis || !recipe.pia) {
      throw DataError(errc::invalid_argument, "recipe needs both propensity designs");
    }
    out.fits.pis = fit_logistic(d, *recipe.pis, Response::sample_indicator);
    require_converged(*out.fits.pis, "estimate_point");
    out.fits.pia = fit_logistic(d, *recipe.pia, Response::treatment);
    require_converged(*out.fits.pia, "estimate_point");
  }

  switch (recipe.kind) {
    case EstimatorKind::reg:
      out.theta = theta_reg(d, *out.fits.mu);
      break;
    case EstimatorKind::ipw:
      out.theta = theta_ipw(d, *out.fits.pis, *out.fits.pia, /*stabilized=*/false);
      break;
    case EstimatorKind::ipw_stabilized:
      out.theta = theta_ipw(d, *out.fits.pis, *out.fits.pia, /*stabilized=*/true);
      break;
    case EstimatorKind::dr:
      out.theta = theta_dr(d, *out.fits.mu, *out.fits.pis, *out.fits.pia,
                           recipe.block_normalized_dr);
      break;
    default:
      throw DataError(errc::invalid_argument, "unhandled estimator kind");
  }
  return out;
}

}  // namespace placebo
