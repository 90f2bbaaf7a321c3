#include "placebo/glm.hpp"

#include <cmath>

#include "placebo/errors.hpp"
#include "placebo/stats.hpp"

namespace placebo {

namespace {

constexpr int kMaxIterations = 100;
constexpr double kScoreTol = 1e-8;     // on max |score| / total weight
constexpr double kPinnedProb = 1e-13;  // separation signature
constexpr double kRankTol = 1e-10;

DesignRole role_for(Response response) {
  switch (response) {
    case Response::outcome: return DesignRole::outcome_mu;
    case Response::sample_indicator: return DesignRole::propensity_s;
    case Response::treatment: return DesignRole::propensity_a;
  }
  return DesignRole::outcome_mu;
}

void check_rank(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr,
                const DesignSpec& spec, const Dataset& d) {
  const Eigen::Index k = spec.size();
  if (qr.rank() == k) return;
  // first dependent column in pivot order
  const auto perm = qr.colsPermutation().indices();
  const Eigen::Index bad = perm[qr.rank()];
  throw FitError(errc::rank_deficient,
                 "design is rank deficient; collinear term '" +
                     term_to_string(spec.terms[static_cast<std::size_t>(bad)],
                                    d.covariate_names) +
                     "' (column " + std::to_string(bad) + ")");
}

}  // namespace

GlmFit GlmFit::from_coefficients(DesignSpec spec, Response response,
                                 Eigen::VectorXd coefficients) {
  if (spec.size() != coefficients.size()) {
    throw DataError(errc::shape_mismatch, "coefficient count does not match design");
  }
  GlmFit fit;
  fit.spec = std::move(spec);
  fit.response = response;
  fit.coefficients = std::move(coefficients);
  fit.converged = true;
  return fit;
}

const Eigen::VectorXd& response_vector(const Dataset& d, Response response) {
  switch (response) {
    case Response::outcome: return d.y;
    case Response::treatment: return d.a;
    case Response::sample_indicator: return d.s;
  }
  return d.y;
}

GlmFit fit_ols(const Dataset& d, const DesignSpec& spec, Response response) {
  spec.validate(d.p(), role_for(response));
  if (spec.link != Link::identity) {
    throw DataError(errc::invalid_argument, "fit_ols requires the identity link");
  }
  const Eigen::VectorXd& z = response_vector(d, response);
  const Eigen::MatrixXd design = spec.matrix(d);
  const Eigen::VectorXd root_w = d.weights.array().sqrt();

  Eigen::MatrixXd scaled = root_w.asDiagonal() * design;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  qr.setThreshold(kRankTol);
  check_rank(qr, spec, d);

  GlmFit fit;
  fit.spec = spec;
  fit.response = response;
  fit.coefficients = qr.solve((root_w.array() * z.array()).matrix());
  fit.converged = true;
  fit.iterations = 1;
  return fit;
}

GlmFit fit_logistic(const Dataset& d, const DesignSpec& spec, Response response) {
  spec.validate(d.p(), role_for(response));
  if (spec.link != Link::logit) {
    throw DataError(errc::invalid_argument, "fit_logistic requires the logit link");
  }
  if (response == Response::outcome) {
    throw DataError(errc::invalid_argument,
                    "logistic fits are for the binary s/a responses");
  }
  const Eigen::VectorXd& z = response_vector(d, response);
  const Eigen::MatrixXd design = spec.matrix(d);
  const Eigen::Index n = d.n();
  const Eigen::Index k = spec.size();
  const double total_weight = d.weights.sum();

  GlmFit fit;
  fit.spec = spec;
  fit.response = response;
  fit.coefficients = Eigen::VectorXd::Zero(k);

  auto deviance_at = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = design * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      ll += d.weights[i] * (z[i] * eta[i] - stats::log1pexp(eta[i]));
    }
    return -2.0 * ll;
  };

  Eigen::VectorXd eta(n), prob(n), irls_w(n), residual(n);
  double deviance = deviance_at(fit.coefficients);
  fit.deviance_path.push_back(deviance);
  bool pinned = false;
  bool singular = false;
  double score_max = 0.0;

  // Iterate until the score is at machine level; quadratic convergence means
  // one extra step past the nominal tolerance costs little and makes the
  // score-identity hold to ~1e-12.
  const double stop_abs = std::max(1e-9, 1e-12 * total_weight);

  for (int it = 0; it < kMaxIterations; ++it) {
    eta = design * fit.coefficients;
    pinned = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      prob[i] = stats::expit(eta[i]);
      if (prob[i] < kPinnedProb || prob[i] > 1.0 - kPinnedProb) pinned = true;
      irls_w[i] = d.weights[i] * prob[i] * (1.0 - prob[i]);
      residual[i] = d.weights[i] * (z[i] - prob[i]);
    }
    const Eigen::VectorXd score = design.transpose() * residual;
    score_max = score.cwiseAbs().maxCoeff();
    if (score_max <= stop_abs) break;

    const Eigen::MatrixXd info =
        design.transpose() * irls_w.asDiagonal() * design;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      step = ldlt.solve(score);
    }
    if (step.size() == 0 || !step.allFinite()) {
      singular = true;
      break;
    }

    // step-halve until the deviance stops increasing
    double new_dev = 0.0;
    int halvings = 0;
    for (;;) {
      new_dev = deviance_at(fit.coefficients + step);
      if (new_dev <= deviance + 1e-10 || halvings >= 30) break;
      step *= 0.5;
      ++halvings;
    }
    if (halvings >= 30 && new_dev > deviance + 1e-10) {
      break;  // stalled
    }
    fit.coefficients += step;
    deviance = new_dev;
    fit.deviance_path.push_back(deviance);
    fit.iterations = it + 1;
  }

  // Re-evaluate at the final iterate: the loop may have stepped after the
  // last score computation.
  eta = design * fit.coefficients;
  pinned = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    prob[i] = stats::expit(eta[i]);
    if (prob[i] < kPinnedProb || prob[i] > 1.0 - kPinnedProb) pinned = true;
    residual[i] = d.weights[i] * (z[i] - prob[i]);
  }
  score_max = (design.transpose() * residual).cwiseAbs().maxCoeff();

  fit.converged = (score_max <= kScoreTol * total_weight) && !pinned && !singular;
  return fit;
}

void require_converged(const GlmFit& fit, const char* what) {
  if (!fit.converged) {
    throw FitError(errc::not_converged, std::string(what) + ": model fit did not converge");
  }
}

double predict_mu(const GlmFit& fit, int s_val, int a_val,
                  const Eigen::RowVectorXd& xrow) {
  require_converged(fit, "predict_mu");
  return fit.spec.row(static_cast<double>(s_val), static_cast<double>(a_val), xrow)
      .dot(fit.coefficients);
}

double predict_pi(const GlmFit& fit, const Eigen::RowVectorXd& xrow, double s_val) {
  require_converged(fit, "predict_pi");
  const double eta = fit.spec.row(s_val, /*a_val=*/0.0, xrow).dot(fit.coefficients);
  return stats::expit(eta);
}

Eigen::VectorXd predict_mu_column(const GlmFit& fit, const Dataset& d, int s_val,
                                  int a_val) {
  require_converged(fit, "predict_mu_column");
  return fit.spec.matrix_at(d, s_val, a_val) * fit.coefficients;
}

Eigen::VectorXd predict_pi_column(const GlmFit& fit, const Dataset& d,
                                  int s_override) {
  require_converged(fit, "predict_pi_column");
  Eigen::VectorXd eta = fit.spec.matrix_at(d, s_override, /*a_override=*/0) *
                        fit.coefficients;
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = stats::expit(eta[i]);
  return eta;
}

Eigen::MatrixXd score_matrix(const GlmFit& fit, const Dataset& d) {
  const Eigen::VectorXd& z = response_vector(d, fit.response);
  const Eigen::MatrixXd design = fit.spec.matrix(d);
  Eigen::VectorXd fitted = design * fit.coefficients;
  if (fit.spec.link == Link::logit) {
    for (Eigen::Index i = 0; i < fitted.size(); ++i) {
      fitted[i] = stats::expit(fitted[i]);
    }
  }
  const Eigen::VectorXd r = d.weights.array() * (z - fitted).array();
  return r.asDiagonal() * design;
}

double logistic_loglik(const Dataset& d, const DesignSpec& spec, Response response,
                       const Eigen::VectorXd& coefficients) {
  const Eigen::VectorXd& z = response_vector(d, response);
  const Eigen::VectorXd eta = spec.matrix(d) * coefficients;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    ll += d.weights[i] * (z[i] * eta[i] - stats::log1pexp(eta[i]));
  }
  return ll;
}

}  // namespace placebo
