#include "placebo/inference.hpp"

#include <algorithm>
#include <cmath>

#include "placebo/errors.hpp"
#include "placebo/parallel.hpp"
#include "placebo/rng.hpp"
#include "placebo/stats.hpp"

namespace placebo {

std::string to_string(InferenceMethod method) {
  switch (method) {
    case InferenceMethod::plugin: return "plugin";
    case InferenceMethod::sandwich: return "sandwich";
    case InferenceMethod::bootstrap: return "bootstrap";
  }
  return "?";
}

InferenceMethod inference_method_from_string(const std::string& name) {
  if (name == "plugin") return InferenceMethod::plugin;
  if (name == "sandwich") return InferenceMethod::sandwich;
  if (name == "bootstrap") return InferenceMethod::bootstrap;
  throw DataError(errc::invalid_argument, "unknown inference method '" + name + "'");
}

double plugin_se(const Eigen::VectorXd& values) {
  const auto n = static_cast<double>(values.size());
  return std::sqrt(values.squaredNorm() / n) / std::sqrt(n);
}

double plugin_se(const EifVector& eif, const Dataset& d) {
  const double w = d.weight_total();
  const double mean_sq =
      (d.weights.array() * eif.values.array().square()).sum() / w;
  return std::sqrt(mean_sq) / std::sqrt(w);
}

// ---------------------------------------------------------------------------

StackedSystem::StackedSystem(const Dataset& d, const NuisanceFits& fits,
                             double theta)
    : d_(d) {
  if (!fits.mu || !fits.pis || !fits.pia) {
    throw DataError(errc::invalid_argument,
                    "stacked system needs all three nuisance fits");
  }
  require_converged(*fits.mu, "StackedSystem");
  require_converged(*fits.pis, "StackedSystem");
  require_converged(*fits.pia, "StackedSystem");

  lambda_hat_ = d.n11() / d.weight_total();
  pis_dim_ = fits.pis->spec.size();
  pia_dim_ = fits.pia->spec.size();
  mu_dim_ = fits.mu->spec.size();
  dim_ = pis_dim_ + pia_dim_ + mu_dim_ + 1;

  gamma_hat_.resize(dim_);
  gamma_hat_ << fits.pis->coefficients, fits.pia->coefficients,
      fits.mu->coefficients, theta;

  ds_ = fits.pis->spec.matrix(d);
  da_obs_ = fits.pia->spec.matrix(d);
  da1_ = fits.pia->spec.matrix_at(d, 1, 0);
  da0_ = fits.pia->spec.matrix_at(d, 0, 0);
  dmu_obs_ = fits.mu->spec.matrix(d);
  dmu10_ = fits.mu->spec.matrix_at(d, 1, 0);
  dmu01_ = fits.mu->spec.matrix_at(d, 0, 1);
  dmu00_ = fits.mu->spec.matrix_at(d, 0, 0);
}

Eigen::MatrixXd StackedSystem::psi_matrix(const Eigen::VectorXd& gamma) const {
  const Eigen::Index n = d_.n();
  const Eigen::VectorXd psi_s = gamma.segment(pis_offset(), pis_dim_);
  const Eigen::VectorXd psi_a = gamma.segment(pia_offset(), pia_dim_);
  const Eigen::VectorXd beta = gamma.segment(mu_offset(), mu_dim_);
  const double theta = gamma[theta_index()];

  Eigen::VectorXd pis = ds_ * psi_s;
  Eigen::VectorXd pia_obs = da_obs_ * psi_a;
  Eigen::VectorXd pia1 = da1_ * psi_a;
  Eigen::VectorXd pia0 = da0_ * psi_a;
  for (Eigen::Index i = 0; i < n; ++i) {
    pis[i] = stats::expit(pis[i]);
    pia_obs[i] = stats::expit(pia_obs[i]);
    pia1[i] = stats::expit(pia1[i]);
    pia0[i] = stats::expit(pia0[i]);
  }
  const Eigen::VectorXd mu_obs = dmu_obs_ * beta;
  const Eigen::VectorXd mu10 = dmu10_ * beta;
  const Eigen::VectorXd mu01 = dmu01_ * beta;
  const Eigen::VectorXd mu00 = dmu00_ * beta;

  Eigen::MatrixXd psi(n, dim_);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = d_.s[i];
    const double a = d_.a[i];
    const double y = d_.y[i];
    psi.block(i, pis_offset(), 1, pis_dim_) = (s - pis[i]) * ds_.row(i);
    psi.block(i, pia_offset(), 1, pia_dim_) = (a - pia_obs[i]) * da_obs_.row(i);
    psi.block(i, mu_offset(), 1, mu_dim_) = (y - mu_obs[i]) * dmu_obs_.row(i);

    double eif;
    if (s == 1.0 && a == 1.0) {
      eif = (y - mu10[i] - mu01[i] + mu00[i] - theta) / lambda_hat_;
    } else if (s == 1.0) {
      eif = -(pia1[i] / (1.0 - pia1[i])) * (y - mu10[i]) / lambda_hat_;
    } else if (a == 1.0) {
      eif = -(pia1[i] / pia0[i]) * (pis[i] / (1.0 - pis[i])) * (y - mu01[i]) /
            lambda_hat_;
    } else {
      eif = (pia1[i] / (1.0 - pia0[i])) * (pis[i] / (1.0 - pis[i])) *
            (y - mu00[i]) / lambda_hat_;
    }
    psi(i, theta_index()) = eif;
  }
  return psi;
}

Eigen::VectorXd StackedSystem::mean_psi(const Eigen::VectorXd& gamma) const {
  const Eigen::MatrixXd psi = psi_matrix(gamma);
  return psi.transpose() * d_.weights / d_.weight_total();
}

Eigen::MatrixXd StackedSystem::bread_fd(double step_scale) const {
  Eigen::MatrixXd jac(dim_, dim_);
  Eigen::VectorXd gamma = gamma_hat_;
  for (Eigen::Index j = 0; j < dim_; ++j) {
    const double h = step_scale * (1.0 + std::abs(gamma_hat_[j]));
    gamma[j] = gamma_hat_[j] + h;
    const Eigen::VectorXd up = mean_psi(gamma);
    gamma[j] = gamma_hat_[j] - h;
    const Eigen::VectorXd down = mean_psi(gamma);
    gamma[j] = gamma_hat_[j];
    jac.col(j) = (up - down) / (2.0 * h);
  }
  return -jac;
}

Eigen::MatrixXd StackedSystem::meat() const {
  const Eigen::MatrixXd psi = psi_matrix(gamma_hat_);
  return psi.transpose() * d_.weights.asDiagonal() * psi / d_.weight_total();
}

double sandwich_se(const Dataset& d, const StackedSystem& system) {
  const Eigen::MatrixXd bread = system.bread_fd();
  const Eigen::MatrixXd meat = system.meat();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(bread,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()[0];
  const double smin = svd.singularValues()[svd.singularValues().size() - 1];
  if (!(smin > 0.0) || smin / smax < 1e-12) {
    throw InferenceError(errc::singular_bread,
                         "sandwich bread singular (rcond = " +
                             std::to_string(smin / smax) + ")");
  }
  const Eigen::MatrixXd bread_inv = svd.solve(
      Eigen::MatrixXd::Identity(system.dim(), system.dim()));
  const Eigen::MatrixXd v =
      bread_inv * meat * bread_inv.transpose() / d.weight_total();
  const double var = v(system.theta_index(), system.theta_index());
  if (!(var >= 0.0)) {
    throw InferenceError(errc::singular_bread, "negative sandwich variance");
  }
  return std::sqrt(var);
}

// ---------------------------------------------------------------------------

std::vector<std::int32_t> bootstrap_indices(Eigen::Index n, std::uint64_t seed,
                                            std::uint32_t context,
                                            std::uint32_t replicate) {
  Rng rng(seed, StreamPurpose::bootstrap, context, replicate);
  std::vector<std::int32_t> idx(static_cast<std::size_t>(n));
  for (auto& v : idx) {
    v = static_cast<std::int32_t>(rng.next_below(static_cast<std::uint32_t>(n)));
  }
  return idx;
}

ResampleStats bootstrap_statistics(
    const Dataset& d, int b, std::uint64_t seed, std::uint32_t context, int threads,
    int stat_dim, const std::function<void(const Dataset&, double*)>& fn) {
  if (b < 1) {
    throw DataError(errc::invalid_argument, "bootstrap needs at least one replicate");
  }
  std::vector<double> all(static_cast<std::size_t>(b) * static_cast<std::size_t>(stat_dim));
  std::vector<char> ok(static_cast<std::size_t>(b), 0);

  parallel_for(static_cast<std::size_t>(b), threads, [&](std::size_t rep) {
    const auto indices =
        bootstrap_indices(d.n(), seed, context, static_cast<std::uint32_t>(rep));
    const Dataset resampled = d.resample(indices);
    try {
      fn(resampled, all.data() + rep * static_cast<std::size_t>(stat_dim));
      ok[rep] = 1;
    } catch (const Error&) {
      ok[rep] = 0;  // failed refit; dropped and counted
    }
  });

  ResampleStats out;
  out.total = b;
  int kept = 0;
  for (char flag : ok) kept += flag;
  out.failures = b - kept;
  out.stats.resize(kept, stat_dim);
  Eigen::Index row = 0;
  for (int rep = 0; rep < b; ++rep) {
    if (ok[static_cast<std::size_t>(rep)]) {
      for (int k = 0; k < stat_dim; ++k) {
        out.stats(row, k) =
            all[static_cast<std::size_t>(rep) * static_cast<std::size_t>(stat_dim) +
                static_cast<std::size_t>(k)];
      }
      ++row;
    }
  }
  return out;
}

namespace {

void check_failure_rate(const ResampleStats& stats, double max_rate) {
  const double rate =
      static_cast<double>(stats.failures) / static_cast<double>(stats.total);
  if (rate > max_rate) {
    throw InferenceError(errc::bootstrap_unstable,
                         "bootstrap unstable: " + std::to_string(stats.failures) +
                             " of " + std::to_string(stats.total) +
                             " replicates failed");
  }
}

}  // namespace

EstimateResult bootstrap(const Dataset& d, const EstimatorRecipe& recipe,
                         const BootstrapOptions& options) {
  if (options.b < 50) {
    throw DataError(errc::invalid_argument, "bootstrap needs at least 50 replicates");
  }
  const PointEstimate point = estimate_point(d, recipe);

  const ResampleStats stats = bootstrap_statistics(
      d, options.b, options.seed, /*context=*/0, options.threads, /*stat_dim=*/1,
      [&](const Dataset& resampled, double* out) {
        out[0] = estimate_point(resampled, recipe).theta;
      });
  check_failure_rate(stats, options.max_failure_rate);

  std::vector<double> estimates(stats.stats.col(0).data(),
                                stats.stats.col(0).data() + stats.stats.rows());
  std::sort(estimates.begin(), estimates.end());

  EstimateResult result;
  result.estimate = point.theta;
  result.se = stats::sample_sd(estimates);
  result.ci_lo = stats::quantile_sorted(estimates, options.alpha / 2.0);
  result.ci_hi = stats::quantile_sorted(estimates, 1.0 - options.alpha / 2.0);
  result.alpha = options.alpha;
  result.method = InferenceMethod::bootstrap;
  result.estimator = recipe.kind;
  result.n = static_cast<long>(d.n());
  result.n11 = d.n11();
  result.diagnostics.bootstrap_failures = stats.failures;
  result.diagnostics.bootstrap_total = stats.total;
  result.diagnostics.estimate_outside_ci =
      point.theta < result.ci_lo || point.theta > result.ci_hi;
  return result;
}

EstimateResult estimate_with_inference(const Dataset& d, const EstimatorRecipe& recipe,
                                       InferenceMethod method,
                                       const BootstrapOptions& options) {
  if (method == InferenceMethod::bootstrap) {
    return bootstrap(d, recipe, options);
  }
  if (recipe.kind != EstimatorKind::dr || recipe.block_normalized_dr) {
    throw DataError(errc::invalid_argument,
                    to_string(method) +
                        " inference is defined for the standard doubly robust "
                        "estimator only; use bootstrap");
  }
  const PointEstimate point = estimate_point(d, recipe);
  const double z = stats::z_two_sided(options.alpha);

  EstimateResult result;
  result.estimate = point.theta;
  result.alpha = options.alpha;
  result.method = method;
  result.estimator = recipe.kind;
  result.n = static_cast<long>(d.n());
  result.n11 = d.n11();

  if (method == InferenceMethod::plugin) {
    const EifVector eif = eif_values(d, point.fits, point.theta);
    result.se = plugin_se(eif, d);
  } else {
    const StackedSystem system(d, point.fits, point.theta);
    result.se = sandwich_se(d, system);
  }
  result.ci_lo = result.estimate - z * result.se;
  result.ci_hi = result.estimate + z * result.se;
  return result;
}

}  // namespace placebo
