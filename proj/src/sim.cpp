#include "placebo/sim.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "placebo/errors.hpp"
#include "placebo/inference.hpp"
#include "placebo/parallel.hpp"
#include "placebo/rng.hpp"
#include "placebo/stats.hpp"

namespace placebo::sim {

namespace {

const std::vector<std::string> kCovariateNames = {"X1", "X2", "X3"};
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sign_plus(double v) { return v >= 0.0 ? 1.0 : -1.0; }  // sign(0) = +1

}  // namespace

Factors scenario_factors(Scenario scenario) {
  switch (scenario) {
    case Scenario::i: return {false, false, false};
    case Scenario::ii: return {true, false, false};
    case Scenario::iii: return {false, false, true};
    case Scenario::iv: return {false, true, false};
    case Scenario::v: return {false, true, true};
    case Scenario::vi: return {true, false, true};
    case Scenario::vii: return {true, true, false};
    case Scenario::viii: return {true, true, true};
  }
  throw DataError(errc::invalid_argument, "unknown scenario");
}

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::i: return "I";
    case Scenario::ii: return "II";
    case Scenario::iii: return "III";
    case Scenario::iv: return "IV";
    case Scenario::v: return "V";
    case Scenario::vi: return "VI";
    case Scenario::vii: return "VII";
    case Scenario::viii: return "VIII";
  }
  return "?";
}

Scenario scenario_from_string(const std::string& name) {
  for (Scenario s : all_scenarios()) {
    if (to_string(s) == name) return s;
  }
  throw DataError(errc::invalid_argument, "unknown scenario '" + name + "'");
}

std::vector<Scenario> all_scenarios() {
  return {Scenario::i,  Scenario::ii,  Scenario::iii, Scenario::iv,
          Scenario::v,  Scenario::vi,  Scenario::vii, Scenario::viii};
}

GeneratedData generate(const ScenarioConfig& config, const GenerateOptions& options) {
  if (config.n < 50) {
    throw DataError(errc::invalid_argument, "simulation needs n >= 50");
  }
  const Factors factors = scenario_factors(config.scenario);
  const auto scenario_idx = static_cast<std::uint32_t>(config.scenario) - 1;
  Rng rng(config.seed, StreamPurpose::generate, scenario_idx, config.replicate);

  const Eigen::Index n = config.n;
  Eigen::VectorXd y(n), a(n), s(n), u(n), y0(n), y1(n);
  Eigen::MatrixXd x(n, 3);

  for (Eigen::Index i = 0; i < n; ++i) {
    const double x1 = rng.next_normal();
    const double x2 = rng.next_normal();
    const double x3 = rng.next_normal();
    x(i, 0) = x1;
    x(i, 1) = x2;
    x(i, 2) = x3;

    const double ps = stats::expit(-x1 - x2 + 3.0 * x3 - x2 * x3);
    const double si = rng.next_bernoulli(ps) ? 1.0 : 0.0;
    const double pa = stats::expit(-x1 - x2 + x3 + x2 * x3 + 0.2 * si + 0.5);
    const double ai = rng.next_bernoulli(pa) ? 1.0 : 0.0;

    double pu = 0.6 * ai + 0.2;
    if (factors.heterogeneous_confounder) pu += 0.2 * sign_plus(x1 + x2);
    if (si == 1.0) pu *= options.u_primary_prob_scale;
    if (pu < 0.0 || pu > 1.0) {
      throw DataError(errc::invalid_argument,
                      "confounder probability outside [0,1]; check the options");
    }
    const double ui = rng.next_bernoulli(pu) ? 1.0 : 0.0;

    double mean0;
    if (factors.sample_specific_outcome) {
      mean0 = -x1 - x2 - (x3 + 0.5 * x2 * x3) * si +
              options.confounder_effect * ui + 2.0;
    } else {
      mean0 = -x1 - x2 + 0.5 * x3 + 0.5 * x2 * x3 +
              options.confounder_effect * ui + 2.0;
    }
    mean0 += si * ai * (options.violation_delta0 +
                        options.violation_delta.dot(x.row(i).transpose()));
    mean0 += options.outcome_shift;
    const double y0i = mean0 + rng.next_normal();

    double effect;
    if (si == 1.0) {
      effect = factors.noisy_effect ? rng.next_normal(1.0, std::sqrt(0.5)) : 1.0;
    } else {
      effect = options.placebo_effect;
    }
    const double y1i = y0i + effect;

    s[i] = si;
    a[i] = ai;
    u[i] = ui;
    y0[i] = y0i;
    y1[i] = y1i;
    y[i] = (ai == 1.0) ? y1i : y0i;
  }

  GeneratedData out;
  out.data = Dataset::create(std::move(y), std::move(a), std::move(s), std::move(x),
                             kCovariateNames);
  out.u = std::move(u);
  out.y0 = std::move(y0);
  out.y1 = std::move(y1);
  out.theta0 = 1.0;
  return out;
}

namespace {

DesignSpec parse_sim(const std::string& text, Link link) {
  return DesignSpec::parse(text, kCovariateNames, link);
}

}  // namespace

DesignSpec sim_mu_design(bool correct) {
  // misspecification strips every covariate interaction, leaving the plain
  // additive model
  return parse_sim(correct ? "1 + X1 + X2 + X3 + X2:X3 + S + A + S:A + S:X3 + S:X2:X3"
                           : "1 + X1 + X2 + X3 + S + A + S:A",
                   Link::identity);
}

DesignSpec sim_pis_design(bool correct) {
  return parse_sim(correct ? "1 + X1 + X2 + X3 + X2:X3" : "1 + X1 + X2 + X3",
                   Link::logit);
}

DesignSpec sim_pia_design(bool correct) {
  return parse_sim(correct ? "1 + X1 + X2 + X3 + X2:X3 + S" : "1 + X1 + X2 + X3 + S",
                   Link::logit);
}

DesignSpec sim_naive_mu_design() {
  return parse_sim("1 + X1 + X2 + X3 + X2:X3 + A", Link::identity);
}

DesignSpec sim_naive_pia_design() {
  return parse_sim("1 + X1 + X2 + X3 + X2:X3", Link::logit);
}

const std::vector<SimCombo>& default_combos() {
  static const std::vector<SimCombo> combos = {
      {EstimatorKind::reg_naive, "-", true, true},
      {EstimatorKind::dr_naive, "-", true, true},
      {EstimatorKind::reg, "mu_correct", true, true},
      {EstimatorKind::reg, "mu_incorrect", false, true},
      {EstimatorKind::ipw_stabilized, "pi_correct", true, true},
      {EstimatorKind::ipw_stabilized, "pi_incorrect", true, false},
      {EstimatorKind::dr, "all_correct", true, true},
      {EstimatorKind::dr, "mu_correct", true, false},
      {EstimatorKind::dr, "pi_correct", false, true},
  };
  return combos;
}

MetricSummary metrics(const std::vector<double>& estimates,
                      const std::vector<double>& ses,
                      const std::vector<bool>& covered, double theta0,
                      double trim_fraction) {
  const auto m = estimates.size();
  if (m == 0) {
    throw DataError(errc::invalid_argument, "metrics over an empty replicate set");
  }
  if (ses.size() != m || covered.size() != m) {
    throw DataError(errc::shape_mismatch, "metric inputs have unequal lengths");
  }

  std::vector<double> sorted = estimates;
  std::sort(sorted.begin(), sorted.end());
  auto total_trim = static_cast<std::size_t>(
      std::ceil(trim_fraction * static_cast<double>(m)));
  if (total_trim >= m) total_trim = m - 1;
  const std::size_t lo_trim = total_trim / 2;
  const std::size_t hi_trim = total_trim - lo_trim;

  double acc = 0.0;
  for (std::size_t i = lo_trim; i < m - hi_trim; ++i) acc += sorted[i];
  const double trimmed_mean = acc / static_cast<double>(m - total_trim);

  MetricSummary out;
  out.bias = trimmed_mean - theta0;
  out.reps_used = static_cast<int>(m);
  out.trimmed = static_cast<int>(total_trim);

  std::vector<double> finite_ses;
  finite_ses.reserve(m);
  for (double se : ses) {
    if (std::isfinite(se)) finite_ses.push_back(se);
  }
  const bool have_ses = !finite_ses.empty();
  out.median_se = have_ses ? stats::median(std::move(finite_ses)) : kNaN;

  if (have_ses) {
    long hits = 0;
    for (bool c : covered) hits += c ? 1 : 0;
    out.coverage = static_cast<double>(hits) / static_cast<double>(m);
  } else {
    out.coverage = kNaN;  // intervals were never computed
  }
  return out;
}

namespace {

constexpr std::size_t kComboCount = 9;

struct ReplicateOutcome {
  bool ok = false;
  std::array<double, kComboCount> estimate{};
  std::array<double, kComboCount> se{};
  std::array<bool, kComboCount> covered{};
  std::array<double, kComboCount> ci_lo{};
  std::array<double, kComboCount> ci_hi{};
};

struct FitPool {
  GlmFit mu_c, mu_m, pis_c, pis_m, pia_c, pia_m, naive_mu, naive_pia;
};

FitPool fit_pool(const Dataset& d) {
  FitPool pool;
  pool.mu_c = fit_ols(d, sim_mu_design(true), Response::outcome);
  pool.mu_m = fit_ols(d, sim_mu_design(false), Response::outcome);
  pool.pis_c = fit_logistic(d, sim_pis_design(true), Response::sample_indicator);
  pool.pis_m = fit_logistic(d, sim_pis_design(false), Response::sample_indicator);
  pool.pia_c = fit_logistic(d, sim_pia_design(true), Response::treatment);
  pool.pia_m = fit_logistic(d, sim_pia_design(false), Response::treatment);
  const Dataset sub = d.primary_subset();
  if (sub.cell_count(1, 1) == 0 || sub.cell_count(1, 0) == 0) {
    throw FitError(errc::empty_cell, "primary sample lacks a treatment arm");
  }
  pool.naive_mu = fit_ols(sub, sim_naive_mu_design(), Response::outcome);
  pool.naive_pia = fit_logistic(sub, sim_naive_pia_design(), Response::treatment);
  for (const GlmFit* fit : {&pool.mu_c, &pool.mu_m, &pool.pis_c, &pool.pis_m,
                            &pool.pia_c, &pool.pia_m, &pool.naive_mu,
                            &pool.naive_pia}) {
    require_converged(*fit, "simulation fit");
  }
  return pool;
}

std::array<double, kComboCount> combo_estimates(const Dataset& d, const FitPool& pool) {
  // The study uses the weight-normalized forms throughout: stabilized ipw
  // and the block-normalized doubly robust estimator. The raw-weight
  // variants have finite-sample tails far heavier than the reference
  // operating characteristics.
  std::array<double, kComboCount> est{};
  est[0] = theta_reg_naive(d, pool.naive_mu);
  est[1] = theta_dr_naive(d, pool.naive_mu, pool.naive_pia);
  est[2] = theta_reg(d, pool.mu_c);
  est[3] = theta_reg(d, pool.mu_m);
  est[4] = theta_ipw(d, pool.pis_c, pool.pia_c, /*stabilized=*/true);
  est[5] = theta_ipw(d, pool.pis_m, pool.pia_m, /*stabilized=*/true);
  est[6] = theta_dr(d, pool.mu_c, pool.pis_c, pool.pia_c, /*block_normalized=*/true);
  est[7] = theta_dr(d, pool.mu_c, pool.pis_m, pool.pia_m, /*block_normalized=*/true);
  est[8] = theta_dr(d, pool.mu_m, pool.pis_c, pool.pia_c, /*block_normalized=*/true);
  return est;
}

ReplicateOutcome run_replicate(Scenario scenario, Eigen::Index n, std::uint64_t seed,
                               std::uint32_t replicate, int boot_b, double alpha,
                               double theta0) {
  ReplicateOutcome out;
  ScenarioConfig config;
  config.scenario = scenario;
  config.n = n;
  config.seed = seed;
  config.replicate = replicate;

  GeneratedData gen;
  FitPool pool;
  try {
    gen = generate(config);
    pool = fit_pool(gen.data);
    out.estimate = combo_estimates(gen.data, pool);
  } catch (const Error&) {
    return out;  // replicate skipped
  }

  if (boot_b <= 0) {
    out.se.fill(kNaN);
    out.ci_lo.fill(kNaN);
    out.ci_hi.fill(kNaN);
    out.covered.fill(false);
    out.ok = true;
    return out;
  }

  const auto scenario_idx = static_cast<std::uint32_t>(scenario) - 1;
  const std::uint32_t context = ((scenario_idx + 1) << 20) | replicate;
  std::vector<std::array<double, kComboCount>> draws;
  draws.reserve(static_cast<std::size_t>(boot_b));
  int failures = 0;
  for (int b = 0; b < boot_b; ++b) {
    const auto idx = bootstrap_indices(gen.data.n(), seed, context,
                                       static_cast<std::uint32_t>(b));
    const Dataset resampled = gen.data.resample(idx);
    try {
      const FitPool rpool = fit_pool(resampled);
      draws.push_back(combo_estimates(resampled, rpool));
    } catch (const Error&) {
      ++failures;
    }
  }
  if (failures > boot_b / 10) {
    return out;  // unstable bootstrap: skip the whole replicate
  }

  std::vector<double> col(draws.size());
  for (std::size_t k = 0; k < kComboCount; ++k) {
    for (std::size_t b = 0; b < draws.size(); ++b) col[b] = draws[b][k];
    std::sort(col.begin(), col.end());
    out.se[k] = stats::sample_sd(col);
    out.ci_lo[k] = stats::quantile_sorted(col, alpha / 2.0);
    out.ci_hi[k] = stats::quantile_sorted(col, 1.0 - alpha / 2.0);
    out.covered[k] = out.ci_lo[k] <= theta0 && theta0 <= out.ci_hi[k];
  }
  out.ok = true;
  return out;
}

}  // namespace

SimReport run_study(const StudySpec& spec) {
  if (spec.reps < 1) {
    throw DataError(errc::invalid_argument, "study needs at least one replicate");
  }
  if (spec.reps >= (1 << 20)) {
    throw DataError(errc::invalid_argument, "study replicate count exceeds 2^20");
  }
  if (spec.boot_b != 0 && spec.boot_b < 10) {
    throw DataError(errc::invalid_argument,
                    "boot_b must be 0 (no intervals) or at least 10");
  }
  const double theta0 = 1.0;
  const auto& combos = default_combos();
  SimReport report;

  for (Scenario scenario : spec.scenarios) {
    std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(spec.reps));
    parallel_for(static_cast<std::size_t>(spec.reps), spec.threads,
                 [&](std::size_t r) {
                   outcomes[r] = run_replicate(
                       scenario, spec.n, spec.seed, static_cast<std::uint32_t>(r),
                       spec.boot_b, spec.alpha, theta0);
                 });

    int skipped = 0;
    for (const auto& o : outcomes) skipped += o.ok ? 0 : 1;

    for (std::size_t k = 0; k < combos.size(); ++k) {
      std::vector<double> estimates, ses;
      std::vector<bool> covered;
      estimates.reserve(outcomes.size());
      for (std::size_t r = 0; r < outcomes.size(); ++r) {
        const auto& o = outcomes[r];
        if (!o.ok) continue;
        estimates.push_back(o.estimate[k]);
        ses.push_back(o.se[k]);
        covered.push_back(o.covered[k]);
        if (spec.keep_estimates) {
          report.raw.push_back({to_string(scenario), to_string(combos[k].kind),
                                combos[k].spec_label, static_cast<int>(r),
                                o.estimate[k], o.se[k], o.ci_lo[k], o.ci_hi[k]});
        }
      }
      if (estimates.empty()) {
        throw InferenceError(errc::bootstrap_unstable,
                             "every replicate failed in scenario " +
                                 to_string(scenario));
      }
      const MetricSummary m =
          metrics(estimates, ses, covered, theta0, spec.trim_fraction);
      SimRow row;
      row.scenario = to_string(scenario);
      row.estimator = to_string(combos[k].kind);
      row.spec = combos[k].spec_label;
      row.bias = m.bias;
      row.median_se = m.median_se;
      row.coverage = spec.boot_b > 0 ? m.coverage : kNaN;
      row.reps_used = m.reps_used;
      row.trimmed = m.trimmed;
      row.skipped = skipped;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::string SimReport::to_csv() const {
  std::string out = "scenario,estimator,spec,bias,median_se,coverage,reps_used,skipped\n";
  char buf[256];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.17g,%.17g,%.17g,%d,%d\n",
                  row.scenario.c_str(), row.estimator.c_str(), row.spec.c_str(),
                  row.bias, row.median_se, row.coverage, row.reps_used, row.skipped);
    out += buf;
  }
  return out;
}

std::string SimReport::raw_to_csv() const {
  std::string out = "scenario,estimator,spec,replicate,estimate,se,ci_lo,ci_hi\n";
  char buf[320];
  for (const auto& rec : raw) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%d,%.17g,%.17g,%.17g,%.17g\n",
                  rec.scenario.c_str(), rec.estimator.c_str(), rec.spec.c_str(),
                  rec.replicate, rec.estimate, rec.se, rec.ci_lo, rec.ci_hi);
    out += buf;
  }
  return out;
}

std::string SimReport::to_table() const {
  // Collect scenario order and the estimator/spec row order from the data.
  std::vector<std::string> scenarios;
  std::vector<std::pair<std::string, std::string>> combos;
  for (const auto& row : rows) {
    if (scenarios.empty() || scenarios.back() != row.scenario) {
      bool seen = false;
      for (const auto& s : scenarios) seen = seen || s == row.scenario;
      if (!seen) scenarios.push_back(row.scenario);
    }
    const std::pair<std::string, std::string> key{row.estimator, row.spec};
    bool seen = false;
    for (const auto& c : combos) seen = seen || c == key;
    if (!seen) combos.push_back(key);
  }

  auto find_row = [&](const std::string& scenario,
                      const std::pair<std::string, std::string>& combo) -> const SimRow* {
    for (const auto& row : rows) {
      if (row.scenario == scenario && row.estimator == combo.first &&
          row.spec == combo.second) {
        return &row;
      }
    }
    return nullptr;
  };

  char buf[160];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-16s %-14s", "Estimator", "Spec");
  out += buf;
  for (const auto& s : scenarios) {
    std::snprintf(buf, sizeof(buf), " | %-26s", ("Scenario " + s).c_str());
    out += buf;
  }
  out += "\n";
  std::snprintf(buf, sizeof(buf), "%-16s %-14s", "", "");
  out += buf;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    std::snprintf(buf, sizeof(buf), " | %8s %8s %8s", "Bias", "MedSE", "Cov95");
    out += buf;
  }
  out += "\n";

  for (const auto& combo : combos) {
    std::snprintf(buf, sizeof(buf), "%-16s %-14s", combo.first.c_str(),
                  combo.second.c_str());
    out += buf;
    for (const auto& s : scenarios) {
      const SimRow* row = find_row(s, combo);
      if (row == nullptr) {
        std::snprintf(buf, sizeof(buf), " | %8s %8s %8s", "-", "-", "-");
      } else if (std::isfinite(row->coverage)) {
        std::snprintf(buf, sizeof(buf), " | %8.2f %8.2f %7.1f%%", row->bias,
                      row->median_se, 100.0 * row->coverage);
      } else {
        std::snprintf(buf, sizeof(buf), " | %8.2f %8s %8s", row->bias, "-", "-");
      }
      out += buf;
    }
    out += "\n";
  }
  return out;
}

double SimReport::max_skip_rate() const {
  double worst = 0.0;
  for (const auto& row : rows) {
    const double total = row.reps_used + row.skipped;
    if (total > 0.0) {
      worst = std::max(worst, static_cast<double>(row.skipped) / total);
    }
  }
  return worst;
}

}  // namespace placebo::sim
