// Acceptance suite: end-to-end checks of the estimation library against its
// reference operating characteristics, plus exactness and determinism
// guarantees. Prints one line per criterion; the exit code is the number of
// failed criteria.

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "placebo/dataset.hpp"
#include "placebo/errors.hpp"
#include "placebo/estimators.hpp"
#include "placebo/inference.hpp"
#include "placebo/sensitivity.hpp"
#include "placebo/sim.hpp"
#include "placebo/stats.hpp"

using namespace placebo;

namespace {

int g_threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

struct Checker {
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    if (ok) {
      notes.push_back(what);
    } else {
      failures.push_back(what);
    }
  }
  void expect_in(double value, double lo, double hi, const std::string& what) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s = %.4f in [%.3f, %.3f]", what.c_str(), value,
                  lo, hi);
    expect(value >= lo && value <= hi, buf);
  }
};

const sim::SimRow& find_row(const sim::SimReport& report, const std::string& scenario,
                            const std::string& estimator, const std::string& spec) {
  for (const auto& row : report.rows) {
    if (row.scenario == scenario && row.estimator == estimator && row.spec == spec) {
      return row;
    }
  }
  throw std::runtime_error("report row not found: " + estimator + "/" + spec);
}

EstimatorRecipe dr_recipe() {
  EstimatorRecipe recipe;
  recipe.kind = EstimatorKind::dr;
  recipe.mu = sim::sim_mu_design(true);
  recipe.pis = sim::sim_pis_design(true);
  recipe.pia = sim::sim_pia_design(true);
  return recipe;
}

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// Criteria 1 and 2 share one full-budget Scenario I study.

sim::SimReport scenario_study(sim::Scenario scenario, std::uint64_t seed) {
  sim::StudySpec spec;
  spec.scenarios = {scenario};
  spec.n = 1000;
  spec.reps = 500;
  spec.boot_b = 200;
  spec.alpha = 0.05;
  spec.seed = seed;
  spec.threads = g_threads;
  return sim::run_study(spec);
}

void criterion_1(Checker& c, const sim::SimReport& report) {
  const auto& reg_naive = find_row(report, "I", "reg_naive", "-");
  const auto& dr_naive = find_row(report, "I", "dr_naive", "-");
  const auto& reg_c = find_row(report, "I", "reg", "mu_correct");
  const auto& reg_m = find_row(report, "I", "reg", "mu_incorrect");
  const auto& ipw_c = find_row(report, "I", "ipw_stabilized", "pi_correct");
  const auto& dr_cc = find_row(report, "I", "dr", "all_correct");

  c.expect_in(reg_naive.bias, 1.20 - 0.05, 1.20 + 0.05, "naive reg bias");
  c.expect_in(dr_naive.bias, 1.21 - 0.05, 1.21 + 0.05, "naive dr bias");
  c.expect_in(reg_c.bias, -0.05, 0.05, "reg correct bias");
  c.expect_in(reg_m.bias, -0.36 - 0.05, -0.36 + 0.05, "reg misspecified bias");
  c.expect_in(dr_cc.bias, -0.05, 0.05, "dr all-correct bias");
  c.expect_in(ipw_c.bias, -0.40, -0.10, "ipw correct bias");
  c.expect_in(reg_c.coverage, 0.91, 0.97, "reg correct coverage");
  c.expect_in(reg_naive.coverage, 0.0, 0.02, "naive reg coverage");
}

void criterion_2(Checker& c, const sim::SimReport& report) {
  const auto& dr_cc = find_row(report, "I", "dr", "all_correct");
  const auto& dr_mu = find_row(report, "I", "dr", "mu_correct");
  const auto& dr_pi = find_row(report, "I", "dr", "pi_correct");
  c.expect_in(dr_cc.bias, -0.06, 0.06, "dr bias, all models correct");
  c.expect_in(dr_mu.bias, -0.06, 0.06, "dr bias, only outcome model correct");
  c.expect_in(dr_pi.bias, -0.06, 0.06, "dr bias, only propensities correct");
}

void criterion_3(Checker& c) {
  const sim::SimReport iv = scenario_study(sim::Scenario::iv, 2026);
  const sim::SimReport vii = scenario_study(sim::Scenario::vii, 2027);
  const auto& reg_m = find_row(iv, "IV", "reg", "mu_incorrect");
  const auto& dr_naive = find_row(vii, "VII", "dr_naive", "-");
  c.expect_in(reg_m.bias, -0.29 - 0.05, -0.29 + 0.05,
              "scenario IV reg misspecified bias");
  c.expect_in(dr_naive.bias, 1.20 - 0.06, 1.20 + 0.06,
              "scenario VII naive dr bias");
}

// ---------------------------------------------------------------------------
// Criterion 4: exact oracle equivalence on a fixed small dataset with
// supplied coefficients. Oracles are plain term-by-term loops.

struct SmallData {
  Dataset d;
  GlmFit mu, pis, pia, naive_mu, naive_pia;
  Eigen::VectorXd mu_beta, pis_psi, pia_alpha;
};

SmallData make_small() {
  Eigen::MatrixXd x(8, 2);
  x << 0.5, -1.2, -0.3, 0.8, 1.1, 0.4, -0.7, -0.5, 0.2, 1.5, 0.9, -0.9, -1.4, 0.1,
      0.6, 0.7;
  Eigen::VectorXd y(8), a(8), s(8);
  y << 2.0, 1.5, 3.0, 0.5, 2.5, 1.0, 0.8, 1.7;
  a << 1, 1, 0, 0, 1, 1, 0, 0;
  s << 1, 1, 1, 1, 0, 0, 0, 0;

  SmallData out{Dataset::create(y, a, s, x, {"X1", "X2"}),
                {}, {}, {}, {}, {},
                Eigen::VectorXd(6), Eigen::VectorXd(3), Eigen::VectorXd(4)};
  out.mu_beta << 0.5, 1.0, -0.7, 0.3, 0.8, 0.6;
  out.pis_psi << 0.2, -0.4, 0.1;
  out.pia_alpha << -0.1, 0.3, -0.2, 0.25;
  out.mu = GlmFit::from_coefficients(
      DesignSpec::parse("1 + X1 + X2 + S + A + S:A", {"X1", "X2"}, Link::identity),
      Response::outcome, out.mu_beta);
  out.pis = GlmFit::from_coefficients(
      DesignSpec::parse("1 + X1 + X2", {"X1", "X2"}, Link::logit),
      Response::sample_indicator, out.pis_psi);
  out.pia = GlmFit::from_coefficients(
      DesignSpec::parse("1 + X1 + X2 + S", {"X1", "X2"}, Link::logit),
      Response::treatment, out.pia_alpha);
  out.naive_mu = GlmFit::from_coefficients(
      DesignSpec::parse("1 + X1 + X2 + A", {"X1", "X2"}, Link::identity),
      Response::outcome, Eigen::Vector4d(0.5, 1.0, -0.7, 0.8));
  out.naive_pia = GlmFit::from_coefficients(
      DesignSpec::parse("1 + X1 + X2", {"X1", "X2"}, Link::logit),
      Response::treatment, Eigen::Vector3d(-0.1, 0.3, -0.2));
  return out;
}

void criterion_4(Checker& c) {
  const SmallData sd = make_small();
  const Dataset& d = sd.d;
  auto mu_at = [&](double s, double a, Eigen::Index i) {
    return sd.mu_beta[0] + sd.mu_beta[1] * d.x(i, 0) + sd.mu_beta[2] * d.x(i, 1) +
           sd.mu_beta[3] * s + sd.mu_beta[4] * a + sd.mu_beta[5] * s * a;
  };
  auto pis_at = [&](Eigen::Index i) {
    return expit(sd.pis_psi[0] + sd.pis_psi[1] * d.x(i, 0) + sd.pis_psi[2] * d.x(i, 1));
  };
  auto pia_at = [&](Eigen::Index i, double s) {
    return expit(sd.pia_alpha[0] + sd.pia_alpha[1] * d.x(i, 0) +
                 sd.pia_alpha[2] * d.x(i, 1) + sd.pia_alpha[3] * s);
  };

  double n11 = 0;
  for (Eigen::Index i = 0; i < d.n(); ++i) n11 += d.s[i] * d.a[i];

  // regression oracle
  double reg_acc = 0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    if (d.s[i] == 1 && d.a[i] == 1) {
      reg_acc += (mu_at(1, 1, i) - mu_at(1, 0, i)) - (mu_at(0, 1, i) - mu_at(0, 0, i));
    }
  }
  c.expect(std::abs(theta_reg(d, sd.mu) - reg_acc / n11) < 1e-10, "reg oracle");

  // raw weighting oracle
  double ipw_acc = 0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double ps = pis_at(i);
    const double pa_own = pia_at(i, d.s[i]);
    ipw_acc += (d.s[i] - ps) / (1 - ps) * pia_at(i, 1) * (d.a[i] - pa_own) /
               (pa_own * (1 - pa_own)) * d.y[i];
  }
  c.expect(std::abs(theta_ipw(d, sd.pis, sd.pia, false) - ipw_acc / n11) < 1e-10,
           "raw ipw oracle");

  // normalized weighting oracle
  double s11 = 0, w11 = 0, s10 = 0, w10 = 0, s01 = 0, w01 = 0, s00 = 0, w00 = 0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double ps = pis_at(i), pa1 = pia_at(i, 1), pa0 = pia_at(i, 0);
    if (d.s[i] == 1 && d.a[i] == 1) {
      s11 += d.y[i];
      w11 += 1;
    } else if (d.s[i] == 1) {
      const double w = pa1 / (1 - pa1);
      s10 += w * d.y[i];
      w10 += w;
    } else if (d.a[i] == 1) {
      const double w = ps / (1 - ps) * pa1 / pa0;
      s01 += w * d.y[i];
      w01 += w;
    } else {
      const double w = ps / (1 - ps) * pa1 / (1 - pa0);
      s00 += w * d.y[i];
      w00 += w;
    }
  }
  c.expect(std::abs(theta_ipw(d, sd.pis, sd.pia, true) -
                    (s11 / w11 - s10 / w10 - s01 / w01 + s00 / w00)) < 1e-10,
           "normalized ipw oracle");

  // doubly robust oracle
  double dr_acc = 0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double ps = pis_at(i), pa1 = pia_at(i, 1), pa0 = pia_at(i, 0);
    if (d.s[i] == 1 && d.a[i] == 1) {
      dr_acc += d.y[i] - mu_at(1, 0, i) - mu_at(0, 1, i) + mu_at(0, 0, i);
    } else if (d.s[i] == 1) {
      dr_acc -= pa1 / (1 - pa1) * (d.y[i] - mu_at(1, 0, i));
    } else if (d.a[i] == 1) {
      dr_acc -= pa1 / pa0 * ps / (1 - ps) * (d.y[i] - mu_at(0, 1, i));
    } else {
      dr_acc += pa1 / (1 - pa0) * ps / (1 - ps) * (d.y[i] - mu_at(0, 0, i));
    }
  }
  c.expect(std::abs(theta_dr(d, sd.mu, sd.pis, sd.pia) - dr_acc / n11) < 1e-10,
           "dr oracle");

  // naive aipw oracle (s-free models on the primary stratum)
  double naive_acc = 0, naive_n11 = 0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    if (d.s[i] != 1) continue;
    const double mu0 = 0.5 + 1.0 * d.x(i, 0) - 0.7 * d.x(i, 1);
    const double pa = expit(-0.1 + 0.3 * d.x(i, 0) - 0.2 * d.x(i, 1));
    if (d.a[i] == 1) {
      naive_acc += d.y[i] - mu0;
      naive_n11 += 1;
    } else {
      naive_acc -= pa / (1 - pa) * (d.y[i] - mu0);
    }
  }
  c.expect(std::abs(theta_dr_naive(d, sd.naive_mu, sd.naive_pia) -
                    naive_acc / naive_n11) < 1e-10,
           "naive aipw oracle");

  // marginal bound oracles, all three bases
  const MarginalParams params{1.3, 0.2};
  NuisanceFits fits;
  fits.mu = sd.mu;
  fits.pis = sd.pis;
  fits.pia = sd.pia;
  double m01 = 0, m00 = 0, r1 = 0, r0 = 0, v1 = 0, v0 = 0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    if (d.s[i] == 1 && d.a[i] == 1) {
      m01 += mu_at(0, 1, i);
      m00 += mu_at(0, 0, i);
    }
    if (d.s[i] == 0) {
      const double odds = pis_at(i) / (1 - pis_at(i));
      if (d.a[i] == 1) {
        const double w = odds * pia_at(i, 1) / pia_at(i, 0);
        v1 += w * d.y[i];
        r1 += w * (d.y[i] - mu_at(0, 1, i));
      } else {
        const double w = odds * pia_at(i, 1) / (1 - pia_at(i, 0));
        v0 += w * d.y[i];
        r0 += w * (d.y[i] - mu_at(0, 0, i));
      }
    }
  }
  m01 /= n11;
  m00 /= n11;
  const double gm1 = params.gamma - 1, gim1 = 1.0 / params.gamma - 1;
  {
    const double base = theta_reg(d, sd.mu);
    const auto [lo, hi] = marginal_bounds(d, fits, EstimatorKind::reg, params);
    c.expect(std::abs(hi - (base + params.lambda - gim1 * m01 + gm1 * m00)) < 1e-10 &&
                 std::abs(lo - (base - params.lambda - gm1 * m01 + gim1 * m00)) < 1e-10,
             "marginal reg-base oracle");
  }
  {
    const double base = theta_ipw(d, sd.pis, sd.pia, false);
    const auto [lo, hi] = marginal_bounds(d, fits, EstimatorKind::ipw, params);
    c.expect(
        std::abs(hi - (base + params.lambda - gim1 * (v1 / n11) + gm1 * (v0 / n11))) <
                1e-10 &&
            std::abs(lo - (base - params.lambda - gm1 * (v1 / n11) +
                           gim1 * (v0 / n11))) < 1e-10,
        "marginal ipw-base oracle");
  }
  {
    const double base = theta_dr(d, sd.mu, sd.pis, sd.pia);
    const auto [lo, hi] = marginal_bounds(d, fits, EstimatorKind::dr, params);
    c.expect(std::abs(hi - (base + params.lambda - gim1 * (m01 + r1 / n11) +
                            gm1 * (m00 + r0 / n11))) < 1e-10 &&
                 std::abs(lo - (base - params.lambda - gm1 * (m01 + r1 / n11) +
                                gim1 * (m00 + r0 / n11))) < 1e-10,
             "marginal dr-base oracle");
  }

  // linear bounds oracle: adjustment extremes accumulated coordinate-wise
  LinearBox box;
  box.gamma_lo = -0.12;
  box.gamma_hi = 0.07;
  box.lambda_lo = -0.03;
  box.lambda_hi = 0.09;
  Eigen::Vector2d xbar = Eigen::Vector2d::Zero();
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    if (d.s[i] == 1 && d.a[i] == 1) xbar += d.x.row(i).transpose() / n11;
  }
  const double theta_hat = 1.4;
  double lo_acc = theta_hat, hi_acc = theta_hat;
  const double mults[3] = {1.0, xbar[0], xbar[1]};
  for (double mult : mults) {
    const double q[4] = {-mult * box.gamma_lo + mult * box.lambda_hi,
                         -mult * box.gamma_lo + mult * box.lambda_lo,
                         -mult * box.gamma_hi + mult * box.lambda_hi,
                         -mult * box.gamma_hi + mult * box.lambda_lo};
    hi_acc += std::max(std::max(q[0], q[1]), std::max(q[2], q[3]));
    lo_acc += std::min(std::min(q[0], q[1]), std::min(q[2], q[3]));
  }
  const auto [blo, bhi] = linear_bounds(theta_hat, d, box);
  c.expect(std::abs(blo - lo_acc) < 1e-10 && std::abs(bhi - hi_acc) < 1e-10,
           "linear bounds oracle");
}

// ---------------------------------------------------------------------------

void criterion_5(Checker& c) {
  bool all_ok = true;
  double worst = 0.0;
  for (std::uint32_t seed_idx = 0; seed_idx < 50; ++seed_idx) {
    const auto scenario =
        sim::all_scenarios()[seed_idx % sim::all_scenarios().size()];
    const auto gen = sim::generate({scenario, 800, 9000, seed_idx});
    try {
      const PointEstimate point = estimate_point(gen.data, dr_recipe());
      const EifVector eif = eif_values(gen.data, point.fits, point.theta);
      const double total = std::abs(eif.values.sum());
      worst = std::max(worst, total / static_cast<double>(gen.data.n()));
      all_ok = all_ok && total <= 1e-8 * static_cast<double>(gen.data.n());
    } catch (const Error&) {
      all_ok = false;
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "influence sum zero at the dr solution (worst |mean| = %.2e)", worst);
  c.expect(all_ok, buf);
}

void criterion_6(Checker& c) {
  std::vector<double> ratios;
  for (int r = 0; r < 200; ++r) {
    const auto gen =
        sim::generate({sim::Scenario::i, 1000, 6001, static_cast<std::uint32_t>(r)});
    try {
      const PointEstimate point = estimate_point(gen.data, dr_recipe());
      const StackedSystem system(gen.data, point.fits, point.theta);
      const double sw = sandwich_se(gen.data, system);
      BootstrapOptions options;
      options.b = 500;
      options.seed = 6001 + static_cast<std::uint64_t>(r);
      options.threads = g_threads;
      const EstimateResult boot = bootstrap(gen.data, dr_recipe(), options);
      ratios.push_back(sw / boot.se);
    } catch (const Error&) {
    }
  }
  c.expect(ratios.size() >= 190, "sandwich/bootstrap replicates mostly usable");
  const double med = stats::median(ratios);
  c.expect_in(med, 0.85, 1.15, "median sandwich/bootstrap se ratio");

  // finite-difference bread vs the analytic information block
  const auto gen = sim::generate({sim::Scenario::i, 800, 6500, 0});
  const PointEstimate point = estimate_point(gen.data, dr_recipe());
  const StackedSystem system(gen.data, point.fits, point.theta);
  const Eigen::MatrixXd bread = system.bread_fd();
  const auto spec = sim::sim_pis_design(true);
  const Eigen::MatrixXd design = spec.matrix(gen.data);
  const Eigen::VectorXd eta = design * point.fits.pis->coefficients;
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(spec.size(), spec.size());
  for (Eigen::Index i = 0; i < gen.data.n(); ++i) {
    const double p = expit(eta[i]);
    info += p * (1 - p) * design.row(i).transpose() * design.row(i);
  }
  info /= static_cast<double>(gen.data.n());
  const Eigen::MatrixXd block = bread.block(
      system.pis_offset(), system.pis_offset(), system.pis_dim(), system.pis_dim());
  const double rel = (block - info).norm() / info.norm();
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "numeric score Jacobian vs analytic information (rel err %.2e)", rel);
  c.expect(rel < 1e-5, buf);
}

void criterion_7(Checker& c) {
  // degenerate marginal parameters collapse to the point estimate
  const SmallData sd = make_small();
  NuisanceFits fits;
  fits.mu = sd.mu;
  fits.pis = sd.pis;
  fits.pia = sd.pia;
  bool collapse_ok = true;
  for (EstimatorKind base :
       {EstimatorKind::reg, EstimatorKind::ipw, EstimatorKind::dr}) {
    double point = 0;
    if (base == EstimatorKind::reg) point = theta_reg(sd.d, sd.mu);
    if (base == EstimatorKind::ipw) point = theta_ipw(sd.d, sd.pis, sd.pia, false);
    if (base == EstimatorKind::dr) point = theta_dr(sd.d, sd.mu, sd.pis, sd.pia);
    const auto [lo, hi] = marginal_bounds(sd.d, fits, base, {1.0, 0.0});
    collapse_ok = collapse_ok && std::abs(lo - point) < 1e-12 &&
                  std::abs(hi - point) < 1e-12;
  }
  c.expect(collapse_ok, "marginal bounds collapse at gamma=1, lambda=0");

  // zero linear box reproduces the plain percentile interval bit for bit
  const auto gen = sim::generate({sim::Scenario::i, 500, 7100, 0});
  EstimatorRecipe recipe;
  recipe.kind = EstimatorKind::reg;
  recipe.mu = sim::sim_mu_design(true);
  BootstrapOptions options;
  options.b = 200;
  options.seed = 99;
  options.threads = g_threads;
  const EstimateResult plain = bootstrap(gen.data, recipe, options);
  const SensitivityResult zero = linear_ci(gen.data, recipe, LinearBox{}, options);
  c.expect(zero.ci_lo == plain.ci_lo && zero.ci_hi == plain.ci_hi,
           "zero-box union interval equals the percentile interval bit-exactly");

  // corner selection vs exhaustive corner search with four covariates
  Eigen::MatrixXd x(12, 4);
  x << 0.5, -1.2, 0.3, 0.9, -0.3, 0.8, -1.1, 0.2, 1.1, 0.4, 0.6, -0.8, -0.7, -0.5,
      1.4, 0.1, 0.2, 1.5, -0.9, 1.2, 0.9, -0.9, 0.8, -1.5, -1.4, 0.1, -0.2, 0.6,
      0.6, 0.7, 1.0, -0.3, 0.8, -0.2, -0.5, 0.4, -0.6, 1.1, 0.2, -0.9, 1.3, 0.5,
      -1.0, 0.7, -0.2, -1.3, 0.9, 1.1;
  Eigen::VectorXd y(12), a(12), s(12);
  y << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
  a << 1, 1, 1, 0, 0, 0, 1, 1, 1, 0, 0, 0;
  s << 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0;
  const Dataset d4 = Dataset::create(y, a, s, x, {"X1", "X2", "X3", "X4"});
  LinearBox box;
  box.gamma_lo = -0.15;
  box.gamma_hi = 0.08;
  box.lambda_lo = -0.06;
  box.lambda_hi = 0.02;
  box.gamma_overrides[3] = {-0.4, -0.1};
  const double theta_hat = 0.7;
  const auto [lo, hi] = linear_bounds(theta_hat, d4, box);

  Eigen::VectorXd xbar = Eigen::VectorXd::Zero(4);
  double n11 = 0;
  for (Eigen::Index i = 0; i < d4.n(); ++i) {
    if (s[i] == 1 && a[i] == 1) {
      xbar += x.row(i).transpose();
      n11 += 1;
    }
  }
  xbar /= n11;
  const int coords = 5;
  double best_lo = 1e300, best_hi = -1e300;
  for (int mask = 0; mask < (1 << (2 * coords)); ++mask) {
    double value = theta_hat;
    for (int coord = 0; coord < coords; ++coord) {
      const auto [glo, ghi] = box.gamma_range(coord);
      const auto [llo, lhi] = box.lambda_range(coord);
      const double delta = (mask >> coord & 1) ? ghi : glo;
      const double lam = (mask >> (coords + coord) & 1) ? lhi : llo;
      const double mult = coord == 0 ? 1.0 : xbar[coord - 1];
      value += -mult * delta + mult * lam;
    }
    best_lo = std::min(best_lo, value);
    best_hi = std::max(best_hi, value);
  }
  c.expect(std::abs(lo - best_lo) < 1e-12 && std::abs(hi - best_hi) < 1e-12,
           "corner selection equals the exhaustive 1024-corner search");
}

// ---------------------------------------------------------------------------
// Criterion 8: CLI byte determinism across runs and thread counts.

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const std::string& stdout_path) {
  const std::string cmd = std::string(PLACEBO_CLI_PATH) + " " + args + " > " +
                          stdout_path + " 2>/dev/null";
  return std::system(cmd.c_str());
}

void criterion_8(Checker& c) {
  if (std::system("mkdir -p acceptance_tmp") != 0) {
    c.expect(false, "could not create the scratch directory");
    return;
  }
  const auto gen = sim::generate({sim::Scenario::i, 600, 8800, 0});
  write_csv(gen.data, "acceptance_tmp/data.csv");

  const std::string est_args =
      "estimate --data acceptance_tmp/data.csv --covariates X1,X2,X3 "
      "--estimator dr --se bootstrap --boot-reps 120 --alpha 0.05 --seed 31";
  int rc = 0;
  rc |= run_cli(est_args + " --threads 1", "acceptance_tmp/est1.json");
  rc |= run_cli(est_args + " --threads 1", "acceptance_tmp/est2.json");
  rc |= run_cli(est_args + " --threads 4", "acceptance_tmp/est4.json");
  c.expect(rc == 0, "estimate runs exit cleanly");
  const std::string est1 = slurp("acceptance_tmp/est1.json");
  c.expect(!est1.empty() && est1 == slurp("acceptance_tmp/est2.json") &&
               est1 == slurp("acceptance_tmp/est4.json"),
           "estimate output is byte-identical across runs and thread counts");

  const std::string sim_args =
      "simulate --scenario II --reps 24 --n 300 --boot-reps 60 --seed 12 "
      "--out-csv acceptance_tmp/report";
  rc = 0;
  rc |= run_cli(sim_args + "_t1.csv --threads 1", "acceptance_tmp/sim1.txt");
  rc |= run_cli(sim_args + "_t4.csv --threads 4", "acceptance_tmp/sim4.txt");
  c.expect(rc == 0, "simulate runs exit cleanly");
  const std::string csv1 = slurp("acceptance_tmp/report_t1.csv");
  c.expect(!csv1.empty() && csv1 == slurp("acceptance_tmp/report_t4.csv") &&
               slurp("acceptance_tmp/sim1.txt") == slurp("acceptance_tmp/sim4.txt"),
           "simulate outputs are byte-identical across thread counts");

  const std::string sens_args =
      "sensitivity --data acceptance_tmp/data.csv --covariates X1,X2,X3 "
      "--estimator reg --model linear --gamma-l -0.1 --gamma-u 0.1 "
      "--boot-reps 80 --seed 77";
  rc = 0;
  rc |= run_cli(sens_args + " --threads 1", "acceptance_tmp/sens1.json");
  rc |= run_cli(sens_args + " --threads 3", "acceptance_tmp/sens3.json");
  c.expect(rc == 0, "sensitivity runs exit cleanly");
  const std::string sens1 = slurp("acceptance_tmp/sens1.json");
  c.expect(!sens1.empty() && sens1 == slurp("acceptance_tmp/sens3.json"),
           "sensitivity output is byte-identical across thread counts");
}

int report(int id, const std::string& name, Checker& c) {
  const bool pass = c.failures.empty();
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, name.c_str());
  for (const auto& note : c.notes) std::printf("         ok: %s\n", note.c_str());
  for (const auto& fail : c.failures) std::printf("     FAILED: %s\n", fail.c_str());
  std::fflush(stdout);
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_threads = std::atoi(argv[1]);
  std::printf("acceptance suite (threads = %d)\n", g_threads);
  int failures = 0;

  {
    Checker c1, c2;
    try {
      const sim::SimReport scen1 = scenario_study(sim::Scenario::i, 2025);
      criterion_1(c1, scen1);
      criterion_2(c2, scen1);
    } catch (const std::exception& e) {
      c1.expect(false, std::string("study failed: ") + e.what());
      c2.expect(false, std::string("study failed: ") + e.what());
    }
    failures += report(1, "scenario I operating characteristics", c1);
    failures += report(2, "double robustness across specification regimes", c2);
  }
  {
    Checker c;
    try {
      criterion_3(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("study failed: ") + e.what());
    }
    failures += report(3, "supplementary-scenario spot checks", c);
  }
  {
    Checker c;
    criterion_4(c);
    failures += report(4, "term-by-term oracle equivalence", c);
  }
  {
    Checker c;
    criterion_5(c);
    failures += report(5, "influence-function zero identity", c);
  }
  {
    Checker c;
    criterion_6(c);
    failures += report(6, "sandwich variance validity", c);
  }
  {
    Checker c;
    criterion_7(c);
    failures += report(7, "sensitivity degeneracies and exact corners", c);
  }
  {
    Checker c;
    criterion_8(c);
    failures += report(8, "byte determinism of the command line", c);
  }

  std::printf("%d of 8 criteria failed\n", failures);
  return failures;
}
