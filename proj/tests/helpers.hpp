#pragma once
// Shared fixtures for the unit tests.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "placebo/dataset.hpp"
#include "placebo/design.hpp"
#include "placebo/glm.hpp"

namespace test_helpers {

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) out[i++] = v;
  return out;
}

// Eight rows covering every (s, a) cell twice, two covariates, nonnegative
// outcomes so the marginal sensitivity model applies too.
inline placebo::Dataset small_dataset() {
  Eigen::MatrixXd x(8, 2);
  x << 0.5, -1.2,
      -0.3, 0.8,
       1.1, 0.4,
      -0.7, -0.5,
       0.2, 1.5,
       0.9, -0.9,
      -1.4, 0.1,
       0.6, 0.7;
  return placebo::Dataset::create(
      vec({2.0, 1.5, 3.0, 0.5, 2.5, 1.0, 0.8, 1.7}),
      vec({1, 1, 0, 0, 1, 1, 0, 0}),
      vec({1, 1, 1, 1, 0, 0, 0, 0}),
      x, {"X1", "X2"});
}

// Supplied-coefficient nuisance fits over small_dataset's two covariates.
inline placebo::GlmFit supplied_mu() {
  auto spec = placebo::DesignSpec::parse("1 + X1 + X2 + S + A + S:A",
                                         {"X1", "X2"}, placebo::Link::identity);
  return placebo::GlmFit::from_coefficients(
      spec, placebo::Response::outcome, vec({0.5, 1.0, -0.7, 0.3, 0.8, 0.6}));
}

inline placebo::GlmFit supplied_pis() {
  auto spec = placebo::DesignSpec::parse("1 + X1 + X2", {"X1", "X2"},
                                         placebo::Link::logit);
  return placebo::GlmFit::from_coefficients(
      spec, placebo::Response::sample_indicator, vec({0.2, -0.4, 0.1}));
}

inline placebo::GlmFit supplied_pia() {
  auto spec = placebo::DesignSpec::parse("1 + X1 + X2 + S", {"X1", "X2"},
                                         placebo::Link::logit);
  return placebo::GlmFit::from_coefficients(
      spec, placebo::Response::treatment, vec({-0.1, 0.3, -0.2, 0.25}));
}

}  // namespace test_helpers
