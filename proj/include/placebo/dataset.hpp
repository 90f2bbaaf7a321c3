#pragma once
// Observed-data container plus CSV ingestion and positivity diagnostics.
//
// A row is (y outcome, a treatment in {0,1}, s sample indicator in {0,1},
// x covariates, optional frequency weight). s = 1 marks the primary sample,
// s = 0 the placebo sample. Datasets are immutable after construction and
// safe to share across threads.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace placebo {

struct Dataset {
  Eigen::VectorXd y;
  Eigen::VectorXd a;
  Eigen::VectorXd s;
  Eigen::MatrixXd x;  // n x p
  std::vector<std::string> covariate_names;
  Eigen::VectorXd weights;  // frequency weights, all 1 by default

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return x.cols(); }

  // Raw row counts by cell; index = 2*s + a.
  std::array<long, 4> cell_counts() const;
  long cell_count(int s_val, int a_val) const;

  double weight_total() const { return weights.sum(); }
  // Weighted size of the (s=1, a=1) target stratum.
  double n11() const;

  // Fully validated construction: shapes agree, a/s binary, everything
  // finite, weights positive, all four (s,a) cells nonempty.
  static Dataset create(Eigen::VectorXd y, Eigen::VectorXd a, Eigen::VectorXd s,
                        Eigen::MatrixXd x, std::vector<std::string> covariate_names,
                        std::optional<Eigen::VectorXd> weights = std::nullopt);

  // Row-gather used by the bootstrap. Skips the four-cell check: a resample
  // may empty a cell, which downstream fitting reports as a failure.
  Dataset resample(const std::vector<std::int32_t>& indices) const;

  // The s = 1 stratum, for the naive single-sample estimators. Also skips
  // the four-cell check.
  Dataset primary_subset() const;

  // Returns a copy with y shifted by the given constant.
  Dataset with_shifted_outcome(double shift) const;

  void validate(bool require_all_cells) const;
};

struct CsvColumns {
  std::string outcome;
  std::string treatment;
  std::string placebo;  // the sample-indicator column (1 = primary)
  std::vector<std::string> covariates;
  std::optional<std::string> weight;
};

Dataset load_csv(const std::string& path, const CsvColumns& columns);

// Inverse of load_csv up to float round-trip; writes 17 significant digits.
void write_csv(const Dataset& d, const std::string& path);

struct PositivityReport {
  std::array<long, 4> cell_counts;  // index = 2*s + a
  double epsilon = 0.0;
  bool diagnostic_available = false;  // false when a diagnostic fit failed
  double min_pi_s = 0.0, max_pi_s = 0.0;
  double min_pi_a = 0.0, max_pi_a = 0.0;  // pi_a at each row's own s
  // Rows whose fitted pi_s or pi_a falls outside [epsilon, 1 - epsilon].
  std::vector<Eigen::Index> flagged_rows;
};

// Diagnostic only: fits main-effects logistic models for pi_s(x) and
// pi_a(x, s) and reports fitted-probability tails. Never a hard failure;
// a non-convergent fit sets diagnostic_available = false.
PositivityReport positivity_check(const Dataset& d, double epsilon = 0.01);

}  // namespace placebo
