#pragma once
// Model design specifications: a term is an optional S/A factor times up to
// two covariates. The text grammar joins factors with ':' and terms with '+',
// e.g. "1 + X1 + X2:X3 + S + A + S:A + S:X2:X3".

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "placebo/dataset.hpp"

namespace placebo {

enum class Link { identity, logit };

struct Term {
  bool with_s = false;
  bool with_a = false;
  std::vector<int> covariates;  // 0-based indices, sorted, at most two

  bool is_intercept() const { return !with_s && !with_a && covariates.empty(); }
  bool references_s() const { return with_s; }
  bool references_a() const { return with_a; }

  bool operator==(const Term& other) const = default;
};

// What a design is allowed to reference, by the model it feeds.
enum class DesignRole {
  outcome_mu,    // any term
  propensity_s,  // covariate-only terms
  propensity_a,  // no A-bearing terms (S is allowed)
};

struct DesignSpec {
  std::vector<Term> terms;
  Link link = Link::identity;

  Eigen::Index size() const { return static_cast<Eigen::Index>(terms.size()); }

  // Parse the text grammar against a covariate-name list.
  static DesignSpec parse(const std::string& text,
                          const std::vector<std::string>& covariate_names,
                          Link link);

  std::string format(const std::vector<std::string>& covariate_names) const;

  // Nonempty, duplicate-free, references within range, role rules.
  void validate(Eigen::Index n_covariates, DesignRole role) const;

  // Intercept plus all covariate main effects (plus S when requested).
  static DesignSpec main_effects(Eigen::Index n_covariates, bool with_s, Link link);

  double eval_term(const Term& term, double s_val, double a_val,
                   const Eigen::RowVectorXd& xrow) const;

  // One design row with explicit (s, a); every S/A-bearing term uses the
  // supplied values, which is how counterfactual predictions substitute.
  Eigen::RowVectorXd row(double s_val, double a_val,
                         const Eigen::RowVectorXd& xrow) const;

  // n x k design matrix at each data row's own (s, a).
  Eigen::MatrixXd matrix(const Dataset& d) const;

  // n x k design matrix with (s, a) overridden for every row; negative
  // override keeps the row's own value.
  Eigen::MatrixXd matrix_at(const Dataset& d, int s_override, int a_override) const;
};

std::string term_to_string(const Term& term,
                           const std::vector<std::string>& covariate_names);

}  // namespace placebo
