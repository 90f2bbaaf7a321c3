#include "placebo/design.hpp"

#include <algorithm>
#include <sstream>

#include "placebo/errors.hpp"

namespace placebo {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

int covariate_index(const std::string& name,
                    const std::vector<std::string>& covariate_names) {
  for (std::size_t j = 0; j < covariate_names.size(); ++j) {
    if (covariate_names[j] == name) return static_cast<int>(j);
  }
  return -1;
}

}  // namespace

std::string term_to_string(const Term& term,
                           const std::vector<std::string>& covariate_names) {
  if (term.is_intercept()) return "1";
  std::vector<std::string> factors;
  if (term.with_s) factors.push_back("S");
  if (term.with_a) factors.push_back("A");
  for (int j : term.covariates) {
    factors.push_back(covariate_names[static_cast<std::size_t>(j)]);
  }
  std::string out = factors[0];
  for (std::size_t k = 1; k < factors.size(); ++k) out += ":" + factors[k];
  return out;
}

DesignSpec DesignSpec::parse(const std::string& text,
                             const std::vector<std::string>& covariate_names,
                             Link link) {
  for (const auto& name : covariate_names) {
    if (name == "1" || name == "S" || name == "A") {
      throw DataError(errc::invalid_argument,
                      "covariate name '" + name + "' collides with a reserved term factor");
    }
  }
  DesignSpec spec;
  spec.link = link;
  for (const std::string& raw_term : split(text, '+')) {
    const std::string term_text = trim(raw_term);
    if (term_text.empty()) {
      throw DataError(errc::invalid_term, "empty term in design '" + text + "'");
    }
    Term term;
    bool intercept = false;
    for (const std::string& raw_factor : split(term_text, ':')) {
      const std::string factor = trim(raw_factor);
      if (factor == "1") {
        intercept = true;
      } else if (factor == "S") {
        if (term.with_s) throw DataError(errc::invalid_term, "repeated S factor in '" + term_text + "'");
        term.with_s = true;
      } else if (factor == "A") {
        if (term.with_a) throw DataError(errc::invalid_term, "repeated A factor in '" + term_text + "'");
        term.with_a = true;
      } else {
        const int j = covariate_index(factor, covariate_names);
        if (j < 0) {
          throw DataError(errc::missing_column,
                          "unknown covariate '" + factor + "' in design term '" + term_text + "'");
        }
        term.covariates.push_back(j);
      }
    }
    if (intercept && (term.with_s || term.with_a || !term.covariates.empty())) {
      throw DataError(errc::invalid_term, "'1' cannot be combined with other factors");
    }
    if (term.covariates.size() > 2) {
      throw DataError(errc::invalid_term,
                      "term '" + term_text + "' multiplies more than two covariates");
    }
    std::sort(term.covariates.begin(), term.covariates.end());
    if (term.covariates.size() == 2 && term.covariates[0] == term.covariates[1]) {
      throw DataError(errc::invalid_term, "term '" + term_text + "' squares a covariate");
    }
    spec.terms.push_back(std::move(term));
  }
  return spec;
}

std::string DesignSpec::format(const std::vector<std::string>& covariate_names) const {
  std::string out;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (k > 0) out += " + ";
    out += term_to_string(terms[k], covariate_names);
  }
  return out;
}

void DesignSpec::validate(Eigen::Index n_covariates, DesignRole role) const {
  if (terms.empty()) {
    throw DataError(errc::invalid_term, "design has no terms");
  }
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const Term& t = terms[k];
    for (int j : t.covariates) {
      if (j < 0 || j >= n_covariates) {
        throw DataError(errc::invalid_term, "design references covariate index out of range");
      }
    }
    for (std::size_t l = k + 1; l < terms.size(); ++l) {
      if (t == terms[l]) {
        throw DataError(errc::duplicate_term, "duplicate design term");
      }
    }
    if (role == DesignRole::propensity_s && (t.with_s || t.with_a)) {
      throw DataError(errc::invalid_term,
                      "sample-propensity design must not reference S or A");
    }
    if (role == DesignRole::propensity_a && t.with_a) {
      throw DataError(errc::invalid_term,
                      "treatment-propensity design must not reference A");
    }
  }
}

DesignSpec DesignSpec::main_effects(Eigen::Index n_covariates, bool with_s, Link link) {
  DesignSpec spec;
  spec.link = link;
  spec.terms.push_back(Term{});  // intercept
  for (Eigen::Index j = 0; j < n_covariates; ++j) {
    Term t;
    t.covariates.push_back(static_cast<int>(j));
    spec.terms.push_back(std::move(t));
  }
  if (with_s) {
    Term t;
    t.with_s = true;
    spec.terms.push_back(std::move(t));
  }
  return spec;
}

double DesignSpec::eval_term(const Term& term, double s_val, double a_val,
                             const Eigen::RowVectorXd& xrow) const {
  double v = 1.0;
  if (term.with_s) v *= s_val;
  if (term.with_a) v *= a_val;
  for (int j : term.covariates) v *= xrow[j];
  return v;
}

Eigen::RowVectorXd DesignSpec::row(double s_val, double a_val,
                                   const Eigen::RowVectorXd& xrow) const {
  Eigen::RowVectorXd out(size());
  for (Eigen::Index k = 0; k < size(); ++k) {
    out[k] = eval_term(terms[static_cast<std::size_t>(k)], s_val, a_val, xrow);
  }
  return out;
}

Eigen::MatrixXd DesignSpec::matrix(const Dataset& d) const {
  return matrix_at(d, -1, -1);
}

Eigen::MatrixXd DesignSpec::matrix_at(const Dataset& d, int s_override,
                                      int a_override) const {
  Eigen::MatrixXd m(d.n(), size());
  for (Eigen::Index k = 0; k < size(); ++k) {
    const Term& term = terms[static_cast<std::size_t>(k)];
    Eigen::VectorXd col = Eigen::VectorXd::Ones(d.n());
    if (term.with_s) {
      if (s_override >= 0) {
        col *= static_cast<double>(s_override);
      } else {
        col.array() *= d.s.array();
      }
    }
    if (term.with_a) {
      if (a_override >= 0) {
        col *= static_cast<double>(a_override);
      } else {
        col.array() *= d.a.array();
      }
    }
    for (int j : term.covariates) col.array() *= d.x.col(j).array();
    m.col(k) = col;
  }
  return m;
}

}  // namespace placebo
