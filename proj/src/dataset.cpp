#include "placebo/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "placebo/design.hpp"
#include "placebo/errors.hpp"
#include "placebo/glm.hpp"

namespace placebo {

namespace {

bool is_binary01(double v) { return v == 0.0 || v == 1.0; }

std::string cell_name(int s_val, int a_val) {
  return "(" + std::to_string(s_val) + "," + std::to_string(a_val) + ")";
}

}  // namespace

std::array<long, 4> Dataset::cell_counts() const {
  std::array<long, 4> counts{0, 0, 0, 0};
  for (Eigen::Index i = 0; i < n(); ++i) {
    counts[static_cast<std::size_t>(2 * static_cast<int>(s[i]) +
                                    static_cast<int>(a[i]))]++;
  }
  return counts;
}

long Dataset::cell_count(int s_val, int a_val) const {
  return cell_counts()[static_cast<std::size_t>(2 * s_val + a_val)];
}

double Dataset::n11() const {
  double total = 0.0;
  for (Eigen::Index i = 0; i < n(); ++i) total += weights[i] * s[i] * a[i];
  return total;
}

void Dataset::validate(bool require_all_cells) const {
  const Eigen::Index rows = y.size();
  if (rows == 0) throw DataError(errc::empty_file, "dataset has no rows");
  if (a.size() != rows || s.size() != rows || x.rows() != rows ||
      weights.size() != rows) {
    throw DataError(errc::shape_mismatch, "dataset columns have unequal lengths");
  }
  if (static_cast<Eigen::Index>(covariate_names.size()) != x.cols()) {
    throw DataError(errc::shape_mismatch,
                    "covariate_names does not match covariate count");
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!std::isfinite(y[i])) {
      throw DataError(errc::non_finite_value,
                      "non-finite outcome at row " + std::to_string(i));
    }
    if (!is_binary01(a[i])) {
      throw DataError(errc::non_binary_value,
                      "non-binary treatment at row " + std::to_string(i));
    }
    if (!is_binary01(s[i])) {
      throw DataError(errc::non_binary_value,
                      "non-binary sample indicator at row " + std::to_string(i));
    }
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw DataError(errc::bad_weight,
                      "non-positive weight at row " + std::to_string(i));
    }
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (!std::isfinite(x(i, j))) {
        throw DataError(errc::non_finite_value,
                        "non-finite covariate " + covariate_names[static_cast<std::size_t>(j)] +
                            " at row " + std::to_string(i));
      }
    }
  }
  const auto counts = cell_counts();
  if (counts[3] < 1) {
    throw DataError(errc::empty_cell, "empty cell (1,1): no treated primary rows");
  }
  if (require_all_cells) {
    for (int sv = 0; sv <= 1; ++sv) {
      for (int av = 0; av <= 1; ++av) {
        if (counts[static_cast<std::size_t>(2 * sv + av)] == 0) {
          throw DataError(errc::empty_cell, "empty cell " + cell_name(sv, av));
        }
      }
    }
  }
}

Dataset Dataset::create(Eigen::VectorXd y, Eigen::VectorXd a, Eigen::VectorXd s,
                        Eigen::MatrixXd x, std::vector<std::string> covariate_names,
                        std::optional<Eigen::VectorXd> weights) {
  Dataset d;
  d.y = std::move(y);
  d.a = std::move(a);
  d.s = std::move(s);
  d.x = std::move(x);
  d.covariate_names = std::move(covariate_names);
  d.weights = weights ? std::move(*weights)
                      : Eigen::VectorXd::Ones(d.y.size()).eval();
  d.validate(/*require_all_cells=*/true);
  return d;
}

Dataset Dataset::resample(const std::vector<std::int32_t>& indices) const {
  Dataset out;
  const auto m = static_cast<Eigen::Index>(indices.size());
  out.y.resize(m);
  out.a.resize(m);
  out.s.resize(m);
  out.weights.resize(m);
  out.x.resize(m, p());
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto i = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(k)]);
    out.y[k] = y[i];
    out.a[k] = a[i];
    out.s[k] = s[i];
    out.weights[k] = weights[i];
    out.x.row(k) = x.row(i);
  }
  out.covariate_names = covariate_names;
  return out;
}

Dataset Dataset::primary_subset() const {
  std::vector<std::int32_t> idx;
  idx.reserve(static_cast<std::size_t>(n()));
  for (Eigen::Index i = 0; i < n(); ++i) {
    if (s[i] == 1.0) idx.push_back(static_cast<std::int32_t>(i));
  }
  return resample(idx);
}

Dataset Dataset::with_shifted_outcome(double shift) const {
  Dataset out = *this;
  out.y.array() += shift;
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_number(const std::string& token, Eigen::Index row,
                    const std::string& column) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  // the whole token must be consumed (allowing surrounding spaces)
  while (end && *end == ' ') ++end;
  const char* scan = begin;
  while (*scan == ' ') ++scan;
  if (token.empty() || scan == end || (end && *end != '\0')) {
    throw DataError(errc::non_numeric_cell, "non-numeric value '" + token +
                                                "' in column " + column +
                                                " at row " + std::to_string(row));
  }
  if (!std::isfinite(v)) {
    throw DataError(errc::non_finite_value, "non-finite value in column " +
                                                column + " at row " +
                                                std::to_string(row));
  }
  return v;
}

std::size_t find_column(const std::vector<std::string>& header,
                        const std::string& name) {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return j;
  }
  throw DataError(errc::missing_column, "missing column '" + name + "'");
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvColumns& columns) {
  std::ifstream in(path);
  if (!in) {
    throw DataError(errc::missing_column, "cannot open file '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(errc::empty_file, "empty file '" + path + "'");
  }
  const auto header = split_line(line);
  const std::size_t y_col = find_column(header, columns.outcome);
  const std::size_t a_col = find_column(header, columns.treatment);
  const std::size_t s_col = find_column(header, columns.placebo);
  std::vector<std::size_t> x_cols;
  x_cols.reserve(columns.covariates.size());
  for (const auto& name : columns.covariates) {
    x_cols.push_back(find_column(header, name));
  }
  std::optional<std::size_t> w_col;
  if (columns.weight) w_col = find_column(header, *columns.weight);

  std::vector<double> ys, as, ss, ws;
  std::vector<std::vector<double>> xs(x_cols.size());
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    if (line.empty() && in.eof()) break;
    const auto fields = split_line(line);
    if (fields.size() != header.size()) {
      throw DataError(errc::shape_mismatch,
                      "row " + std::to_string(row) + " has " +
                          std::to_string(fields.size()) + " fields, expected " +
                          std::to_string(header.size()));
    }
    ys.push_back(parse_number(fields[y_col], row, columns.outcome));
    const double av = parse_number(fields[a_col], row, columns.treatment);
    if (!is_binary01(av)) {
      throw DataError(errc::non_binary_value,
                      "non-binary treatment at row " + std::to_string(row));
    }
    as.push_back(av);
    const double sv = parse_number(fields[s_col], row, columns.placebo);
    if (!is_binary01(sv)) {
      throw DataError(errc::non_binary_value,
                      "non-binary sample indicator at row " + std::to_string(row));
    }
    ss.push_back(sv);
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
      xs[j].push_back(parse_number(fields[x_cols[j]], row, columns.covariates[j]));
    }
    if (w_col) ws.push_back(parse_number(fields[*w_col], row, *columns.weight));
    ++row;
  }
  if (row == 0) {
    throw DataError(errc::empty_file, "file '" + path + "' has no data rows");
  }

  const auto n = static_cast<Eigen::Index>(row);
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  Eigen::VectorXd a = Eigen::Map<Eigen::VectorXd>(as.data(), n);
  Eigen::VectorXd s = Eigen::Map<Eigen::VectorXd>(ss.data(), n);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(x_cols.size()));
  for (std::size_t j = 0; j < x_cols.size(); ++j) {
    x.col(static_cast<Eigen::Index>(j)) = Eigen::Map<Eigen::VectorXd>(xs[j].data(), n);
  }
  std::optional<Eigen::VectorXd> w;
  if (w_col) w = Eigen::Map<Eigen::VectorXd>(ws.data(), n);
  return Dataset::create(std::move(y), std::move(a), std::move(s), std::move(x),
                         columns.covariates, std::move(w));
}

void write_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError(errc::invalid_argument, "cannot write file '" + path + "'");
  }
  out << "y,a,s";
  for (const auto& name : d.covariate_names) out << "," << name;
  out << ",w\n";
  char buf[64];
  auto put = [&](double v, bool lead_comma) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    if (lead_comma) out << ",";
    out << buf;
  };
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    put(d.y[i], false);
    put(d.a[i], true);
    put(d.s[i], true);
    for (Eigen::Index j = 0; j < d.p(); ++j) put(d.x(i, j), true);
    put(d.weights[i], true);
    out << "\n";
  }
}

PositivityReport positivity_check(const Dataset& d, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw DataError(errc::invalid_argument, "epsilon must be in (0, 0.5)");
  }
  d.validate(/*require_all_cells=*/true);

  PositivityReport report;
  report.cell_counts = d.cell_counts();
  report.epsilon = epsilon;

  // Main-effects diagnostic designs; these are not the analysis models.
  DesignSpec pis_spec = DesignSpec::main_effects(d.p(), /*with_s=*/false, Link::logit);
  DesignSpec pia_spec = DesignSpec::main_effects(d.p(), /*with_s=*/true, Link::logit);
  GlmFit pis_fit, pia_fit;
  try {
    pis_fit = fit_logistic(d, pis_spec, Response::sample_indicator);
    pia_fit = fit_logistic(d, pia_spec, Response::treatment);
  } catch (const Error&) {
    return report;  // diagnostic unavailable
  }
  if (!pis_fit.converged || !pia_fit.converged) {
    return report;  // diagnostic unavailable
  }

  report.diagnostic_available = true;
  report.min_pi_s = 1.0;
  report.max_pi_s = 0.0;
  report.min_pi_a = 1.0;
  report.max_pi_a = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double ps = predict_pi(pis_fit, d.x.row(i));
    const double pa = predict_pi(pia_fit, d.x.row(i), d.s[i]);
    report.min_pi_s = std::min(report.min_pi_s, ps);
    report.max_pi_s = std::max(report.max_pi_s, ps);
    report.min_pi_a = std::min(report.min_pi_a, pa);
    report.max_pi_a = std::max(report.max_pi_a, pa);
    const bool inside = ps >= epsilon && ps <= 1.0 - epsilon && pa >= epsilon &&
                        pa <= 1.0 - epsilon;
    if (!inside) report.flagged_rows.push_back(i);
  }
  return report;
}

}  // namespace placebo
