#include "keyminer/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "keyminer/error.hpp"
#include "keyminer/objective.hpp"
#include "keyminer/planner.hpp"

namespace keyminer {

double RegressionModel::coefficient(const std::string& input) const {
  for (const auto& [name, value] : coefficients) {
    if (name == input) return value;
  }
  throw Error("model has no input '" + input + "'");
}

double RegressionModel::predict(const Row& row, const Table& table) const {
  double y = intercept;
  for (const auto& [name, value] : coefficients) {
    const auto c = table.find_column(name);
    if (!c) throw Error("table has no column '" + name + "'");
    y += value * regression_value(table.column(*c), row.cells[*c]);
  }
  return y;
}

nlohmann::json to_json(const RegressionModel& m) {
  nlohmann::json coef = nlohmann::json::object();
  for (const auto& [name, value] : m.coefficients) coef[name] = value;
  return {{"target", m.target},
          {"coefficients", std::move(coef)},
          {"intercept", m.intercept},
          {"rows_used", m.rows_used}};
}

double regression_value(const Column& col, double cell) {
  if (is_missing(cell) || col.numeric()) return cell;
  const auto& text = col.symbols.at(static_cast<std::size_t>(cell));
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec == std::errc() && ptr == text.data() + text.size()) return v;
  return cell;
}

RegressionModel ols_fit(const Table& table, std::size_t target,
                        std::span<const std::size_t> inputs) {
  const std::size_t p = inputs.size();
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (const auto& row : table.rows()) {
    const double t = row.cells[target];
    if (is_missing(t)) continue;
    std::vector<double> xi;
    bool complete = true;
    for (const std::size_t c : inputs) {
      const double v = row.cells[c];
      if (is_missing(v)) {
        complete = false;
        break;
      }
      xi.push_back(regression_value(table.column(c), v));
    }
    if (!complete) continue;
    x.push_back(std::move(xi));
    y.push_back(table.column(target).numeric()
                    ? t
                    : regression_value(table.column(target), t));
  }
  const std::size_t n = y.size();
  if (n <= p + 1) {
    throw Error("ols: " + std::to_string(n) + " complete rows for " +
                std::to_string(p) + " inputs; need more than " + std::to_string(p + 1));
  }

  // Standardize the inputs so the jitter and the singularity test are scale free.
  std::vector<double> mean(p, 0), sd(p, 0);
  double ymean = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ymean += y[i];
    for (std::size_t j = 0; j < p; ++j) mean[j] += x[i][j];
  }
  ymean /= static_cast<double>(n);
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) sd[j] += (x[i][j] - mean[j]) * (x[i][j] - mean[j]);
  }
  for (std::size_t j = 0; j < p; ++j) {
    sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
    if (!(sd[j] > 0)) {
      throw Error("ols: input '" + table.column(inputs[j]).name +
                  "' is constant (collinear with the intercept)");
    }
  }

  // A = Z'Z / n, rhs = Z'(y - ymean) / n. The jitter belongs on the diagonal
  // of the centered X'X, which is n sd_j^2 times A_jj.
  std::vector<std::vector<double>> a(p, std::vector<double>(p, 0));
  std::vector<double> rhs(p, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> z(p);
    for (std::size_t j = 0; j < p; ++j) z[j] = (x[i][j] - mean[j]) / sd[j];
    for (std::size_t j = 0; j < p; ++j) {
      rhs[j] += z[j] * (y[i] - ymean);
      for (std::size_t k = 0; k <= j; ++k) a[j][k] += z[j] * z[k];
    }
  }
  for (std::size_t j = 0; j < p; ++j) {
    rhs[j] /= static_cast<double>(n);
    for (std::size_t k = 0; k <= j; ++k) {
      a[j][k] /= static_cast<double>(n);
      a[k][j] = a[j][k];
    }
    a[j][j] += kRidgeJitter / (static_cast<double>(n) * sd[j] * sd[j]);
  }

  // Cholesky. A tiny pivot means column j is (almost) a linear combination
  // of the columns before it.
  std::vector<std::vector<double>> l(p, std::vector<double>(p, 0));
  for (std::size_t j = 0; j < p; ++j) {
    double d = a[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    if (d < 1e-7) {
      std::string others;
      for (std::size_t k = 0; k < j; ++k) {
        others += (k ? ", " : "") + table.column(inputs[k]).name;
      }
      throw Error("ols: input '" + table.column(inputs[j]).name +
                  "' is collinear with " + (others.empty() ? "the intercept" : others));
    }
    l[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < p; ++i) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = s / l[j][j];
    }
  }
  std::vector<double> w(p), beta(p);
  for (std::size_t i = 0; i < p; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i][k] * w[k];
    w[i] = s / l[i][i];
  }
  for (std::size_t ii = p; ii-- > 0;) {
    double s = w[ii];
    for (std::size_t k = ii + 1; k < p; ++k) s -= l[k][ii] * beta[k];
    beta[ii] = s / l[ii][ii];
  }

  RegressionModel m;
  m.target = table.column(target).name;
  m.rows_used = n;
  m.intercept = ymean;
  for (std::size_t j = 0; j < p; ++j) {
    const double raw = beta[j] / sd[j];
    m.coefficients.emplace_back(table.column(inputs[j]).name, raw);
    m.intercept -= raw * mean[j];
  }
  return m;
}

nlohmann::json to_json(const BaselineResult& r) {
  auto trace = nlohmann::json::array();
  for (const auto& s : r.trace) trace.push_back({{"row", s.row}, {"d2h", s.d2h}});
  return {{"best_row", r.best_row},
          {"best_d2h", r.best_d2h},
          {"budget", r.budget},
          {"trace", std::move(trace)},
          {"warnings", r.warnings},
          {"dataset_hash", r.dataset_hash}};
}

BaselineResult random_search_baseline(const Table& table, std::size_t budget, Rng& rng) {
  if (budget < 1) throw ConfigError("baseline budget must be at least 1");
  if (table.goals().empty()) throw ConfigError("baseline needs at least one goal column");
  if (table.size() == 0) throw ConfigError("baseline needs a non-empty table");
  BaselineResult r;
  r.dataset_hash = table.content_hash();
  if (budget > table.size()) {
    r.warnings.push_back("budget " + std::to_string(budget) + " clamped to " +
                         std::to_string(table.size()) + " rows");
    budget = table.size();
  }
  r.budget = budget;
  const auto picks = rng.sample(table.all_ids(), budget);
  for (const std::size_t id : picks) {
    const double d = distance_to_heaven(goal_vector(table.row(id), table));
    r.trace.push_back({id, d});
    if (r.trace.size() == 1 || d < r.best_d2h) {
      r.best_d2h = d;
      r.best_row = id;
    }
  }
  return r;
}

std::vector<double> d2h_of(std::span<const std::size_t> rows, const Table& table) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const std::size_t id : rows) {
    out.push_back(distance_to_heaven(goal_vector(table.row(id), table)));
  }
  return out;
}

ComparisonReport compare(const KeysResult& keys, const BaselineResult& baseline,
                         const Table& table) {
  if (keys.dataset_hash != table.content_hash() ||
      baseline.dataset_hash != table.content_hash()) {
    throw Error("compare: runs were made on a different table");
  }
  ComparisonReport rep;
  rep.table_median_d2h = median(d2h_of(table.all_ids(), table));

  MethodStats k;
  k.method = "keys";
  k.evaluations = keys.evaluations_used;
  k.questions = keys.questions_asked;
  k.no_keys = keys.no_keys();
  k.constraints = keys.describe();
  k.selected_rows = keys.survivors.size();
  if (!keys.survivors.empty()) {
    const auto d = d2h_of(keys.survivors, table);
    k.median_d2h = median(d);
    k.best_d2h = *std::min_element(d.begin(), d.end());
  }
  rep.methods.push_back(std::move(k));

  MethodStats b;
  b.method = "random";
  b.evaluations = baseline.trace.size();
  b.questions = 0;
  b.selected_rows = 1;
  b.constraints = "row " + std::to_string(baseline.best_row);
  if (!baseline.trace.empty()) {
    std::vector<double> d;
    for (const auto& s : baseline.trace) d.push_back(s.d2h);
    b.median_d2h = median(d);
    b.best_d2h = baseline.best_d2h;
  }
  rep.methods.push_back(std::move(b));
  return rep;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string opt_text(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

}  // namespace

nlohmann::json to_json(const ComparisonReport& r) {
  auto methods = nlohmann::json::array();
  for (const auto& m : r.methods) {
    methods.push_back({{"method", m.method},
                       {"evaluations", m.evaluations},
                       {"questions", m.questions},
                       {"selected_rows", m.selected_rows},
                       {"median_d2h", opt(m.median_d2h)},
                       {"best_d2h", opt(m.best_d2h)},
                       {"constraints", m.constraints},
                       {"no_keys", m.no_keys}});
  }
  return {{"methods", std::move(methods)}, {"table_median_d2h", r.table_median_d2h}};
}

std::string ComparisonReport::render() const {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-8s %6s %6s %8s %10s %10s  %s\n", "method", "evals",
                "asks", "rows", "median", "best", "selection");
  out += line;
  for (const auto& m : methods) {
    std::snprintf(line, sizeof(line), "%-8s %6zu %6zu %8zu %10s %10s  ", m.method.c_str(),
                  m.evaluations, m.questions, m.selected_rows, opt_text(m.median_d2h).c_str(),
                  opt_text(m.best_d2h).c_str());
    out += line;
    out += m.constraints + "\n";
  }
  std::snprintf(line, sizeof(line), "table median d2h: %.4f\n", table_median_d2h);
  out += line;
  return out;
}

}  // namespace keyminer
