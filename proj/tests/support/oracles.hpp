#pragma once

// Reference computations used to check the library. They are written from
// the definitions, favour clarity over speed, and share no code with src/.

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

// One cell for the distance oracle: normalized value in [0,1], symbol code,
// or missing.
struct Cell {
  enum Kind { kNum, kSym, kMissing } kind;
  double v;
};

inline double distance(const std::vector<Cell>& a, const std::vector<Cell>& b) {
  long double sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    long double d;
    const bool am = a[i].kind == Cell::kMissing, bm = b[i].kind == Cell::kMissing;
    if (am && bm) {
      d = 1;
    } else if (a[i].kind == Cell::kSym || b[i].kind == Cell::kSym) {
      d = (am || bm || a[i].v != b[i].v) ? 1 : 0;
    } else if (am || bm) {
      const long double x = am ? b[i].v : a[i].v;
      d = std::max(x, 1 - x);
    } else {
      d = std::fabs(static_cast<long double>(a[i].v) - b[i].v);
    }
    sum += d * d;
  }
  return static_cast<double>(std::sqrt(sum / a.size()));
}

// Continuous domination in long double: +1 a wins, -1 b wins, 0 tie.
inline int zitzler(const std::vector<long double>& a, const std::vector<long double>& b,
                   const std::vector<int>& w) {
  const long double n = a.size();
  long double ab = 0, ba = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab -= std::exp(w[i] * (a[i] - b[i]) / n);
    ba -= std::exp(w[i] * (b[i] - a[i]) / n);
  }
  if (std::fabs(ab - ba) <= 1e-15L * std::fabs(ab)) return 0;
  return ab < ba ? 1 : -1;
}

// Farthest pair among points by exhaustive search (first pair wins ties).
template <typename Dist>
std::pair<std::size_t, std::size_t> farthest_pair(std::size_t n, Dist dist) {
  std::pair<std::size_t, std::size_t> best{0, 1};
  double far = -1;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (dist(i, j) > far) far = dist(i, j), best = {i, j};
  return best;
}

struct Tally {
  double best, rest;
};

// Merging by restart: find the leftmost mergeable neighbours, merge them,
// start again from the left. Ends when no neighbours qualify.
inline std::vector<Tally> merge(std::vector<Tally> bins, double eps) {
  auto ok = [eps](const Tally& x, const Tally& y) {
    const double nx = x.best + x.rest, ny = y.best + y.rest;
    if (nx < 3 || ny < 3) return true;
    return std::fabs(x.best / nx - y.best / ny) <= eps + 1e-12;
  };
  for (bool again = true; again;) {
    again = false;
    for (std::size_t i = 0; i + 1 < bins.size(); ++i) {
      if (ok(bins[i], bins[i + 1])) {
        bins[i].best += bins[i + 1].best;
        bins[i].rest += bins[i + 1].rest;
        bins.erase(bins.begin() + i + 1);
        again = true;
        break;
      }
    }
  }
  return bins;
}

// Sorted values cut into bins of at least `per_bin` rows, never splitting a
// run of equal values.
inline std::vector<Tally> initial_bins(const std::vector<double>& sorted_x,
                                       const std::vector<bool>& best, std::size_t per_bin) {
  std::vector<Tally> bins;
  std::size_t in_bin = 0;
  for (std::size_t i = 0; i < sorted_x.size(); ++i) {
    if (bins.empty() || (in_bin >= per_bin && sorted_x[i] != sorted_x[i - 1])) {
      bins.push_back({0, 0});
      in_bin = 0;
    }
    (best[i] ? bins.back().best : bins.back().rest) += 1;
    ++in_bin;
  }
  return bins;
}

inline double score(double b, double r, double B, double R) {
  return b / B > r / R ? (b / B) * (b / B) / (b / B + r / R) : 0.0;
}

// Highest score of any interval of sorted distinct values of one column.
// `values` and `best` are aligned; the interval [lo, hi] is closed.
inline double best_interval_score(const std::vector<double>& values,
                                  const std::vector<bool>& best) {
  double B = 0, R = 0;
  std::map<double, std::pair<double, double>> by_value;
  for (std::size_t i = 0; i < values.size(); ++i) {
    (best[i] ? by_value[values[i]].first : by_value[values[i]].second) += 1;
    (best[i] ? B : R) += 1;
  }
  std::vector<std::pair<double, double>> counts;
  for (const auto& [v, c] : by_value) counts.push_back(c);
  double top = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    double b = 0, r = 0;
    for (std::size_t j = i; j < counts.size(); ++j) {
      b += counts[j].first;
      r += counts[j].second;
      top = std::max(top, score(b, r, B, R));
    }
  }
  return top;
}

// Least squares with an intercept by conjugate gradients on the normal
// equations (CGLS), in long double. X is row-major without the 1s column.
inline std::vector<double> cgls(const std::vector<std::vector<double>>& X,
                                const std::vector<double>& y, int iterations = 2000) {
  const std::size_t n = X.size(), p = X[0].size() + 1;
  auto col = [&](std::size_t i, std::size_t j) -> long double {
    return j + 1 == p ? 1.0L : X[i][j];
  };
  // centre and scale columns so CG converges in few steps
  std::vector<long double> mu(p, 0), sd(p, 1);
  for (std::size_t j = 0; j + 1 < p; ++j) {
    long double m = 0, s = 0;
    for (std::size_t i = 0; i < n; ++i) m += col(i, j);
    m /= n;
    for (std::size_t i = 0; i < n; ++i) s += (col(i, j) - m) * (col(i, j) - m);
    mu[j] = m;
    sd[j] = std::sqrt(s / n);
  }
  mu[p - 1] = 0;
  auto z = [&](std::size_t i, std::size_t j) { return (col(i, j) - mu[j]) / sd[j]; };

  std::vector<long double> x(p, 0), r(y.begin(), y.end()), s(p), q(n), d(p);
  auto At = [&](const std::vector<long double>& v, std::vector<long double>& out) {
    for (std::size_t j = 0; j < p; ++j) {
      long double acc = 0;
      for (std::size_t i = 0; i < n; ++i) acc += z(i, j) * v[i];
      out[j] = acc;
    }
  };
  At(r, s);
  d = s;
  long double gamma = 0;
  for (auto v : s) gamma += v * v;
  const long double stop = gamma * 1e-28L;
  for (int it = 0; it < iterations && gamma > stop; ++it) {
    long double qq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      long double acc = 0;
      for (std::size_t j = 0; j < p; ++j) acc += z(i, j) * d[j];
      q[i] = acc;
      qq += acc * acc;
    }
    if (!(qq > 0)) break;
    const long double alpha = gamma / qq;
    for (std::size_t j = 0; j < p; ++j) x[j] += alpha * d[j];
    for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * q[i];
    At(r, s);
    long double g2 = 0;
    for (auto v : s) g2 += v * v;
    for (std::size_t j = 0; j < p; ++j) d[j] = s[j] + (g2 / gamma) * d[j];
    gamma = g2;
  }
  // back to raw units: coefficients then intercept
  std::vector<double> out(p);
  long double intercept = x[p - 1];
  for (std::size_t j = 0; j + 1 < p; ++j) {
    out[j] = static_cast<double>(x[j] / sd[j]);
    intercept -= x[j] * mu[j] / sd[j];
  }
  out[p - 1] = static_cast<double>(intercept);
  return out;
}

// Share of the k most frequent states, k = 1..v, by sorting counts.
inline std::vector<double> coverage(std::vector<std::size_t> counts) {
  std::sort(counts.rbegin(), counts.rend());
  double total = 0;
  for (auto c : counts) total += c;
  std::vector<double> out;
  double run = 0;
  for (auto c : counts) {
    run += c;
    out.push_back(run / total);
  }
  return out;
}

}  // namespace oracle
