#include "keyminer/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "keyminer/error.hpp"

namespace keyminer {

int equal_width_bin(const Column& col, double v, std::size_t bins) {
  const double width = col.hi - col.lo;
  if (!(width > 0)) return 0;
  const double x = std::floor((v - col.lo) / width * static_cast<double>(bins));
  return static_cast<int>(std::clamp(x, 0.0, static_cast<double>(bins - 1)));
}

StateProfile state_profile(const Table& table, std::span<const std::size_t> features,
                           std::size_t bins) {
  if (features.empty()) throw ContractViolation("profile needs at least one feature");
  if (bins < 2) throw ContractViolation("profile needs at least two bins");

  StateProfile p;
  p.bins = bins;
  for (const std::size_t f : features) p.features.push_back(table.column(f).name);

  for (const auto& row : table.rows()) {
    std::vector<int> state;
    state.reserve(features.size());
    bool missing = false;
    for (const std::size_t f : features) {
      const double v = row.cells[f];
      if (is_missing(v)) {
        missing = true;
        break;
      }
      const auto& col = table.column(f);
      state.push_back(col.numeric() ? equal_width_bin(col, v, bins) : static_cast<int>(v));
    }
    ++p.frequencies[missing ? StateProfile::kMissingState : state];
  }
  p.total = table.size();
  p.nonempty = p.frequencies.size();

  std::vector<std::size_t> counts;
  for (const auto& [state, n] : p.frequencies) counts.push_back(n);
  std::sort(counts.begin(), counts.end(), std::greater<>());
  std::size_t running = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    running += counts[k];
    p.coverage.emplace_back(k + 1, static_cast<double>(running) /
                                       static_cast<double>(p.total));
  }
  return p;
}

double StateProfile::top_coverage(std::size_t k) const {
  if (coverage.empty() || k == 0) return 0.0;
  return coverage[std::min(k, coverage.size()) - 1].second;
}

std::size_t StateProfile::states_to_cover(double share) const {
  for (const auto& [k, c] : coverage) {
    if (c >= share) return k;
  }
  return coverage.size();
}

std::string StateProfile::render() const {
  std::string out = "features:";
  for (const auto& f : features) out += " " + f;
  out += "\nbins: " + std::to_string(bins) + "  rows: " + std::to_string(total) +
         "  states: " + std::to_string(nonempty) + "\n";
  out += "    k  coverage\n";
  char line[64];
  for (const auto& [k, c] : coverage) {
    std::snprintf(line, sizeof(line), "%5zu  %8.4f\n", k, c);
    out += line;
  }
  return out;
}

nlohmann::json to_json(const StateProfile& p) {
  std::vector<std::pair<std::vector<int>, std::size_t>> states(p.frequencies.begin(),
                                                               p.frequencies.end());
  std::stable_sort(states.begin(), states.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  auto freq = nlohmann::json::array();
  for (const auto& [state, n] : states) {
    const bool missing = state == StateProfile::kMissingState;
    freq.push_back({{"state", missing ? nlohmann::json(nullptr) : nlohmann::json(state)},
                    {"count", n}});
  }
  auto curve = nlohmann::json::array();
  for (const auto& [k, c] : p.coverage) curve.push_back({k, c});
  return {{"bins", p.bins},
          {"features", p.features},
          {"total", p.total},
          {"nonempty", p.nonempty},
          {"frequencies", std::move(freq)},
          {"coverage", std::move(curve)},
          {"key_features", p.nonempty ? key_count_estimate(p.nonempty) : 0},
          {"key_features_s_ary", p.nonempty ? key_count_estimate(p.nonempty, p.bins) : 0}};
}

std::size_t key_count_estimate(std::size_t v) { return key_count_estimate(v, 2); }

std::size_t key_count_estimate(std::size_t v, std::size_t arity) {
  if (v == 0) throw ContractViolation("state count must be at least 1");
  if (arity < 2) throw ContractViolation("arity must be at least 2");
  // Smallest k with arity^k >= v, in integers to avoid log rounding.
  std::size_t k = 0;
  std::size_t reach = 1;
  while (reach < v) {
    reach *= arity;
    ++k;
  }
  return k;
}

}  // namespace keyminer
