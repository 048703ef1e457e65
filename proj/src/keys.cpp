#include "keyminer/keys.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "keyminer/audit.hpp"
#include "keyminer/error.hpp"

namespace keyminer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMinBinRows = 3;

std::optional<std::size_t> resolve_column(const Range& r, const Table& table) {
  if (r.column < table.columns().size() &&
      table.column(r.column).name == r.column_name) {
    return r.column;
  }
  return table.find_column(r.column_name);
}

bool same_cells(const Row& a, const Row& b, const Table& table) {
  for (const std::size_t c : table.independents()) {
    const double x = a.cells[c];
    const double y = b.cells[c];
    if (is_missing(x) != is_missing(y)) return false;
    if (!is_missing(x) && x != y) return false;
  }
  return true;
}

// Farthest row from `from` among `candidates`, skipping `from` itself. The
// first candidate wins ties.
std::pair<std::size_t, double> farthest(std::size_t from,
                                        std::span<const std::size_t> candidates,
                                        const Table& table, double p) {
  std::size_t best = from;
  double best_d = -1;
  const Row& origin = table.row(from);
  for (const std::size_t id : candidates) {
    if (id == from) continue;
    const double d = distance(origin, table.row(id), table, p);
    if (d > best_d) {
      best_d = d;
      best = id;
    }
  }
  return {best, best_d};
}

struct Bin {
  double seen_lo = 0;
  double seen_hi = 0;
  double best = 0;
  double rest = 0;
  double rows() const { return best + rest; }
};

bool mergeable(const Bin& x, const Bin& y, double epsilon) {
  if (x.rows() < kMinBinRows || y.rows() < kMinBinRows) return true;
  // |bx/nx - by/ny| <= eps, cross-multiplied so eps = 0 compares exactly.
  const double lhs = std::abs(x.best * y.rows() - y.best * x.rows());
  return lhs <= epsilon * x.rows() * y.rows();
}

std::vector<Bin> merge_bins(std::vector<Bin> bins, double epsilon) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::size_t i = 0;
    while (i + 1 < bins.size()) {
      if (mergeable(bins[i], bins[i + 1], epsilon)) {
        bins[i].seen_hi = bins[i + 1].seen_hi;
        bins[i].best += bins[i + 1].best;
        bins[i].rest += bins[i + 1].rest;
        bins.erase(bins.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        changed = true;
      } else {
        ++i;
      }
    }
  }
  return bins;
}

bool range_order(const Range& x, const Range& y) {
  if (x.score != y.score) return x.score > y.score;
  if (x.best != y.best) return x.best > y.best;
  if (x.column != y.column) return x.column < y.column;
  if (x.kind == RangeKind::kInterval && y.kind == RangeKind::kInterval) {
    return x.lo < y.lo;
  }
  return x.symbols < y.symbols;
}

std::string_view to_string(DominationRule r) {
  return r == DominationRule::kBinary ? "binary" : "continuous";
}

}  // namespace

bool Range::contains(double value) const {
  if (is_missing(value)) return false;
  if (kind != RangeKind::kInterval) return false;
  return value >= lo && value < hi;
}

bool Range::matches(const Row& row, const Table& table) const {
  const auto c = resolve_column(*this, table);
  if (!c) return false;
  const double v = row.cells[*c];
  if (is_missing(v)) return false;
  const auto& col = table.column(*c);
  if (kind == RangeKind::kInterval) return col.numeric() && contains(v);
  if (col.numeric()) {
    // A symbol range over a numeric column compares the printed value.
    return std::binary_search(symbols.begin(), symbols.end(), format_number(v));
  }
  return std::binary_search(symbols.begin(), symbols.end(),
                            col.symbols.at(static_cast<std::size_t>(v)));
}

std::string Range::describe() const {
  if (kind == RangeKind::kSymbol) {
    if (symbols.size() == 1) return column_name + " == " + symbols.front();
    std::string out = column_name + " ∈ {";
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (i) out += ", ";
      out += symbols[i];
    }
    return out + "}";
  }
  const bool open_lo = std::isinf(lo);
  const bool open_hi = std::isinf(hi);
  if (open_lo && open_hi) return column_name + " is any value";
  if (open_lo) return column_name + " < " + format_number(hi);
  if (open_hi) return column_name + " ≥ " + format_number(lo);
  return format_number(lo) + " ≤ " + column_name + " < " + format_number(hi);
}

bool Range::same_constraint(const Range& other) const {
  return column_name == other.column_name && kind == other.kind &&
         (kind == RangeKind::kSymbol ? symbols == other.symbols
                                     : lo == other.lo && hi == other.hi);
}

nlohmann::json to_json(const Range& r) {
  nlohmann::json j;
  j["column"] = r.column_name;
  j["column_index"] = r.column;
  j["best"] = r.best;
  j["rest"] = r.rest;
  j["score"] = r.score;
  j["text"] = r.describe();
  if (r.kind == RangeKind::kInterval) {
    j["kind"] = "interval";
    j["lo"] = bound_to_json(r.lo);
    j["hi"] = bound_to_json(r.hi);
    j["seen_lo"] = r.seen_lo;
    j["seen_hi"] = r.seen_hi;
  } else {
    j["kind"] = "symbol";
    j["symbols"] = r.symbols;
  }
  return j;
}

Range range_from_json(const nlohmann::json& j, const Table& table) {
  if (!j.is_object() || !j.contains("column") || !j["column"].is_string()) {
    throw Error("range needs a \"column\" name");
  }
  Range r;
  r.column_name = j["column"].get<std::string>();
  const auto c = table.find_column(r.column_name);
  if (!c) throw Error("unknown column '" + r.column_name + "'");
  r.column = *c;
  const bool symbolic = j.contains("symbols");
  if (symbolic) {
    if (table.column(*c).numeric()) {
      throw Error("column '" + r.column_name + "' is numeric; give \"lo\" and \"hi\"");
    }
    if (!j["symbols"].is_array() || j["symbols"].empty()) {
      throw Error("\"symbols\" must be a non-empty array");
    }
    r.kind = RangeKind::kSymbol;
    for (const auto& s : j["symbols"]) {
      r.symbols.push_back(s.is_string() ? s.get<std::string>() : s.dump());
    }
    std::sort(r.symbols.begin(), r.symbols.end());
    r.symbols.erase(std::unique(r.symbols.begin(), r.symbols.end()), r.symbols.end());
  } else {
    if (!table.column(*c).numeric()) {
      throw Error("column '" + r.column_name + "' is symbolic; give \"symbols\"");
    }
    const auto bound = [&](const char* key, double when_null) {
      if (!j.contains(key)) return when_null;
      const auto& v = j[key];
      if (!v.is_null() && !v.is_number()) {
        throw Error(std::string("\"") + key + "\" must be a number or null");
      }
      return bound_from_json(v, when_null);
    };
    r.kind = RangeKind::kInterval;
    r.lo = bound("lo", -kInf);
    r.hi = bound("hi", kInf);
    if (!(r.lo < r.hi)) throw Error("interval needs lo < hi");
    r.seen_lo = j.value("seen_lo", std::isinf(r.lo) ? 0.0 : r.lo);
    r.seen_hi = j.value("seen_hi", std::isinf(r.hi) ? 0.0 : r.hi);
  }
  r.best = j.value("best", 0.0);
  r.rest = j.value("rest", 0.0);
  r.score = j.value("score", 0.0);
  return r;
}

std::size_t KeysConfig::effective_min_size(std::size_t n) const {
  if (min_size > 0) return min_size;
  const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  return std::max<std::size_t>(8, root);
}

void KeysConfig::validate() const {
  if (sample_size < 2) throw ConfigError("sample size must be at least 2");
  if (!(merge_epsilon >= 0)) throw ConfigError("merge epsilon must be >= 0");
  if (max_loops < 1) throw ConfigError("max loops must be at least 1");
  if (!(distance_p > 0)) throw ConfigError("distance exponent must be > 0");
}

nlohmann::json to_json(const KeysConfig& c) {
  return {{"seed", c.seed},
          {"sample_size", c.sample_size},
          {"merge_epsilon", c.merge_epsilon},
          {"min_size", c.min_size},
          {"max_loops", c.max_loops},
          {"distance_p", c.distance_p},
          {"domination", to_string(c.domination)},
          {"keep_ranked", c.keep_ranked}};
}

KeysConfig keys_config_from_json(const nlohmann::json& j) {
  KeysConfig c;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    c.seed = j.value("seed", c.seed);
    c.sample_size = j.value("sample_size", c.sample_size);
    c.merge_epsilon = j.value("merge_epsilon", c.merge_epsilon);
    c.min_size = j.value("min_size", c.min_size);
    c.max_loops = j.value("max_loops", c.max_loops);
    c.distance_p = j.value("distance_p", c.distance_p);
    c.keep_ranked = j.value("keep_ranked", c.keep_ranked);
    const auto rule = j.value("domination", std::string("continuous"));
    if (rule == "binary") {
      c.domination = DominationRule::kBinary;
    } else if (rule == "continuous") {
      c.domination = DominationRule::kContinuous;
    } else {
      throw ConfigError("unknown domination rule '" + rule + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

Split distant_pair(std::span<const std::size_t> rows, const Table& table,
                   Oracle& oracle, std::size_t k, Rng& rng, double p) {
  if (rows.size() < 2) throw ContractViolation("need at least two rows to split");
  if (k < 2) throw ContractViolation("sample size must be at least 2");

  const Row& first = table.row(rows.front());
  const bool all_same = std::all_of(rows.begin(), rows.end(), [&](std::size_t id) {
    return same_cells(first, table.row(id), table);
  });
  if (all_same) {
    throw DegenerateSplit("all rows are identical on the independent columns");
  }

  Split split;
  split.sampled = rng.sample(std::vector<std::size_t>(rows.begin(), rows.end()),
                             std::min(k, rows.size()));
  if (auto* log = oracle.audit()) log->record(AuditEvent::sample(split.sampled));

  const std::size_t anchor = split.sampled[rng.below(split.sampled.size())];
  const std::size_t far = farthest(anchor, split.sampled, table, p).first;
  auto [other, gap] = farthest(far, split.sampled, table, p);
  if (gap <= 0) {
    // The sample was uniform; look past it for any row that differs.
    std::tie(other, gap) = farthest(far, rows, table, p);
  }

  const Choice c = oracle.ask(table.row(far), table.row(other));
  split.best_pole = c == Choice::kA ? far : other;
  split.rest_pole = c == Choice::kA ? other : far;

  const Row& best = table.row(split.best_pole);
  const Row& rest = table.row(split.rest_pole);
  split.rows.assign(rows.begin(), rows.end());
  split.labels.reserve(rows.size());
  for (const std::size_t id : rows) {
    Label label;
    if (id == split.best_pole) {
      label = Label::kBest;
    } else if (id == split.rest_pole) {
      label = Label::kRest;
    } else {
      const Row& row = table.row(id);
      label = distance(row, best, table, p) <= distance(row, rest, table, p)
                  ? Label::kBest
                  : Label::kRest;
    }
    split.labels.push_back(label);
    ++(label == Label::kBest ? split.best_count : split.rest_count);
  }
  return split;
}

std::vector<Range> make_ranges(const Table& table, std::size_t column,
                               std::span<const std::size_t> rows,
                               std::span<const Label> labels, double epsilon) {
  if (rows.size() != labels.size()) {
    throw ContractViolation("rows and labels differ in length");
  }
  const auto& col = table.column(column);
  std::vector<Range> out;

  if (!col.numeric()) {
    std::vector<Bin> tally(col.symbols.size());
    std::vector<bool> seen(col.symbols.size(), false);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double v = table.row(rows[i]).cells[column];
      if (is_missing(v)) continue;
      const auto code = static_cast<std::size_t>(v);
      seen[code] = true;
      ++(labels[i] == Label::kBest ? tally[code].best : tally[code].rest);
    }
    for (std::size_t code = 0; code < seen.size(); ++code) {
      if (!seen[code]) continue;
      Range r;
      r.column = column;
      r.column_name = col.name;
      r.kind = RangeKind::kSymbol;
      r.symbols = {col.symbols[code]};
      r.best = tally[code].best;
      r.rest = tally[code].rest;
      out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(),
              [](const Range& x, const Range& y) { return x.symbols < y.symbols; });
    return out;
  }

  std::vector<std::pair<double, Label>> values;
  values.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double v = table.row(rows[i]).cells[column];
    if (!is_missing(v)) values.emplace_back(v, labels[i]);
  }
  if (values.empty()) return out;
  std::stable_sort(values.begin(), values.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });

  const auto per_bin = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::sqrt(static_cast<double>(values.size()))));
  std::vector<Bin> bins;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto [v, label] = values[i];
    const bool start = bins.empty() ||
                       (bins.back().rows() >= static_cast<double>(per_bin) &&
                        v != values[i - 1].first);
    if (start) bins.push_back(Bin{v, v, 0, 0});
    bins.back().seen_hi = v;
    ++(label == Label::kBest ? bins.back().best : bins.back().rest);
  }
  bins = merge_bins(std::move(bins), epsilon);

  for (std::size_t i = 0; i < bins.size(); ++i) {
    Range r;
    r.column = column;
    r.column_name = col.name;
    r.kind = RangeKind::kInterval;
    r.lo = i == 0 ? -kInf : bins[i].seen_lo;
    r.hi = i + 1 == bins.size() ? kInf : bins[i + 1].seen_lo;
    r.seen_lo = bins[i].seen_lo;
    r.seen_hi = bins[i].seen_hi;
    r.best = bins[i].best;
    r.rest = bins[i].rest;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Range> rank_ranges(std::vector<Range> ranges, double best_total,
                               double rest_total) {
  if (best_total < 1 || rest_total < 1) {
    throw ContractViolation("ranking needs at least one best and one rest row");
  }
  for (auto& r : ranges) {
    const double b = r.best / best_total;
    const double s = r.rest / rest_total;
    r.score = r.best * rest_total > r.rest * best_total ? b * b / (b + s) : 0.0;
  }
  std::stable_sort(ranges.begin(), ranges.end(), range_order);
  return ranges;
}

std::vector<std::size_t> filter_rows(std::span<const std::size_t> rows,
                                     std::span<const Range> ranges,
                                     const Table& table) {
  std::vector<std::size_t> out;
  for (const std::size_t id : rows) {
    const Row& row = table.row(id);
    const bool ok = std::all_of(ranges.begin(), ranges.end(),
                                [&](const Range& r) { return r.matches(row, table); });
    if (ok) out.push_back(id);
  }
  return out;
}

std::string KeysResult::describe() const {
  if (selected.empty()) return "no keys found";
  std::string out;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (i) out += " ∧ ";
    out += selected[i].describe();
  }
  return out;
}

nlohmann::json to_json(const KeysResult& r, bool include_timing) {
  nlohmann::json j;
  auto loops = nlohmann::json::array();
  for (const auto& l : r.loops) {
    nlohmann::json lj;
    lj["loop"] = l.loop;
    lj["rows_in"] = l.rows_in;
    lj["best_pole"] = l.best_pole;
    lj["rest_pole"] = l.rest_pole;
    lj["best_count"] = l.best_count;
    lj["rest_count"] = l.rest_count;
    auto ranked = nlohmann::json::array();
    for (const auto& rr : l.ranked) ranked.push_back(to_json(rr));
    lj["ranked"] = std::move(ranked);
    lj["ranked_total"] = l.ranked_total;
    lj["chosen"] = l.chosen ? to_json(*l.chosen) : nlohmann::json(nullptr);
    lj["survivors"] = l.survivors;
    lj["accepted"] = l.accepted;
    loops.push_back(std::move(lj));
  }
  j["loops"] = std::move(loops);
  auto selected = nlohmann::json::array();
  for (const auto& s : r.selected) selected.push_back(to_json(s));
  j["selected"] = std::move(selected);
  j["survivors"] = r.survivors;
  j["evaluations_used"] = r.evaluations_used;
  j["questions_asked"] = r.questions_asked;
  j["seed"] = r.seed;
  j["stop_reason"] = r.stop_reason;
  j["dataset_hash"] = r.dataset_hash;
  j["no_keys"] = r.no_keys();
  j["keys"] = r.describe();
  if (include_timing) {
    j["wall_time_ms"] = std::chrono::duration<double, std::milli>(r.wall_time).count();
  }
  return j;
}

KeysResult keys0_run(const Table& table, const KeysConfig& config,
                     Oracle& oracle) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  const std::size_t min_size = config.effective_min_size(table.size());
  if (table.independents().empty()) {
    throw ConfigError("table has no independent columns");
  }
  if (oracle.mode() == OracleMode::kAuto && table.goals().empty()) {
    throw ConfigError("auto oracle needs at least one goal column");
  }
  if (table.size() < min_size || table.size() < 2) {
    throw ConfigError("table has " + std::to_string(table.size()) +
                      " rows; at least " + std::to_string(min_size) + " needed");
  }

  KeysResult result;
  result.seed = config.seed;
  result.dataset_hash = table.content_hash();
  Rng rng(config.seed);
  std::vector<std::size_t> current = table.all_ids();

  auto finish = [&](const char* reason) {
    result.stop_reason = reason;
    if (auto* log = oracle.audit()) log->record(AuditEvent::stop(reason));
  };

  while (true) {
    if (result.loops.size() >= config.max_loops) {
      finish(stop_reason::kMaxLoops);
      break;
    }
    Split split;
    try {
      split = distant_pair(current, table, oracle, config.sample_size, rng,
                           config.distance_p);
    } catch (const DegenerateSplit&) {
      finish(stop_reason::kDegenerate);
      break;
    }

    std::vector<Range> all;
    for (const std::size_t c : table.independents()) {
      auto ranges = make_ranges(table, c, split.rows, split.labels,
                                config.merge_epsilon);
      // one range spanning the column only separates out the missing cells
      if (ranges.size() < 2) continue;
      std::move(ranges.begin(), ranges.end(), std::back_inserter(all));
    }
    auto ranked = rank_ranges(std::move(all), static_cast<double>(split.best_count),
                              static_cast<double>(split.rest_count));

    LoopRecord rec;
    rec.loop = result.loops.size() + 1;
    rec.rows_in = current.size();
    rec.best_pole = split.best_pole;
    rec.rest_pole = split.rest_pole;
    rec.best_count = split.best_count;
    rec.rest_count = split.rest_count;
    rec.ranked_total = ranked.size();
    rec.ranked.assign(ranked.begin(),
                      ranked.begin() + static_cast<std::ptrdiff_t>(
                                           std::min(config.keep_ranked, ranked.size())));

    const char* stop = nullptr;
    if (ranked.empty() || ranked.front().score <= 0) {
      stop = stop_reason::kNoContrast;
    } else {
      rec.chosen = ranked.front();
      const std::span<const Range> top(&ranked.front(), 1);
      rec.survivors = filter_rows(current, top, table);
      if (rec.survivors.size() == current.size()) {
        stop = stop_reason::kNothingDiscarded;
      } else if (rec.survivors.size() < min_size) {
        stop = stop_reason::kBelowMinSize;
      }
    }

    if (stop) {
      result.loops.push_back(std::move(rec));
      finish(stop);
      break;
    }
    rec.accepted = true;
    if (auto* log = oracle.audit()) {
      log->record(AuditEvent::range_chosen(to_json(*rec.chosen)));
    }
    result.selected.push_back(*rec.chosen);
    current = rec.survivors;
    result.loops.push_back(std::move(rec));
  }

  result.survivors = current;
  result.evaluations_used = oracle.evaluations_used();
  result.questions_asked = oracle.questions_asked();
  result.wall_time = std::chrono::steady_clock::now() - started;
  return result;
}

}  // namespace keyminer
