// One PASS/FAIL line per criterion, with the measured numbers after it.
// Usage: acceptance <data-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "keyminer/audit.hpp"
#include "keyminer/error.hpp"
#include "keyminer/harness.hpp"
#include "keyminer/keys.hpp"
#include "keyminer/objective.hpp"
#include "keyminer/planner.hpp"
#include "keyminer/profiler.hpp"
#include "oracles.hpp"
#include "synth.hpp"

using namespace keyminer;

namespace {

// Thresholds.
constexpr int kSeeds = 20;
constexpr double kMaxMedianEvaluations = 8;
constexpr double kMinCylinderShare = 0.50;
constexpr double kMinOriginShare = 0.30;
constexpr double kMinImprovedShare = 0.95;
constexpr double kMaxRunSeconds = 1.0;
constexpr double kMagnitudeBand = 0.25;
constexpr double kSolverAgreement = 1e-6;
constexpr int kDominationPairs = 10000;
constexpr double kMinPlantedShare = 0.95;
constexpr double kMaxMedianDeltas = 4;
constexpr std::size_t kMaxQuestions = 10;
constexpr double kMinZipfTop10 = 0.60;

std::string data_dir;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("failed: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

Table auto93() { return load_csv(data_dir + "/auto93.csv"); }

KeysResult run_auto(const Table& t, std::uint64_t seed) {
  KeysConfig cfg;
  cfg.seed = seed;
  Oracle o = Oracle::automatic(t, cfg.domination);
  return keys0_run(t, cfg, o);
}

// ---------------------------------------------------------------------------

Outcome auto93_reproduction() {
  Outcome out;
  const Table t = auto93();
  const double table_median = median_of(d2h_of(t.all_ids(), t));
  std::vector<double> evals;
  int cylinders = 0, origin = 0, improved = 0;
  double slowest = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const KeysResult r = run_auto(t, seed);
    evals.push_back(double(r.evaluations_used));
    bool low_cyl = false, japan = false;
    for (const auto& range : r.selected) {
      low_cyl |= range.column_name == "Cylinders" && range.kind == RangeKind::kInterval &&
                 range.seen_hi <= 4;
      japan |= range.column_name == "origin" && range.symbols == std::vector<std::string>{"3"};
    }
    cylinders += low_cyl;
    origin += japan;
    if (!r.survivors.empty() && median_of(d2h_of(r.survivors, t)) < table_median) ++improved;
    slowest = std::max(slowest, std::chrono::duration<double>(r.wall_time).count());
  }
  const double med = median_of(evals);
  out.require(med <= kMaxMedianEvaluations, "(a) median evaluations " + fmt("%.1f", med) + " > 8");
  out.require(cylinders >= kMinCylinderShare * kSeeds,
              "(b) low-cylinders range in " + std::to_string(cylinders) + "/20 seeds, need 10");
  out.require(origin >= kMinOriginShare * kSeeds,
              "(b) origin == 3 in " + std::to_string(origin) + "/20 seeds, need 6");
  out.require(improved >= kMinImprovedShare * kSeeds,
              "(c) survivors beat the table median in " + std::to_string(improved) + "/20 seeds");
  out.require(slowest < kMaxRunSeconds, "(d) slowest run " + fmt("%.3f", slowest) + " s");
  out.note("median evaluations " + fmt("%.1f", med) + "; Cylinders<=4 in " + std::to_string(cylinders) +
           "/20; origin==3 in " + std::to_string(origin) + "/20; improved " + std::to_string(improved) +
           "/20; slowest run " + fmt("%.4f", slowest) + " s");
  if (cylinders < kMinCylinderShare * kSeeds) {
    // Which column takes the "small engine" role when Cylinders does not.
    std::map<std::string, int> first;
    for (int seed = 1; seed <= kSeeds; ++seed) {
      const KeysResult r = run_auto(t, seed);
      if (!r.selected.empty()) ++first[r.selected.front().describe()];
    }
    std::string s = "first selected range by seed:";
    for (const auto& [d, n] : first) s += " [" + d + "] x" + std::to_string(n) + ";";
    out.note(s);
    const std::size_t cyl = *t.find_column("Cylinders"), disp = *t.find_column("Displacement");
    std::size_t both = 0, either = 0;
    for (const auto& row : t.rows()) {
      const bool c = row.cells[cyl] < 5, d = row.cells[disp] < 163;
      both += c && d;
      either += c || d;
    }
    out.note("rows with Cylinders < 5 and rows with Displacement < 163 overlap with Jaccard " +
             fmt("%.3f", double(both) / double(either)));
  }
  return out;
}

Outcome regression_signs() {
  Outcome out;
  const Table t = auto93();
  const std::vector<std::string> inputs{"Cylinders", "Displacement", "Horsepower", "Model", "origin"};
  struct Published {
    const char* target;
    std::vector<double> values;  // c d h y o, intercept
  };
  const std::vector<Published> published{
      {"Lbs-", {60.7, 5.2, 4.1, 13.7, -48, 234.2}},
      {"Mpg+", {-0.6, -0.1, -0.1, 0.6, 1.2, -12.9}},
      {"Acc+", {0.1, 0.1, -0.1, 0.1, -0.2, 21.2}},
  };
  std::vector<std::size_t> in_cols;
  for (const auto& n : inputs) in_cols.push_back(*t.find_column(n));
  int signs = 0, total = 0;
  double worst_agreement = 0;
  for (const auto& p : published) {
    const std::size_t target = *t.find_column(p.target);
    const RegressionModel m = ols_fit(t, target, in_cols);
    std::vector<double> ours;
    for (const auto& [n, v] : m.coefficients) ours.push_back(v);
    ours.push_back(m.intercept);

    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (const auto& row : t.rows()) {
      std::vector<double> xi;
      for (std::size_t c : in_cols) xi.push_back(regression_value(t.column(c), row.cells[c]));
      if (std::any_of(xi.begin(), xi.end(), is_missing) || is_missing(row.cells[target])) continue;
      X.push_back(xi);
      y.push_back(row.cells[target]);
    }
    const auto ref = oracle::cgls(X, y);

    std::string line = std::string(p.target) + ":";
    for (std::size_t j = 0; j < ours.size(); ++j) {
      const bool same = (ours[j] > 0) == (p.values[j] > 0);
      signs += same;
      ++total;
      const double ratio = ours[j] / p.values[j];
      const bool band = std::abs(ratio - 1) <= kMagnitudeBand;
      const std::string name = j < inputs.size() ? inputs[j] : "intercept";
      line += " " + name + "=" + fmt("%.4g", ours[j]) + "(" + fmt("%.4g", p.values[j]) + (same ? "" : ",SIGN") +
              (band ? "" : ",mag") + ")";
      if (!same) out.require(false, std::string(p.target) + " " + name + " sign: ours " + fmt("%.4g", ours[j]) +
                                        ", published " + fmt("%.4g", p.values[j]));
      worst_agreement = std::max(worst_agreement, std::abs(ours[j] - ref[j]) / std::abs(ref[j]));
    }
    out.note(line + "  rows " + std::to_string(m.rows_used));
  }
  out.require(worst_agreement <= kSolverAgreement, "solver agreement " + fmt("%.2e", worst_agreement));
  out.note("published values carry one decimal, so terms near 0.1 in magnitude are flagged for rounding alone");
  out.note(std::to_string(signs) + "/" + std::to_string(total) + " signs match; normal equations vs CGLS " +
           fmt("%.2e", worst_agreement) + " relative; 'mag' marks values outside +-25%");
  if (signs < total) {
    // The year term of acceleration is tiny and flips with how missing horsepower is handled.
    const std::size_t target = *t.find_column("Acc+");
    const std::size_t hp = *t.find_column("Horsepower");
    std::vector<double> hps;
    for (const auto& row : t.rows())
      if (!is_missing(row.cells[hp])) hps.push_back(row.cells[hp]);
    const double fill = median_of(hps);
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (const auto& row : t.rows()) {
      std::vector<double> xi;
      for (std::size_t c : in_cols) {
        const double v = regression_value(t.column(c), row.cells[c]);
        xi.push_back(c == hp && is_missing(v) ? fill : v);
      }
      X.push_back(xi);
      y.push_back(row.cells[target]);
    }
    const auto imputed = oracle::cgls(X, y);
    out.note("with the 6 missing horsepower cells filled by the median (" + fmt("%.1f", fill) +
             ") instead of dropped, Acc+ year = " + fmt("%.4g", imputed[3]));
  }
  return out;
}

Outcome key_counts() {
  Outcome out;
  const std::size_t a = key_count_estimate(49), b = key_count_estimate(271), c = key_count_estimate(300);
  out.require(a == 6 && b == 9 && c == 9, "estimates " + std::to_string(a) + "," + std::to_string(b) + "," +
                                              std::to_string(c));
  out.note("(49, 271, 300) -> (" + std::to_string(a) + ", " + std::to_string(b) + ", " + std::to_string(c) + ")");
  return out;
}

Outcome domination() {
  Outcome out;
  Rng rng(2024);
  int mutual = 0, self = 0, reduction = 0, asymmetric = 0;
  for (int i = 0; i < kDominationPairs; ++i) {
    const std::size_t n = 1 + rng.below(6);
    GoalVector a, b;
    for (std::size_t k = 0; k < n; ++k) {
      const auto d = rng.below(2) ? Direction::kMaximize : Direction::kMinimize;
      a.values.push_back(rng.unit());
      b.values.push_back(rng.unit());
      a.directions.push_back(d);
      b.directions.push_back(d);
    }
    const Verdict ab = better(a, b), ba = better(b, a);
    mutual += ab == Verdict::kAWins && ba == Verdict::kAWins;
    asymmetric += (ab == Verdict::kTie) != (ba == Verdict::kTie);
    self += better(a, a) != Verdict::kTie;
    if (n == 1 && a.values[0] != b.values[0]) {
      const bool a_up = a.directions[0] == Direction::kMaximize ? a.values[0] > b.values[0]
                                                                : a.values[0] < b.values[0];
      reduction += ab != (a_up ? Verdict::kAWins : Verdict::kBWins);
    }
  }
  // positive rescaling of raw goals keeps the tournament winner
  int moved = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::string raw = "A,G1+,G2-,G3+\n", scaled = raw;
    const double s1 = 0.01 + rng.unit() * 100, s2 = 0.01 + rng.unit() * 100, s3 = 0.01 + rng.unit() * 100;
    for (int i = 0; i < 30; ++i) {
      const double g1 = rng.unit(), g2 = rng.unit(), g3 = rng.unit();
      raw += std::to_string(i) + "," + format_number(g1) + "," + format_number(g2) + "," + format_number(g3) + "\n";
      scaled += std::to_string(i) + "," + format_number(g1 * s1) + "," + format_number(g2 * s2) + "," +
                format_number(g3 * s3) + "\n";
    }
    auto winner = [](const Table& t) {
      std::size_t top = 0, top_wins = 0;
      for (std::size_t i = 0; i < t.size(); ++i) {
        std::size_t wins = 0;
        for (std::size_t j = 0; j < t.size(); ++j)
          wins += better(goal_vector(t.row(i), t), goal_vector(t.row(j), t)) == Verdict::kAWins;
        if (wins > top_wins) top = i, top_wins = wins;
      }
      return top;
    };
    moved += winner(parse_csv(raw)) != winner(parse_csv(scaled));
  }
  out.require(mutual == 0, std::to_string(mutual) + " mutual wins");
  out.require(asymmetric == 0, std::to_string(asymmetric) + " order-dependent ties");
  out.require(self == 0, std::to_string(self) + " non-ties against self");
  out.require(reduction == 0, std::to_string(reduction) + " single-goal disagreements");
  out.require(moved == 0, std::to_string(moved) + "/100 winners moved under rescaling");
  out.note(std::to_string(kDominationPairs) + " pairs; 100 rescaled tables");
  return out;
}

Outcome discretizer() {
  Outcome out;
  int partition_faults = 0, match_faults = 0, eps0_faults = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Table t = parse_csv(synth::mixed_csv(300, seed, 0.1));
    Rng rng(seed);
    const auto ids = t.all_ids();
    std::vector<Label> labels;
    for (std::size_t i = 0; i < ids.size(); ++i) labels.push_back(rng.below(2) ? Label::kBest : Label::kRest);
    for (std::size_t c : t.independents()) {
      const auto ranges = make_ranges(t, c, ids, labels, 0.05);
      if (t.column(c).numeric()) {
        partition_faults += ranges.front().lo != -std::numeric_limits<double>::infinity();
        partition_faults += ranges.back().hi != std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < ranges.size(); ++i) partition_faults += ranges[i].hi != ranges[i + 1].lo;
      }
      for (const auto& row : t.rows()) {
        int hits = 0;
        for (const auto& r : ranges) hits += r.matches(row, t);
        match_faults += hits != (is_missing(row.cells[c]) ? 0 : 1);
      }
    }
  }
  // epsilon 0 against the reference merge
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 30 + rng.below(400);
    std::vector<std::pair<double, bool>> cells;
    std::string csv = "V,Y+\n";
    for (std::size_t i = 0; i < n; ++i) {
      cells.push_back({double(rng.below(n)), rng.below(3) == 0});
      csv += format_number(cells.back().first) + ",1\n";
    }
    const Table t = parse_csv(csv);
    std::vector<Label> labels;
    for (const auto& c : cells) labels.push_back(c.second ? Label::kBest : Label::kRest);
    const auto ranges = make_ranges(t, 0, t.all_ids(), labels, 0.0);
    std::stable_sort(cells.begin(), cells.end(), [](auto& a, auto& b) { return a.first < b.first; });
    std::vector<double> xs;
    std::vector<bool> best;
    for (const auto& c : cells) xs.push_back(c.first), best.push_back(c.second);
    const auto want = oracle::merge(oracle::initial_bins(xs, best, std::size_t(std::sqrt(double(n)))), 0.0);
    bool same = want.size() == ranges.size();
    for (std::size_t i = 0; same && i < want.size(); ++i)
      same = want[i].best == ranges[i].best && want[i].rest == ranges[i].rest;
    for (std::size_t i = 0; i + 1 < ranges.size(); ++i) {
      const double n1 = ranges[i].best + ranges[i].rest, n2 = ranges[i + 1].best + ranges[i + 1].rest;
      same = same && ranges[i].best * n2 != ranges[i + 1].best * n1;
    }
    eps0_faults += !same;
  }
  // two regimes: 9 best in 10 below 0.5, 1 in 10 above
  std::string csv = "V,Y+\n";
  std::vector<Label> labels;
  std::vector<double> xs;
  std::vector<bool> best;
  for (int i = 0; i < 100; ++i) {
    csv += format_number(i / 100.0) + ",1\n";
    const bool b = i < 50 ? (i % 10 != 9) : (i % 10 == 0);
    labels.push_back(b ? Label::kBest : Label::kRest);
    xs.push_back(i / 100.0);
    best.push_back(b);
  }
  const Table t = parse_csv(csv);
  const auto two = make_ranges(t, 0, t.all_ids(), labels, 0.05);
  const auto want = oracle::merge(oracle::initial_bins(xs, best, 10), 0.05);
  out.require(partition_faults == 0, std::to_string(partition_faults) + " gaps between ranges");
  out.require(match_faults == 0, std::to_string(match_faults) + " cells not in exactly one range");
  out.require(eps0_faults == 0, std::to_string(eps0_faults) + "/50 epsilon-0 columns differ from the reference");
  out.require(two.size() == 2 && want.size() == 2, "two-regime column gave " + std::to_string(two.size()) +
                                                       " ranges (reference " + std::to_string(want.size()) + ")");
  out.note("10 mixed tables, 50 epsilon-0 columns, two-regime column -> " + std::to_string(two.size()) + " ranges");
  return out;
}

Outcome planted_recovery() {
  Outcome out;
  int first_on_planted = 0;
  std::vector<double> deltas;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto p = synth::planted(1000, 20, std::size_t(seed) % 20, 1000 + seed);
    const Table t = parse_csv(p.csv);
    const KeysResult r = run_auto(t, seed);
    first_on_planted += !r.selected.empty() && r.selected.front().column_name == p.planted_name;
    TreeConfig tc;
    tc.keys.seed = seed;
    Oracle o = Oracle::automatic(t);
    const PlanTree tree = grow_tree(t, tc, o);
    const auto [worst, best] = worst_and_best_leaf(tree);
    deltas.push_back(double(make_plan(tree, worst, best).deltas.size()));
  }
  const double med = median_of(deltas);
  out.require(first_on_planted >= kMinPlantedShare * kSeeds,
              "planted feature first in " + std::to_string(first_on_planted) + "/20");
  out.require(med <= kMaxMedianDeltas, "median worst->best plan size " + fmt("%.1f", med));
  out.note("planted feature first in " + std::to_string(first_on_planted) + "/20 seeds; worst->best plan sizes " +
           "median " + fmt("%.1f", med) + ", max " + fmt("%.0f", *std::max_element(deltas.begin(), deltas.end())));
  return out;
}

// Loop 1 of the ladder table worked by hand: label by nearer pole, cut into
// sqrt(n)-row bins, merge, score, keep the rows of the top bin.
std::set<std::size_t> ladder_first_survivors(std::size_t n, std::size_t best_pole, std::size_t rest_pole) {
  struct Bin {
    std::size_t first, last;
    double b, r;
  };
  std::vector<Bin> bins;
  const std::size_t per = std::size_t(std::sqrt(double(n)));
  double B = 0, R = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double db = std::abs(double(i) - double(best_pole)), dr = std::abs(double(i) - double(rest_pole));
    const bool is_best = db <= dr;
    (is_best ? B : R) += 1;
    if (bins.empty() || bins.back().last - bins.back().first + 1 >= per) bins.push_back({i, i, 0, 0});
    bins.back().last = i;
    (is_best ? bins.back().b : bins.back().r) += 1;
  }
  std::vector<oracle::Tally> tallies;
  for (const auto& b : bins) tallies.push_back({b.b, b.r});
  // replay the reference merge while tracking row extents
  for (bool again = true; again;) {
    again = false;
    for (std::size_t i = 0; i + 1 < bins.size(); ++i) {
      const double n1 = bins[i].b + bins[i].r, n2 = bins[i + 1].b + bins[i + 1].r;
      if (n1 < 3 || n2 < 3 || std::abs(bins[i].b / n1 - bins[i + 1].b / n2) <= 0.05 + 1e-12) {
        bins[i].last = bins[i + 1].last;
        bins[i].b += bins[i + 1].b;
        bins[i].r += bins[i + 1].r;
        bins.erase(bins.begin() + i + 1);
        again = true;
        break;
      }
    }
  }
  if (bins.size() != oracle::merge(tallies, 0.05).size()) return {};
  const Bin* top = nullptr;
  double top_score = -1;
  for (const auto& b : bins) {
    const double s = oracle::score(b.b, b.r, B, R);
    if (s > top_score || (s == top_score && b.b > top->b)) top = &b, top_score = s;
  }
  std::set<std::size_t> rows;
  for (std::size_t i = top->first; i <= top->last; ++i) rows.insert(i);
  return rows;
}

Outcome accountability() {
  Outcome out;
  const Table t = auto93();
  int replay_faults = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    KeysConfig cfg;
    cfg.seed = seed;
    AuditLog log(make_header(t.content_hash(), cfg, OracleMode::kAuto));
    Oracle o = Oracle::automatic(t);
    o.attach(&log);
    const KeysResult live = keys0_run(t, cfg, o);
    ReplayOptions opts;
    opts.fallback.reset();
    replay_faults += canonical_dump(to_json(replay(AuditLog::parse(log.to_jsonl()), t, opts))) !=
                     canonical_dump(to_json(live));
  }

  std::string csv = "Pos,Y+\n";
  for (int i = 0; i < 20; ++i) csv += std::to_string(i) + "," + std::to_string(i) + "\n";
  const Table ladder = parse_csv(csv);
  KeysConfig cfg;
  AuditLog log(make_header(ladder.content_hash(), cfg, OracleMode::kAuto));
  Oracle o = Oracle::automatic(ladder);
  o.attach(&log);
  const KeysResult original = keys0_run(ladder, cfg, o);
  ReplayOptions flip;
  flip.overrides[1] = log.answers().front().choice == Choice::kA ? Choice::kB : Choice::kA;
  const KeysResult alt = replay(log, ladder, flip);
  const auto& loop = alt.loops.front();
  const std::set<std::size_t> got(loop.survivors.begin(), loop.survivors.end());
  const auto want = ladder_first_survivors(20, loop.best_pole, loop.rest_pole);
  const auto want_original = ladder_first_survivors(20, 19, 0);
  const std::set<std::size_t> got_original(original.loops.front().survivors.begin(),
                                           original.loops.front().survivors.end());

  bool refused = false;
  std::string edited = to_csv(ladder);
  edited.replace(edited.rfind("19"), 2, "18");
  try {
    replay(log, parse_csv(edited));
  } catch (const HashMismatch&) {
    refused = true;
  }

  out.require(replay_faults == 0, std::to_string(replay_faults) + "/10 replays differ");
  out.require(loop.best_pole == 0 && loop.rest_pole == 19, "override did not swap the poles");
  out.require(got_original == want_original, "original ladder run differs from the hand-worked loop");
  out.require(!want.empty() && got == want, "overridden selection differs from the hand-worked loop");
  out.require(refused, "edited dataset was not refused");
  std::string rows;
  for (auto r : got) rows += (rows.empty() ? "" : ",") + std::to_string(r);
  out.note("10/10 auto93 replays byte-identical; override #1 -> survivors {" + rows + "}; hash mismatch refused");
  return out;
}

Outcome transparency() {
  Outcome out;
  const auto p = synth::planted(10000, 128, 17, 99);
  const Table t = parse_csv(p.csv);
  const std::size_t goal = t.goals().front();
  std::size_t prompts = 0;
  Oracle o = Oracle::interactive(t, [&](const Row& a, const Row& b, std::size_t) {
    ++prompts;
    return a.cells[goal] >= b.cells[goal] ? Choice::kA : Choice::kB;
  });
  KeysConfig cfg;
  cfg.seed = 5;
  const KeysResult r = keys0_run(t, cfg, o);
  out.require(r.questions_asked <= kMaxQuestions, std::to_string(r.questions_asked) + " questions");
  out.require(r.questions_asked == r.loops.size() && prompts == r.questions_asked,
              "questions " + std::to_string(r.questions_asked) + ", loops " + std::to_string(r.loops.size()) +
                  ", prompts " + std::to_string(prompts));
  out.note("10000x128: " + std::to_string(r.questions_asked) + " questions, " + std::to_string(r.loops.size()) +
           " loops, " + std::to_string(r.survivors.size()) + " survivors, keys: " + r.describe());
  return out;
}

Outcome profiler() {
  Outcome out;
  const double analytic = synth::zipf_top_share(10, 100, 1.2);
  const Table z = parse_csv(synth::zipf_csv(10000, 10, 1.2, 1));
  const std::vector<std::size_t> zf{z.independents()[0], z.independents()[1]};
  const double top10 = state_profile(z, zf, 10).top_coverage(10);
  const Table a = auto93();
  const std::vector<std::size_t> af{a.independents()[0], a.independents()[1]};
  const std::size_t v = state_profile(a, af, 10).nonempty;

  int curve_faults = 0;
  std::vector<Table> tables;
  tables.push_back(a);
  tables.push_back(z);
  tables.push_back(parse_csv(synth::mixed_csv(500, 3, 0.15)));
  tables.push_back(parse_csv(synth::planted(300, 6, 2, 8).csv));
  for (const Table& t : tables) {
    const auto& ind = t.independents();
    for (std::size_t n = 1; n <= std::min<std::size_t>(3, ind.size()); ++n) {
      const std::vector<std::size_t> fs(ind.begin(), ind.begin() + n);
      for (std::size_t bins : {2, 10}) {
        const StateProfile p = state_profile(t, fs, bins);
        std::map<std::vector<long>, std::size_t> counts;
        for (const auto& row : t.rows()) {
          std::vector<long> key;
          for (std::size_t f : fs) {
            const auto& col = t.column(f);
            const double x = row.cells[f];
            if (is_missing(x)) {
              key = {-1};
              break;
            }
            key.push_back(col.numeric() ? std::min<long>(long((x - col.lo) / (col.hi - col.lo) * double(bins)),
                                                         long(bins) - 1)
                                        : long(x));
          }
          ++counts[key];
        }
        std::vector<std::size_t> c;
        for (const auto& [k, m] : counts) c.push_back(m);
        const auto want = oracle::coverage(c);
        bool same = want.size() == p.coverage.size();
        for (std::size_t k = 0; same && k < want.size(); ++k) same = std::abs(want[k] - p.coverage[k].second) < 1e-12;
        curve_faults += !same;
      }
    }
  }
  out.require(top10 >= kMinZipfTop10, "Zipf top-10 coverage " + fmt("%.4f", top10));
  out.require(v < 100, "auto93 2-feature profile has " + std::to_string(v) + " states");
  out.require(curve_faults == 0, std::to_string(curve_faults) + " coverage curves differ from prefix sums");
  out.note("Zipf top-10 " + fmt("%.4f", top10) + " (generator " + fmt("%.4f", analytic) + "); auto93 v = " +
           std::to_string(v) + "; coverage curves checked on 4 tables");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  data_dir = argc > 1 ? argv[1] : "data";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"auto93 reproduction over 20 seeds", auto93_reproduction},
      {"regression sign pattern", regression_signs},
      {"key-count estimate", key_counts},
      {"domination properties", domination},
      {"discretizer properties", discretizer},
      {"planted-key recovery", planted_recovery},
      {"accountability: replay, override, hash", accountability},
      {"transparency budget", transparency},
      {"state-frequency profiler", profiler},
  };
  const auto start = std::chrono::steady_clock::now();
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(std::string("threw: ") + e.what());
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << i + 1 << ": " << criteria[i].first << "\n";
    for (const auto& n : o.notes) std::cout << "        " << n << "\n";
    std::cout.flush();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria pass in " << fmt("%.1f", secs)
            << " s\n";
  return failed == 0 ? 0 : 1;
}
