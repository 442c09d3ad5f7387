// Acceptance gate: one PASS/FAIL line per criterion.
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "apex/explorer.h"
#include "constraint_gen.h"
#include "oracle.h"
#include "priority_fixture.h"
#include "testutil.h"

using namespace apex;
using namespace apex::testing;
using nlohmann::json;

namespace {

struct CorpusApp {
  std::string name;
  App app;
  std::vector<Target> targets;
  bool guarded = false;
};

std::vector<CorpusApp> load_corpus() {
  json manifest = json::parse(read_text(corpus_path("manifest.json")));
  std::vector<CorpusApp> out;
  for (const auto &e : manifest.at("apps")) {
    CorpusApp c;
    c.name = e.at("name");
    c.app = load_app_file(corpus_path(e.at("file")));
    if (e.contains("targets"))
      c.targets = parse_targets(read_text(corpus_path(e.at("targets"))), c.app);
    c.guarded = e.value("guarded", false);
    out.push_back(std::move(c));
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string &why) {
    if (pass)
      detail.clear();
    pass = false;
    detail += (detail.empty() ? "" : "; ") + why;
  }
};

Outcome fig1_precision() {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  App app = corpus_app("fig1");
  auto r = explore(app, {});
  double secs = seconds_since(t0);
  std::string a1;
  for (const auto &[id, s] : r.model.states)
    if (s.representative.activity == "A1" && s.initial)
      a1 = id;
  std::set<std::string> paths, dsts;
  for (const auto &t : r.model.transitions) {
    if (t.src != a1)
      continue;
    const auto &s = r.model.summaries.at(t.summary);
    if (s.event.descriptor() == "b1/tap") {
      paths.insert(s.path.to_string());
      dsts.insert(t.dst);
    }
  }
  std::set<std::string> want = {"A1.onClick:{0,1,2,3,4,5,6,11}",
                                "A1.onClick:{0,1,7,8,9,10,11}"};
  if (paths != want)
    o.fail("b1 paths out of A1 differ from the two expected ones");
  if (dsts.size() != 2)
    o.fail("the two b1 transitions do not reach distinct states");
  if (secs >= 5)
    o.fail("took " + std::to_string(secs) + " s");
  if (o.pass)
    o.detail = "2 transitions on b1 from A1 with distinct paths and targets";
  return o;
}

Outcome dragon(const std::vector<CorpusApp> &corpus) {
  Outcome o;
  for (const auto &c : corpus) {
    if (c.name != "dragon")
      continue;
    auto t0 = std::chrono::steady_clock::now();
    auto r = explore(c.app, c.targets);
    double secs = seconds_since(t0);
    size_t longest = 0;
    for (const auto &h : r.hits)
      longest = std::max(longest, h.sequence.size());
    std::ostringstream d;
    d << r.coverage.targets_hit << "/" << c.targets.size() << " targets, longest witness "
      << longest << ", " << std::fixed << std::setprecision(2) << secs << " s";
    if (r.coverage.targets_hit != 5 || c.targets.size() != 5)
      o.fail("target coverage " + d.str());
    if (longest > 6)
      o.fail("witness longer than 6");
    if (secs >= 60)
      o.fail("too slow");
    if (o.pass)
      o.detail = d.str();
    return o;
  }
  o.fail("dragon not in corpus");
  return o;
}

Outcome oracle_equivalence(const std::vector<CorpusApp> &corpus) {
  Outcome o;
  int checked = 0;
  for (const auto &c : corpus) {
    auto r = explore(c.app, {});
    if (r.model.states.size() > 4)
      continue;
    ++checked;
    auto oracle = brute_force(c.app, 4);
    auto model = model_transitions(r.model, c.app);
    if (model != oracle.transitions) {
      int only_model = 0, only_oracle = 0;
      for (const auto &t : model)
        only_model += !oracle.transitions.count(t);
      for (const auto &t : oracle.transitions)
        only_oracle += !model.count(t);
      o.fail(c.name + ": " + std::to_string(only_model) +
             " model transitions not reachable within 4 events, " +
             std::to_string(only_oracle) + " oracle-only transitions");
    }
  }
  if (o.pass)
    o.detail = std::to_string(checked) + " apps with <= 4 states match exactly";
  return o;
}

Outcome concolic(const std::vector<CorpusApp> &corpus) {
  Outcome o;
  int checked = 0;
  for (const auto &c : corpus) {
    auto r = explore(c.app, c.targets);
    for (const auto &t : r.model.transitions) {
      ++checked;
      if (auto bad = check_transition(c.app, r.model, t))
        o.fail(c.name + " " + t.summary + ": " + *bad);
    }
  }
  if (o.pass)
    o.detail = std::to_string(checked) + " concrete transitions replayed and checked";
  return o;
}

Outcome guided_vs_random(const std::vector<CorpusApp> &corpus) {
  Outcome o;
  double min_gap = 1e9;
  for (const auto &c : corpus) {
    for (uint64_t seed = 1; seed <= 5; ++seed) {
      ExploreOptions opts;
      opts.seed = seed;
      auto g = explore(c.app, c.targets, opts);
      auto r = baseline_random(c.app, c.targets, g.stats.events_applied, seed);
      double gap = 100.0 * (g.coverage.ratio() - r.coverage.ratio());
      std::ostringstream d;
      d << c.name << " seed " << seed << ": guided " << g.coverage.covered << " vs random "
        << r.coverage.covered << " at " << g.stats.events_applied << " events";
      if (g.coverage.covered < r.coverage.covered)
        o.fail(d.str());
      if (c.guarded) {
        min_gap = std::min(min_gap, gap);
        if (gap < 10)
          o.fail(d.str() + " (gap below 10 points)");
      }
    }
  }
  if (o.pass) {
    std::ostringstream d;
    d << "all apps, seeds 1-5; smallest guarded gap " << std::fixed << std::setprecision(1)
      << min_gap << " points";
    o.detail = d.str();
  }
  return o;
}

Outcome solver_correctness() {
  Outcome o;
  constexpr int kBound = 4;
  ConstraintGen g{std::mt19937(20240601)};
  int sat = 0;
  for (int i = 0; i < 1000; ++i) {
    PathConstraint c = g.constraint();
    SolveResult r = decide(c, kBound);
    bool expect = oracle_sat(c, kBound);
    if ((r.status == SolveStatus::Sat) != expect || r.status == SolveStatus::Unknown) {
      o.fail("disagrees on " + constraint_to_string(c));
      continue;
    }
    if (!expect)
      continue;
    ++sat;
    auto ok = evaluate_constraint(c, [&](const Symbol &s) -> std::optional<Value> {
      auto it = r.assignment.find(s);
      if (it == r.assignment.end())
        return std::nullopt;
      return it->second;
    });
    if (!ok || !*ok)
      o.fail("bad assignment for " + constraint_to_string(c));
  }
  if (o.pass)
    o.detail = "1000/1000 agree (" + std::to_string(sat) + " sat)";
  return o;
}

Outcome priority_rules() {
  Outcome o;
  PriorityFixture f;
  struct Row {
    const char *name;
    std::vector<std::tuple<std::string, bool, int64_t>> cands;
    std::vector<std::string> expected;
  };
  std::vector<Row> rows = {
      {"partial > complete", {{"plain", false, 0}, {"far", true, 1}}, {"far", "plain"}},
      {"partial > complete with targets", {{"far", false, 0}, {"plain", true, 1}},
       {"plain", "far"}},
      {"target count", {{"plain", true, 0}, {"far", true, 1}}, {"far", "plain"}},
      {"GUI transition code", {{"plain", true, 0}, {"gui", true, 1}}, {"gui", "plain"}},
      {"FIFO tie", {{"w2", true, 0}, {"w1", true, 1}}, {"w2", "w1"}},
  };
  int n = 0;
  for (const auto &row : rows) {
    std::vector<SequenceCandidate> q;
    for (const auto &[w, partial, ins] : row.cands)
      q.push_back(f.cand(w, partial, ins));
    ++n;
    if (f.order(q) != row.expected)
      o.fail(row.name);
  }
  std::vector<Target> none;
  auto order_l = [&](std::vector<std::pair<std::string, std::vector<Target>>> roots) {
    std::vector<QueueLEntry> l;
    for (size_t i = 0; i < roots.size(); ++i) {
      QueueLEntry e;
      e.summary = roots[i].first;
      e.priority = priority_summary(f.summary(roots[i].first), roots[i].second, f.app,
                                    static_cast<int64_t>(i));
      l.push_back(e);
    }
    return l[static_cast<size_t>(pick_best_summary(l, 0))].summary;
  };
  struct LRow {
    const char *name;
    std::vector<std::pair<std::string, std::vector<Target>>> entries;
    std::string first;
  };
  std::vector<LRow> lrows = {
      {"summary target count", {{"A.plain", f.targets}, {"A.far", f.targets}}, "A.far"},
      {"startActivity before sputs", {{"A.far", none}, {"A.gui", none}}, "A.gui"},
      {"sput count", {{"A.w1", none}, {"A.w2", none}}, "A.w2"},
      {"summary FIFO tie", {{"A.w1", none}, {"A.w1", none}}, "A.w1"},
  };
  for (const auto &row : lrows) {
    ++n;
    if (order_l(row.entries) != row.first)
      o.fail(row.name);
  }
  // Penalty window: a failed entry is skipped for the next 3 iterations.
  QueueLEntry hi, lo;
  hi.summary = "hi";
  hi.priority = {1, 0, 0, 0};
  lo.summary = "lo";
  lo.priority = {0, 0, 0, -1};
  std::vector<QueueLEntry> l{hi, lo};
  penalize(l[0], 1, kDefaultPenaltyWindow, kDefaultMaxAttempts);
  std::vector<int> picks;
  for (int it = 1; it <= 4; ++it)
    picks.push_back(pick_best_summary(l, it));
  ++n;
  if (picks != std::vector<int>{1, 1, 1, 0})
    o.fail("penalty skip window");
  if (o.pass)
    o.detail = std::to_string(n) + " table rows in expected dequeue order";
  return o;
}

Outcome determinism(const std::vector<CorpusApp> &corpus) {
  Outcome o;
  for (const auto &c : corpus) {
    auto a = explore(c.app, c.targets);
    auto b = explore(c.app, c.targets);
    if (a.model.to_json().dump(2) != b.model.to_json().dump(2))
      o.fail(c.name + " model.json differs");
    if (a.report_json(c.app).dump(2) != b.report_json(c.app).dump(2))
      o.fail(c.name + " report.json differs");
  }
  if (o.pass)
    o.detail = std::to_string(corpus.size()) + " apps byte-identical across two runs";
  return o;
}

Outcome termination(const std::vector<CorpusApp> &corpus) {
  Outcome o;
  double worst = 0;
  for (const auto &c : corpus) {
    auto t0 = std::chrono::steady_clock::now();
    auto r = explore(c.app, c.targets);
    double secs = seconds_since(t0);
    worst = std::max(worst, secs);
    if (r.stats.budget_exhausted)
      o.fail(c.name + " hit a budget");
    if (secs >= 120)
      o.fail(c.name + " took " + std::to_string(secs) + " s");
  }
  if (o.pass) {
    std::ostringstream d;
    d << "all apps halt without a budget, slowest " << std::fixed << std::setprecision(2)
      << worst << " s";
    o.detail = d.str();
  }
  return o;
}

} // namespace

// --allow-fail N keeps the exit status at 0 when criterion N fails; its line
// still reads FAIL.
int main(int argc, char **argv) {
  std::set<int> allowed;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--allow-fail")
      allowed.insert(std::atoi(argv[++i]));
  std::vector<CorpusApp> corpus = load_corpus();
  std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, [] { return fig1_precision(); }},
      {2, [&] { return dragon(corpus); }},
      {3, [&] { return oracle_equivalence(corpus); }},
      {4, [&] { return concolic(corpus); }},
      {5, [&] { return guided_vs_random(corpus); }},
      {6, [] { return solver_correctness(); }},
      {7, [] { return priority_rules(); }},
      {8, [&] { return determinism(corpus); }},
      {9, [&] { return termination(corpus); }},
  };
  int failed = 0;
  for (const auto &[n, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception &e) {
      o.fail(std::string("exception: ") + e.what());
    }
    failed += !o.pass && !allowed.count(n);
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
