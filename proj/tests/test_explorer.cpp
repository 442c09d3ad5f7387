#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "apex/explorer.h"
#include "oracle.h"
#include "priority_fixture.h"
#include "testutil.h"

using namespace apex;
using apex::testing::brute_force;
using apex::testing::corpus_app;
using apex::testing::corpus_names;
using apex::testing::corpus_path;
using apex::testing::model_transitions;
using apex::testing::observe;

using apex::testing::PriorityFixture;

TEST(PriorityEventSeq, Rules) {
  PriorityFixture f;
  struct Row {
    const char *name;
    std::vector<std::tuple<std::string, bool, int64_t>> cands;
    std::vector<std::string> expected;
  };
  std::vector<Row> rows = {
      {"partial before complete", {{"plain", false, 0}, {"plain", true, 1}}, {"plain", "plain"}},
      {"more reachable targets first", {{"plain", true, 0}, {"far", true, 1}}, {"far", "plain"}},
      {"GUI transition code next", {{"plain", true, 0}, {"gui", true, 1}}, {"gui", "plain"}},
      {"targets before GUI code", {{"gui", true, 0}, {"far", true, 1}}, {"far", "gui"}},
      {"FIFO when tied", {{"w1", true, 0}, {"plain", true, 1}}, {"w1", "plain"}},
      {"complete with targets after partial without",
       {{"far", false, 0}, {"plain", true, 1}},
       {"plain", "far"}},
  };
  for (const auto &row : rows) {
    std::vector<SequenceCandidate> q;
    for (const auto &[w, partial, ins] : row.cands)
      q.push_back(f.cand(w, partial, ins));
    EXPECT_EQ(f.order(q), row.expected) << row.name;
  }
  auto pc = f.cand("plain", true, 1), cc = f.cand("plain", false, 0);
  EXPECT_GT(pc.priority, cc.priority);
  EXPECT_EQ(f.cand("far", true, 0).priority, (Priority{1, 2, 0, 0}));
  EXPECT_EQ(f.cand("gui", false, 3).priority, (Priority{0, 0, 1, -3}));
}

TEST(PrioritySummary, Rules) {
  PriorityFixture f;
  std::vector<Target> none;
  auto target_path = priority_summary(f.summary("A.far"), f.targets, f.app, 1);
  auto plain = priority_summary(f.summary("A.plain"), f.targets, f.app, 0);
  EXPECT_GT(target_path, plain);

  auto gui = priority_summary(f.summary("A.gui"), none, f.app, 1);
  auto writes = priority_summary(f.summary("A.far"), none, f.app, 0);
  EXPECT_EQ(writes, (Priority{0, 0, 2, 0}));
  EXPECT_GT(gui, writes);

  EXPECT_GT(priority_summary(f.summary("A.w2"), none, f.app, 1),
            priority_summary(f.summary("A.w1"), none, f.app, 0));
  EXPECT_GT(priority_summary(f.summary("A.w1"), none, f.app, 0),
            priority_summary(f.summary("A.w1"), none, f.app, 1));
}

TEST(Penalty, SkipWindowAndRetirement) {
  QueueLEntry hi, lo;
  hi.summary = "hi";
  hi.priority = {1, 0, 0, 0};
  lo.summary = "lo";
  lo.priority = {0, 0, 0, -1};
  std::vector<QueueLEntry> l{hi, lo};
  EXPECT_EQ(pick_best_summary(l, 1), 0);
  EXPECT_FALSE(penalize(l[0], 1, kDefaultPenaltyWindow, kDefaultMaxAttempts));
  EXPECT_EQ(l[0].penalty_until, 4);
  for (int it = 2; it <= 3; ++it)
    EXPECT_EQ(pick_best_summary(l, it), 1) << it;
  EXPECT_EQ(pick_best_summary(l, 4), 0);
  EXPECT_EQ(pick_best_summary({l[0]}, 3), -1);
  for (int i = 2; i <= 4; ++i)
    EXPECT_FALSE(penalize(l[0], 4, 3, kDefaultMaxAttempts));
  EXPECT_TRUE(penalize(l[0], 4, 3, kDefaultMaxAttempts));
  EXPECT_EQ(l[0].attempts, 5);
}

TEST(Penalty, UnknownApiTrace) {
  App app = corpus_app("unknown_api");
  auto r = explore(app, {});
  ASSERT_EQ(r.retired.size(), 1u);
  EXPECT_EQ(r.retired[0].attempts, kDefaultMaxAttempts);
  EXPECT_NE(r.retired[0].reason.find("unmodeled api"), std::string::npos);
  // Attempts at iterations 1, 4, 7, 10, 13.
  EXPECT_EQ(r.stats.iterations, 1 + 4 * kDefaultPenaltyWindow);
  EXPECT_EQ(r.stats.solve_calls, kDefaultMaxAttempts);
  EXPECT_EQ(r.stats.unknown, kDefaultMaxAttempts);
}

TEST(QueueDiscipline, PickIsMaximal) {
  std::mt19937 rng(5);
  for (int round = 0; round < 200; ++round) {
    std::vector<SequenceCandidate> q(1 + rng() % 12);
    for (size_t i = 0; i < q.size(); ++i)
      q[i].priority = {int64_t(rng() % 2), int64_t(rng() % 3), int64_t(rng() % 2),
                       -int64_t(i)};
    int best = pick_best_candidate(q);
    for (const auto &c : q)
      EXPECT_GE(q[static_cast<size_t>(best)].priority, c.priority);
  }
  EXPECT_EQ(pick_best_candidate({}), -1);
}

TEST(Coverage, Examples) {
  App fig2 = corpus_app("fig2");
  EXPECT_EQ(coverage(fig2, {}).covered, 0);
  EXPECT_EQ(coverage(fig2, {}).ratio(), 0.0);

  RuntimeState st = boot(fig2).state;
  apply_event(fig2, st, Event::tap("b2"));
  auto r = apply_event(fig2, st, Event::tap("b1"));
  auto c = coverage(fig2, blocks_entered(r.log));
  // onClick blocks {0,1,3}: 2 + 2 + 1 instructions; increase: 5.
  EXPECT_EQ(c.covered, 10);
  EXPECT_EQ(c.total, 19);
  EXPECT_EQ(c.methods.at("Main.onClick").covered, 5);
  EXPECT_EQ(c.methods.at("Main.decrease").covered, 0);

  App single = parse_app(R"(
manifest
  main A
end
activity A
  button b click=A.go
end
method A.go regs=1
  const v0 1
  sput v0 A.x
  return
end
)");
  RuntimeState s2 = boot(single).state;
  auto r2 = apply_event(single, s2, Event::tap("b"));
  EXPECT_DOUBLE_EQ(coverage(single, blocks_entered(r2.log)).ratio(), 1.0);
}

TEST(Targets, Parse) {
  App app = corpus_app("dragon");
  auto ts = parse_targets("# five\nLair.onCreate:3\n\n  Nest.onCreate:8 \n", app);
  ASSERT_EQ(ts.size(), 2u);
  EXPECT_EQ(ts[1], (Target{"Nest.onCreate", 8}));
  EXPECT_THROW(parse_targets("Nope.m:1\n", app), std::invalid_argument);
  EXPECT_THROW(parse_targets("Lair.onCreate:99\n", app), std::invalid_argument);
  EXPECT_THROW(parse_targets("Lair.onCreate\n", app), std::invalid_argument);
  EXPECT_THROW(parse_target("Lair.onCreate:x"), std::invalid_argument);
}

TEST(Explore, Fig1TwoSummariesForOneEvent) {
  App app = corpus_app("fig1");
  auto r = explore(app, {});
  EXPECT_EQ(r.model.states.size(), 3u);
  std::string a1;
  for (const auto &[id, s] : r.model.states)
    if (s.representative.activity == "A1")
      a1 = id;
  std::map<std::string, std::string> paths;
  for (const auto &t : r.model.transitions)
    if (t.src == a1) {
      const auto &s = r.model.summaries.at(t.summary);
      if (s.event == Event::tap("b1") || s.event.descriptor() == "b1/tap")
        paths[s.path.to_string()] = t.dst;
    }
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_TRUE(paths.count("A1.onClick:{0,1,2,3,4,5,6,11}"));
  EXPECT_TRUE(paths.count("A1.onClick:{0,1,7,8,9,10,11}"));
  EXPECT_NE(paths.begin()->second, std::next(paths.begin())->second);
  // The second branch only comes from a generated sequence.
  bool via_l = false;
  for (const auto &h : r.history)
    via_l = via_l || (!h.partial && h.error.empty());
  EXPECT_TRUE(via_l);
  EXPECT_EQ(r.stats.solved, 1);
}

TEST(Explore, SingleSelfLoopNeedsNoSolver) {
  App app = parse_app(R"(
manifest
  main A
end
activity A
  button b click=A.go
end
method A.go regs=1
  const v0 1
  sput v0 A.x
  return
end
)");
  auto r = explore(app, {});
  EXPECT_EQ(r.stats.iterations, 0);
  EXPECT_EQ(r.stats.solve_calls, 0);
  EXPECT_EQ(r.model.states.size(), 1u);
  EXPECT_EQ(r.model.transitions.size(), 2u);
  EXPECT_DOUBLE_EQ(r.coverage.ratio(), 1.0);
}

TEST(Explore, DragonAllTargets) {
  App app = corpus_app("dragon");
  auto targets = parse_targets(
      apex::testing::read_text(corpus_path("dragon.targets")), app);
  auto r = explore(app, targets);
  EXPECT_EQ(r.coverage.targets_hit, 5);
  size_t longest = 0;
  for (const auto &h : r.hits) {
    longest = std::max(longest, h.sequence.size());
    auto sr = apply_sequence(app, h.sequence);
    EXPECT_TRUE(target_covered(app, h.target, sr.covered)) << h.target.to_string();
  }
  EXPECT_LE(longest, 6u);
  EXPECT_FALSE(r.stats.budget_exhausted);
}

TEST(Explore, LoginReachesEveryScreen) {
  App app = corpus_app("login");
  auto targets =
      parse_targets(apex::testing::read_text(corpus_path("login.targets")), app);
  auto r = explore(app, targets);
  EXPECT_EQ(r.model.states.size(), 4u);
  EXPECT_EQ(r.coverage.targets_hit, 3);
}

TEST(Explore, EventBudget) {
  App app = corpus_app("dragon");
  ExploreOptions o;
  o.max_events = 5;
  auto r = explore(app, {}, o);
  EXPECT_TRUE(r.stats.budget_exhausted);
  EXPECT_GE(r.stats.events_applied, 5);
  EXPECT_LE(r.stats.events_applied, 5 + 6);
}

// Invariants that hold on every corpus run.
TEST(ExploreProperty, CorpusInvariants) {
  for (const auto &name : corpus_names()) {
    App app = corpus_app(name);
    auto r = explore(app, {});
    EXPECT_FALSE(r.stats.budget_exhausted) << name;
    int ok = 0, traps = 0;
    for (const auto &h : r.history) {
      EXPECT_GE(h.coverage_delta, 0) << name;
      if (h.error.empty())
        ++ok;
      traps += h.trapped;
    }
    // Exactly one concrete summary per clean application.
    EXPECT_EQ(ok, r.stats.sequences_applied - traps) << name;
    std::set<std::string> concrete;
    for (const auto &[id, s] : r.model.summaries)
      if (s.concrete())
        concrete.insert(id);
    for (const auto &t : r.model.transitions)
      EXPECT_TRUE(concrete.count(t.summary)) << name;
    // Coverage over history prefixes never drops.
    std::set<std::pair<MethodSig, int>> blocks;
    int last = 0;
    for (const auto &h : r.history) {
      if (!h.error.empty() || h.sequence.empty() || !h.sequence.front().is_entry())
        continue;
      try {
        auto sr = apply_sequence(app, h.sequence);
        blocks.insert(sr.covered.begin(), sr.covered.end());
      } catch (const EventNotEnabled &) {
      }
      int now = coverage(app, blocks).covered;
      EXPECT_GE(now, last);
      last = now;
    }
    EXPECT_LE(last, r.coverage.covered) << name;
  }
}

TEST(ExploreProperty, OracleTransitionsAreFound) {
  for (const auto &name : corpus_names()) {
    App app = corpus_app(name);
    auto oracle = brute_force(app, 4);
    auto model = model_transitions(explore(app, {}).model, app);
    for (const auto &t : oracle.transitions)
      EXPECT_TRUE(model.count(t)) << name << " " << t.event << " [" << t.trace << "]";
  }
}

TEST(ExploreProperty, ShallowAppsMatchOracleExactly) {
  for (const char *name : {"fig1", "fig2", "counter", "receiver", "unknown_api", "rebind",
                           "loop"}) {
    App app = corpus_app(name);
    auto oracle = brute_force(app, 4);
    auto r = explore(app, {});
    EXPECT_LE(r.model.states.size(), 4u) << name;
    EXPECT_EQ(model_transitions(r.model, app), oracle.transitions) << name;
  }
}

TEST(ExploreProperty, Deterministic) {
  for (const auto &name : corpus_names()) {
    App app = corpus_app(name);
    auto a = explore(app, {});
    auto b = explore(app, {});
    EXPECT_EQ(a.model.to_json().dump(), b.model.to_json().dump()) << name;
    EXPECT_EQ(a.report_json(app).dump(), b.report_json(app).dump()) << name;
  }
}

TEST(ExploreProperty, ConcolicSoundness) {
  for (const auto &name : corpus_names()) {
    App app = corpus_app(name);
    auto r = explore(app, {});
    for (const auto &t : r.model.transitions) {
      auto problem = apex::testing::check_transition(app, r.model, t);
      EXPECT_FALSE(problem.has_value()) << name << ": " << problem.value_or("");
    }
  }
}

TEST(BaselineRandom, Examples) {
  App app = corpus_app("dragon");
  auto targets = parse_targets(apex::testing::read_text(corpus_path("dragon.targets")), app);
  auto zero = baseline_random(app, targets, 0, 1);
  auto boot_cov = coverage(app, blocks_entered(boot(app, 1).result.log));
  EXPECT_EQ(zero.coverage.covered, boot_cov.covered);
  EXPECT_EQ(zero.events_applied, 0);

  auto a = baseline_random(app, targets, 500, 3);
  auto b = baseline_random(app, targets, 500, 3);
  EXPECT_EQ(a.report_json(app).dump(), b.report_json(app).dump());
}

TEST(BaselineRandom, ExactValueGuardsStayClosed) {
  for (const char *name : {"login", "dragon"}) {
    App app = corpus_app(name);
    auto targets =
        parse_targets(apex::testing::read_text(corpus_path(std::string(name) + ".targets")), app);
    auto r = baseline_random(app, targets, 10000, 7);
    for (const auto &h : r.hits) {
      // Counter guards can be hit by chance; string guards cannot.
      EXPECT_TRUE(h.target.method == "Lair.onCreate" || h.target.method == "Lair.onAttack")
          << name << " " << h.target.to_string();
    }
  }
}
