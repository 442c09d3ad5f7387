#include <gtest/gtest.h>

#include <algorithm>

#include "apex/ipcfg.h"
#include "testutil.h"

using namespace apex;
using apex::testing::corpus_app;

namespace {

App methods_app(const std::string &methods) {
  return parse_app("manifest\n main A\nend\nactivity A\nend\n" + methods);
}

std::vector<int> indices(const Path &p) {
  std::vector<int> out;
  for (const auto &s : p.stmts)
    out.push_back(s.index);
  return out;
}

const char *kThreeWay = R"(
method A.m regs=1
  sget v0 A.x
  if eq v0 #0 4
  if eq v0 #1 6
  goto 7
  const v0 10
  goto 7
  const v0 11
  return
end
)";

} // namespace

TEST(Cfg, StraightLine) {
  App app = methods_app("method A.m regs=1\n const v0 1\n const v0 2\n return\nend\n");
  Cfg c = build_cfg(app.method_at("A.m"));
  EXPECT_EQ(c.blocks.size(), 1u);
  EXPECT_TRUE(c.edges.empty());
}

TEST(Cfg, Fig2OnClickHasTwoPaths) {
  App app = corpus_app("fig2");
  Cfg c = build_cfg(app.method_at("Main.onClick"));
  ASSERT_EQ(c.blocks.size(), 4u);
  EXPECT_EQ(c.edges, (std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 3}, {2, 3}}));
  EXPECT_TRUE(c.back_edges.empty());
}

TEST(Cfg, LoopHasBackEdge) {
  App app = corpus_app("loop");
  Cfg c = build_cfg(app.method_at("Main.onFill"));
  EXPECT_EQ(c.back_edges.size(), 1u);
}

TEST(Ipcfg, Fig2InlinesCallees) {
  App app = corpus_app("fig2");
  Ipcfg g = build_ipcfg("Main.onClick", app);
  auto ps = enumerate_paths(g);
  ASSERT_EQ(ps.paths.size(), 2u);
  EXPECT_FALSE(ps.truncated);
  // Ascending block order: the increase side (block 1) comes first.
  EXPECT_EQ(ps.paths[0].to_string(),
            "Main.onClick:{0,1,2,Main.increase:0,Main.increase:1,"
            "Main.increase:2,Main.increase:3,Main.increase:4,3,5}");
  EXPECT_EQ(ps.paths[1].to_string(),
            "Main.onClick:{0,1,4,Main.decrease:0,Main.decrease:1,"
            "Main.decrease:2,Main.decrease:3,Main.decrease:4,5}");
  EXPECT_TRUE(g.diagnostics.empty());
}

TEST(Ipcfg, NoInvokesEqualsCfg) {
  App app = corpus_app("fig1");
  Ipcfg g = build_ipcfg("A1.onClick", app);
  Cfg c = build_cfg(app.method_at("A1.onClick"));
  EXPECT_EQ(g.nodes.size(), c.blocks.size());
  EXPECT_EQ(g.edges.size(), c.edges.size());
}

TEST(Ipcfg, RecursionStopsAtBound) {
  App app = methods_app(R"(
method A.r regs=1
  sget v0 A.n
  if le v0 #0 4
  invoke A.r
  return
  return
end
)");
  Ipcfg g = build_ipcfg("A.r", app, 2);
  int max_depth = 0;
  for (const auto &n : g.nodes)
    max_depth = std::max(max_depth, n.depth);
  EXPECT_EQ(max_depth, 2);
  ASSERT_EQ(g.diagnostics.size(), 1u);
  EXPECT_EQ(g.diagnostics[0], "A.r:2 -> A.r (call depth bound 2)");
  // Frames: base case at depth 0, 1, 2 and the opaque call at depth 2.
  EXPECT_EQ(enumerate_paths(g).paths.size(), 4u);
}

TEST(Paths, SingleBlockAndLoop) {
  App app = methods_app("method A.m\n return\nend\n" + std::string(R"(
method A.l regs=2
  const v0 0
  sget v1 A.n
  if ge v0 v1 6
  const v1 1
  add v0 v0 v1
  goto 1
  return
end
)"));
  EXPECT_EQ(enumerate_paths(build_ipcfg("A.m", app)).paths.size(), 1u);
  auto loop = enumerate_paths(build_ipcfg("A.l", app), 1);
  ASSERT_EQ(loop.paths.size(), 2u);
  EXPECT_EQ(indices(loop.paths[0]), (std::vector<int>{0, 1, 2, 3, 4, 5, 1, 2, 6}));
  EXPECT_EQ(indices(loop.paths[1]), (std::vector<int>{0, 1, 2, 6}));
  EXPECT_EQ(enumerate_paths(build_ipcfg("A.l", app), 2).paths.size(), 3u);
  EXPECT_EQ(enumerate_paths(build_ipcfg("A.l", app), 0).paths.size(), 1u);
}

TEST(Paths, TruncationIsSignaled) {
  App app = methods_app(kThreeWay);
  auto ps = enumerate_paths(build_ipcfg("A.m", app), 1, 2);
  EXPECT_EQ(ps.paths.size(), 2u);
  EXPECT_TRUE(ps.truncated);
}

TEST(ExecutedPath, Fig2IncreaseSide) {
  App app = corpus_app("fig2");
  Ipcfg g = build_ipcfg("Main.onClick", app);
  ExecLog log = ExecLog::from_text(
      "S Main.onClick\nB Main.onClick 0\nB Main.onClick 1\nS Main.increase\n"
      "B Main.increase 0\nR Main.increase\nB Main.onClick 3\nR Main.onClick\n");
  EXPECT_EQ(executed_path(log, g), enumerate_paths(g).paths[0]);
}

TEST(ExecutedPath, RejectsForeignBlock) {
  App app = corpus_app("fig2");
  Ipcfg g = build_ipcfg("Main.onClick", app);
  ExecLog bad = ExecLog::from_text(
      "S Main.onClick\nB Main.onClick 0\nB Main.onClick 7\nR Main.onClick\n");
  EXPECT_THROW(executed_path(bad, g), IntegrityError);
  ExecLog skip = ExecLog::from_text(
      "S Main.onClick\nB Main.onClick 0\nB Main.onClick 3\nR Main.onClick\n");
  EXPECT_THROW(executed_path(skip, g), IntegrityError);
}

TEST(ExecutedPath, SinglePathMethod) {
  App app = corpus_app("counter");
  Ipcfg g = build_ipcfg("Main.onInc", app);
  auto s = boot(app).state;
  auto r = apply_event(app, s, Event::tap("inc"));
  EXPECT_EQ(executed_path(split_roots(r.log)[0], g), enumerate_paths(g).paths[0]);
}

TEST(SymbolicPaths, Fig1AndThreeWay) {
  App app = corpus_app("fig1");
  Ipcfg g = build_ipcfg("A1.onClick", app);
  auto all = enumerate_paths(g);
  auto s = boot(app).state;
  auto r = apply_event(app, s, Event::tap("b1"));
  Path exec = executed_path(split_roots(r.log)[0], g);
  EXPECT_EQ(indices(exec), (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 11}));
  auto sym = symbolic_paths(exec, all);
  ASSERT_EQ(sym.size(), 1u);
  EXPECT_EQ(indices(sym[0]), (std::vector<int>{0, 1, 7, 8, 9, 10, 11}));

  App three = methods_app(kThreeWay);
  auto ps = enumerate_paths(build_ipcfg("A.m", three));
  ASSERT_EQ(ps.paths.size(), 3u);
  EXPECT_EQ(symbolic_paths(ps.paths[1], ps).size(), 2u);
  Path single = enumerate_paths(build_ipcfg("Main.onInc", corpus_app("counter")))
                    .paths[0];
  EXPECT_TRUE(symbolic_paths(single, {{single}, false}).empty());
}

// Every enumerated path is a walk over IPCFG edges starting at the
// root entry and ending at a root return; CFG blocks partition each body.
TEST(IpcfgProperty, PathValidityAndPartition) {
  for (std::string name : {"fig1", "fig2", "counter", "receiver", "unknown_api",
                           "rebind", "loop", "login", "dragon"}) {
    App app = corpus_app(name);
    for (const auto &[sig, m] : app.methods) {
      Cfg c = build_cfg(m);
      int covered = 0, expect_begin = 0;
      for (auto [b, e] : c.blocks) {
        EXPECT_EQ(b, expect_begin);
        covered += e - b;
        expect_begin = e;
      }
      EXPECT_EQ(covered, static_cast<int>(m.body.size()));

      Ipcfg g = build_ipcfg(sig, app);
      auto ps = enumerate_paths(g);
      for (const auto &p : ps.paths) {
        ASSERT_FALSE(p.empty());
        EXPECT_EQ(p.stmts.front(), (Stmt{sig, 0}));
        EXPECT_EQ(p.stmts.back().method, sig);
        EXPECT_EQ(m.body[static_cast<size_t>(p.stmts.back().index)].op,
                  Opcode::Return);
        // Consume node by node; each hop must follow an IPCFG edge.
        size_t pos = 0;
        int node = g.entry();
        for (;;) {
          const IpNode &n = g.nodes[static_cast<size_t>(node)];
          for (int i = n.begin; i < n.end; ++i, ++pos) {
            ASSERT_LT(pos, p.stmts.size());
            ASSERT_EQ(p.stmts[pos], (Stmt{n.method, i})) << p.to_string();
          }
          if (pos == p.stmts.size())
            break;
          int next = -1;
          for (int ei : g.out[static_cast<size_t>(node)]) {
            const IpNode &t = g.nodes[static_cast<size_t>(g.edges[static_cast<size_t>(ei)].to)];
            if (p.stmts[pos] == Stmt{t.method, t.begin})
              next = t.id;
          }
          ASSERT_GE(next, 0) << p.to_string();
          node = next;
        }
        EXPECT_TRUE(g.nodes[static_cast<size_t>(node)].is_return);
        EXPECT_EQ(g.nodes[static_cast<size_t>(node)].depth, 0);
      }
      // Partition: executing any enumerated path excludes exactly itself.
      if (!ps.truncated)
        for (const auto &p : ps.paths)
          EXPECT_EQ(symbolic_paths(p, ps).size() + 1, ps.paths.size());
    }
  }
}

// executed_path agrees with the raw block log on random runs, and lies in the
// enumerated set whenever no loop ran past the bound.
TEST(IpcfgProperty, ExecutedPathMatchesLog) {
  for (std::string name : {"fig1", "fig2", "counter", "receiver", "rebind",
                           "loop", "login", "dragon"}) {
    App app = corpus_app(name);
    RuntimeState s = boot(app, 5).state;
    for (int step = 0; step < 30; ++step) {
      auto ev = extract_events(app, s);
      if (ev.empty())
        break;
      auto r = apply_event(app, s, ev[(step * 5 + 1) % ev.size()]);
      for (const auto &root_log : split_roots(r.log)) {
        MethodSig root = root_log.entries.front().sig;
        Ipcfg g = build_ipcfg(root, app);
        Path p = executed_path(root_log, g);
        std::vector<std::pair<MethodSig, int>> logged;
        for (const auto &e : root_log.entries)
          if (e.kind == LogKind::BlockEnter)
            logged.push_back({e.sig, e.block});
        EXPECT_EQ(p.block_trace(app), logged);
        if (name != "loop") {
          auto all = enumerate_paths(g);
          EXPECT_NE(std::find(all.paths.begin(), all.paths.end(), p),
                    all.paths.end())
              << p.to_string();
        }
      }
    }
  }
}

TEST(ExecutedPath, LoopBeyondBound) {
  App app = corpus_app("loop");
  auto r = apply_sequence(app, {Event::launch("Main"), Event::tap("fill")});
  Ipcfg g = build_ipcfg("Main.onFill", app);
  Path p = executed_path(split_roots(r.last.log)[0], g);
  auto all = enumerate_paths(g);
  EXPECT_EQ(std::find(all.paths.begin(), all.paths.end(), p), all.paths.end());
  EXPECT_EQ(symbolic_paths(p, all).size(), all.paths.size());
}

TEST(ExecutedPath, DropsFramesBeyondBound) {
  App app = methods_app(R"(
method A.r regs=2
  sget v0 A.n
  if le v0 #0 7
  const v1 1
  sub v0 v0 v1
  sput v0 A.n
  invoke A.r
  return
  return
end
)");
  ExecLog log;
  // n = 3: three nested calls; bound 1 keeps the root and one callee.
  for (int d = 0; d < 4; ++d) {
    log.entries.push_back({LogKind::MethodStart, "A.r", -1, ""});
    log.entries.push_back({LogKind::BlockEnter, "A.r", 0, ""});
    log.entries.push_back({LogKind::BlockEnter, "A.r", d < 3 ? 1 : 2, ""});
  }
  for (int d = 0; d < 4; ++d)
    log.entries.push_back({LogKind::MethodReturn, "A.r", -1, ""});
  Ipcfg g = build_ipcfg("A.r", app, 1);
  Path p = executed_path(log, g);
  auto all = enumerate_paths(g);
  EXPECT_NE(std::find(all.paths.begin(), all.paths.end(), p), all.paths.end());
  EXPECT_EQ(p.stmts.size(), 7u + 7u);
}

TEST(Dot, ExportsNodesAndEdges) {
  App app = corpus_app("fig2");
  Ipcfg g = build_ipcfg("Main.onClick", app);
  std::string dot = g.to_dot();
  EXPECT_NE(dot.find("label=call"), std::string::npos);
  EXPECT_NE(dot.find("label=ret"), std::string::npos);
  std::string c = cfg_to_dot(build_cfg(app.method_at("Main.onClick")),
                             app.method_at("Main.onClick"));
  EXPECT_NE(c.find("b0 -> b1"), std::string::npos);
}
