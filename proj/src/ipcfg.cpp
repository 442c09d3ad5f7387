#include "apex/ipcfg.h"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "apex/hash.h"

namespace apex {

bool Cfg::has_edge(int from, int to) const {
  if (from < 0 || from >= static_cast<int>(succ.size()))
    return false;
  const auto &s = succ[static_cast<size_t>(from)];
  return std::find(s.begin(), s.end(), to) != s.end();
}

Cfg build_cfg(const Method &m) {
  Cfg cfg;
  cfg.method = m.sig;
  int n = m.block_count();
  cfg.succ.resize(static_cast<size_t>(n));
  for (int b = 0; b < n; ++b) {
    cfg.blocks.push_back({m.block_begin(b), m.block_end(b)});
    const Instr &last = m.body[static_cast<size_t>(m.block_end(b) - 1)];
    std::set<int> s;
    if (last.is_branch())
      s.insert(m.block_of(last.target));
    if (last.op != Opcode::Goto && last.op != Opcode::Return && b + 1 < n)
      s.insert(b + 1);
    for (int t : s) {
      cfg.succ[static_cast<size_t>(b)].push_back(t);
      cfg.edges.push_back({b, t});
    }
  }
  // Iterative DFS; an edge into a block still on the stack is a back edge.
  std::vector<int> color(static_cast<size_t>(n), 0);
  std::vector<std::pair<int, size_t>> stack{{0, 0}};
  color[0] = 1;
  while (!stack.empty()) {
    auto &[b, i] = stack.back();
    const auto &s = cfg.succ[static_cast<size_t>(b)];
    if (i == s.size()) {
      color[static_cast<size_t>(b)] = 2;
      stack.pop_back();
      continue;
    }
    int t = s[i++];
    if (color[static_cast<size_t>(t)] == 1)
      cfg.back_edges.insert({b, t});
    else if (color[static_cast<size_t>(t)] == 0) {
      color[static_cast<size_t>(t)] = 1;
      stack.push_back({t, 0});
    }
  }
  return cfg;
}

namespace {

std::string dot_escape(const std::string &s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\')
      out += '\\';
    out += c;
  }
  return out;
}

class IpBuilder {
public:
  IpBuilder(const App &app, Ipcfg &g) : app_(app), g_(g) {}

  // Returns the entry node of the expansion and appends its return nodes.
  int expand(const MethodSig &sig, const std::vector<int> &ctx, int depth,
             std::vector<int> &returns) {
    const Method &m = app_.method_at(sig);
    const Cfg &cfg = cfg_of(m);
    struct CallSite {
      int node;
      size_t index;
      std::string callee;
    };
    std::vector<std::vector<int>> segs(cfg.blocks.size());
    std::vector<CallSite> calls;
    for (size_t b = 0; b < cfg.blocks.size(); ++b) {
      auto [begin, end] = cfg.blocks[b];
      int start = begin;
      for (int i = begin; i < end; ++i) {
        const Instr &ins = m.body[static_cast<size_t>(i)];
        if (ins.op != Opcode::Invoke)
          continue;
        if (depth + 1 > g_.call_depth_bound) {
          g_.diagnostics.push_back(sig + ":" + std::to_string(i) + " -> " +
                                   ins.name + " (call depth bound " +
                                   std::to_string(g_.call_depth_bound) + ")");
          continue;
        }
        int id = add_node(ctx, sig, static_cast<int>(b), start, i + 1, depth);
        segs[b].push_back(id);
        calls.push_back({id, b, ins.name});
        start = i + 1;
      }
      if (start < end)
        segs[b].push_back(
            add_node(ctx, sig, static_cast<int>(b), start, end, depth));
    }
    // Continuation of segment k in block b: next segment, else the
    // fallthrough block's first segment.
    auto continuation = [&](size_t b, int node) {
      auto &s = segs[b];
      auto it = std::find(s.begin(), s.end(), node);
      if (it + 1 != s.end())
        return *(it + 1);
      return segs.at(b + 1).front();
    };
    for (size_t b = 0; b < cfg.blocks.size(); ++b) {
      if (segs[b].empty())
        continue;
      int last = segs[b].back();
      bool ends_in_call = false;
      for (const auto &c : calls)
        ends_in_call |= c.node == last;
      if (!ends_in_call)
        for (int t : cfg.succ[b])
          add_edge(last, segs[static_cast<size_t>(t)].front(), IpEdgeKind::Flow,
                   cfg.back_edges.count({static_cast<int>(b), t}) > 0);
      if (g_.nodes[static_cast<size_t>(last)].is_return)
        returns.push_back(last);
    }
    for (const auto &c : calls) {
      std::vector<int> sub = ctx;
      sub.push_back(c.node);
      std::vector<int> callee_returns;
      int entry = expand(c.callee, sub, depth + 1, callee_returns);
      add_edge(c.node, entry, IpEdgeKind::Call, false);
      int cont = continuation(c.index, c.node);
      // A call ending its block returns along the fallthrough CFG edge.
      bool back = g_.nodes[static_cast<size_t>(cont)].block !=
                      static_cast<int>(c.index) &&
                  cfg.back_edges.count({static_cast<int>(c.index),
                                        static_cast<int>(c.index) + 1}) > 0;
      for (int r : callee_returns)
        add_edge(r, cont, IpEdgeKind::Return, back);
    }
    return segs[0].front();
  }

private:
  const Cfg &cfg_of(const Method &m) {
    auto it = cfgs_.find(m.sig);
    if (it == cfgs_.end())
      it = cfgs_.emplace(m.sig, build_cfg(m)).first;
    return it->second;
  }

  int add_node(const std::vector<int> &ctx, const MethodSig &sig, int block,
               int begin, int end, int depth) {
    IpNode n;
    n.id = static_cast<int>(g_.nodes.size());
    n.context = ctx;
    n.method = sig;
    n.block = block;
    n.begin = begin;
    n.end = end;
    n.depth = depth;
    n.is_return =
        app_.method_at(sig).body[static_cast<size_t>(end - 1)].op == Opcode::Return;
    g_.nodes.push_back(std::move(n));
    return g_.nodes.back().id;
  }

  void add_edge(int from, int to, IpEdgeKind kind, bool back) {
    g_.edges.push_back({from, to, kind, back});
  }

  const App &app_;
  Ipcfg &g_;
  std::map<MethodSig, Cfg> cfgs_;
};

} // namespace

std::set<Stmt> Ipcfg::statements() const {
  std::set<Stmt> out;
  for (const auto &n : nodes)
    for (int i = n.begin; i < n.end; ++i)
      out.insert({n.method, i});
  return out;
}

std::string Ipcfg::to_dot() const {
  std::ostringstream o;
  o << "digraph ipcfg {\n  node [shape=box];\n";
  for (const auto &n : nodes)
    o << "  n" << n.id << " [label=\"" << n.method << " B" << n.block << " ["
      << n.begin << "," << n.end << ") d" << n.depth << "\"];\n";
  for (const auto &e : edges) {
    o << "  n" << e.from << " -> n" << e.to;
    if (e.kind == IpEdgeKind::Call)
      o << " [style=dashed,label=call]";
    else if (e.kind == IpEdgeKind::Return)
      o << " [style=dotted,label=ret]";
    else if (e.back)
      o << " [color=red]";
    o << ";\n";
  }
  o << "}\n";
  return o.str();
}

Ipcfg build_ipcfg(const MethodSig &root, const App &app, int call_depth_bound) {
  Ipcfg g;
  g.app = &app;
  g.root = root;
  g.call_depth_bound = call_depth_bound;
  IpBuilder b(app, g);
  std::vector<int> returns;
  b.expand(root, {}, 0, returns);
  g.out.resize(g.nodes.size());
  for (size_t i = 0; i < g.edges.size(); ++i)
    g.out[static_cast<size_t>(g.edges[i].from)].push_back(static_cast<int>(i));
  for (auto &o : g.out)
    std::sort(o.begin(), o.end(), [&](int x, int y) {
      const IpNode &a = g.nodes[static_cast<size_t>(g.edges[static_cast<size_t>(x)].to)];
      const IpNode &b2 = g.nodes[static_cast<size_t>(g.edges[static_cast<size_t>(y)].to)];
      return std::tie(a.block, a.id) < std::tie(b2.block, b2.id);
    });
  return g;
}

std::string Path::id() const { return hex64(fnv1a64(to_string())); }

std::string Path::to_string() const {
  std::string s = root + ":{";
  for (size_t i = 0; i < stmts.size(); ++i) {
    if (i)
      s += ",";
    if (stmts[i].method != root)
      s += stmts[i].method + ":";
    s += std::to_string(stmts[i].index);
  }
  return s + "}";
}

std::vector<std::pair<MethodSig, int>> Path::block_trace(const App &app) const {
  std::vector<std::pair<MethodSig, int>> out;
  for (const auto &s : stmts) {
    const Method &m = app.method_at(s.method);
    if (std::binary_search(m.leaders.begin(), m.leaders.end(), s.index))
      out.push_back({s.method, m.block_of(s.index)});
  }
  return out;
}

PathSet enumerate_paths(const Ipcfg &g, int loop_bound, int max_paths) {
  PathSet result;
  if (g.nodes.empty())
    return result;
  std::vector<Stmt> stmts;
  std::vector<int> back_count(g.edges.size(), 0);
  bool stop = false;
  std::function<void(int)> dfs = [&](int id) {
    const IpNode &n = g.nodes[static_cast<size_t>(id)];
    size_t mark = stmts.size();
    for (int i = n.begin; i < n.end; ++i)
      stmts.push_back({n.method, i});
    if (n.is_return && n.depth == 0) {
      if (static_cast<int>(result.paths.size()) >= max_paths) {
        result.truncated = true;
        stop = true;
      } else {
        result.paths.push_back({g.root, stmts});
      }
    } else {
      for (int ei : g.out[static_cast<size_t>(id)]) {
        if (stop)
          break;
        const IpEdge &e = g.edges[static_cast<size_t>(ei)];
        if (e.back) {
          if (back_count[static_cast<size_t>(ei)] >= loop_bound)
            continue;
          ++back_count[static_cast<size_t>(ei)];
          dfs(e.to);
          --back_count[static_cast<size_t>(ei)];
        } else {
          dfs(e.to);
        }
      }
    }
    stmts.resize(mark);
  };
  dfs(g.entry());
  return result;
}

std::vector<ExecLog> split_roots(const ExecLog &log) {
  std::vector<ExecLog> out;
  int depth = 0;
  for (const auto &e : log.entries) {
    if (e.kind == LogKind::Trap)
      break;
    if (e.kind == LogKind::MethodStart && depth++ == 0)
      out.emplace_back();
    if (!out.empty() && (depth > 0 || e.kind == LogKind::MethodReturn))
      out.back().entries.push_back(e);
    if (e.kind == LogKind::MethodReturn)
      --depth;
  }
  return out;
}

Path executed_path(const ExecLog &root_log, const Ipcfg &g) {
  const App &app = *g.app;
  struct Frame {
    const Method *m;
    int cur = 0;
    int end = 0;
    int block = -1;
    bool waiting = false;
  };
  Path p;
  p.root = g.root;
  std::vector<Frame> frames;
  int depth = -1;
  auto fail = [](const std::string &msg) -> void {
    throw IntegrityError("executed_path: " + msg);
  };
  auto emit = [&](Frame &f) {
    while (f.cur < f.end) {
      const Instr &ins = f.m->body[static_cast<size_t>(f.cur)];
      p.stmts.push_back({f.m->sig, f.cur});
      ++f.cur;
      if (ins.op == Opcode::Invoke &&
          static_cast<int>(frames.size()) <= g.call_depth_bound) {
        f.waiting = true;
        return;
      }
    }
  };
  for (const auto &e : root_log.entries) {
    if (e.kind == LogKind::MethodStart) {
      ++depth;
      if (depth == 0 && e.sig != g.root)
        fail("log root " + e.sig + " does not match graph root " + g.root);
      if (depth > g.call_depth_bound)
        continue;
      const Method *m = app.method(e.sig);
      if (!m)
        fail("unknown method " + e.sig);
      if (!frames.empty()) {
        Frame &parent = frames.back();
        const Instr &call = parent.m->body[static_cast<size_t>(parent.cur - 1)];
        if (!parent.waiting || call.name != e.sig)
          fail("unexpected call to " + e.sig);
      }
      frames.push_back({m});
    } else if (e.kind == LogKind::MethodReturn) {
      --depth;
      if (depth + 1 > g.call_depth_bound)
        continue;
      if (frames.empty() || frames.back().m->sig != e.sig)
        fail("unbalanced return of " + e.sig);
      Frame &f = frames.back();
      if (f.cur != f.end || f.waiting ||
          f.m->body[static_cast<size_t>(f.end - 1)].op != Opcode::Return)
        fail("return of " + e.sig + " before its return statement");
      frames.pop_back();
      if (!frames.empty()) {
        frames.back().waiting = false;
        emit(frames.back());
      }
    } else if (e.kind == LogKind::BlockEnter) {
      if (depth > g.call_depth_bound)
        continue;
      if (frames.empty() || frames.back().m->sig != e.sig)
        fail("block entry outside its frame: " + e.sig);
      Frame &f = frames.back();
      if (e.block < 0 || e.block >= f.m->block_count())
        fail("block " + std::to_string(e.block) + " not in " + e.sig);
      if (f.waiting || f.cur != f.end)
        fail("block " + std::to_string(e.block) + " entered mid-block");
      if (f.block < 0 ? e.block != 0
                      : !build_cfg(*f.m).has_edge(f.block, e.block))
        fail("no edge " + std::to_string(f.block) + "->" +
             std::to_string(e.block) + " in " + e.sig);
      f.block = e.block;
      f.cur = f.m->block_begin(e.block);
      f.end = f.m->block_end(e.block);
      emit(f);
    }
  }
  if (!frames.empty() || depth != -1)
    fail("log ends inside a method");
  if (p.stmts.empty())
    fail("empty log");
  return p;
}

std::vector<Path> symbolic_paths(const Path &executed, const PathSet &all) {
  std::vector<Path> out;
  for (const auto &p : all.paths)
    if (p != executed)
      out.push_back(p);
  return out;
}

std::string cfg_to_dot(const Cfg &cfg, const Method &m) {
  std::ostringstream o;
  o << "digraph \"" << m.sig << "\" {\n  node [shape=box,fontname=monospace];\n";
  for (size_t b = 0; b < cfg.blocks.size(); ++b) {
    o << "  b" << b << " [label=\"B" << b;
    for (int i = cfg.blocks[b].first; i < cfg.blocks[b].second; ++i)
      o << "\\l" << i << ": "
        << dot_escape(instr_to_string(m.body[static_cast<size_t>(i)]));
    o << "\\l\"];\n";
  }
  for (auto [a, b] : cfg.edges)
    o << "  b" << a << " -> b" << b
      << (cfg.back_edges.count({a, b}) ? " [color=red]" : "") << ";\n";
  o << "}\n";
  return o.str();
}

} // namespace apex
