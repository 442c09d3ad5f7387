#include "apex/solver.h"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <functional>

namespace apex {

const char *solve_status_name(SolveStatus s) {
  switch (s) {
  case SolveStatus::Sat: return "sat";
  case SolveStatus::Unsat: return "unsat";
  case SolveStatus::Unknown: return "unknown";
  }
  return "?";
}

namespace {

Sort static_sort(const ExprRef &e, const std::map<Symbol, Sort> &sorts) {
  switch (e->kind) {
  case ExprKind::Lit:
    if (e->lit.is_bool()) return Sort::Bool;
    if (e->lit.is_str()) return Sort::Str;
    if (e->lit.is_int()) return Sort::Int;
    return Sort::Any;
  case ExprKind::Sym: {
    auto it = sorts.find(e->sym);
    return it == sorts.end() || it->second == Sort::Any ? e->sort : it->second;
  }
  case ExprKind::Arith:
    return Sort::Int;
  case ExprKind::Cmp:
  case ExprKind::And:
  case ExprKind::Or:
  case ExprKind::Not:
    return Sort::Bool;
  case ExprKind::StrOp:
    switch (e->strop) {
    case StrOpKind::Concat: return Sort::Str;
    case StrOpKind::Equals: return Sort::Bool;
    case StrOpKind::Length: return Sort::Int;
    }
    return Sort::Any;
  default:
    return Sort::Any;
  }
}

void infer(const ExprRef &e, Sort expected, std::map<Symbol, Sort> &sorts) {
  switch (e->kind) {
  case ExprKind::Sym: {
    Sort &s = sorts[e->sym];
    if (s == Sort::Any)
      s = e->sort != Sort::Any ? e->sort : expected;
    return;
  }
  case ExprKind::Arith:
    for (const auto &k : e->kids)
      infer(k, Sort::Int, sorts);
    return;
  case ExprKind::Cmp:
    if (e->cmp == CmpOp::Eq || e->cmp == CmpOp::Ne) {
      Sort a = static_sort(e->kids[0], sorts), b = static_sort(e->kids[1], sorts);
      infer(e->kids[0], b, sorts);
      infer(e->kids[1], a, sorts);
    } else {
      infer(e->kids[0], Sort::Int, sorts);
      infer(e->kids[1], Sort::Int, sorts);
    }
    return;
  case ExprKind::And:
  case ExprKind::Or:
  case ExprKind::Not:
    for (const auto &k : e->kids)
      infer(k, Sort::Bool, sorts);
    return;
  case ExprKind::StrOp:
    for (const auto &k : e->kids)
      infer(k, Sort::Str, sorts);
    return;
  default:
    return;
  }
}

void collect_literals(const ExprRef &e, std::set<std::string> &strs, int64_t &max_int) {
  if (e->kind == ExprKind::Lit) {
    if (e->lit.is_str())
      strs.insert(e->lit.as_str());
    else if (e->lit.is_int())
      max_int = std::max(max_int, std::min<int64_t>(16, std::abs(e->lit.as_int())));
  }
  for (const auto &k : e->kids)
    collect_literals(k, strs, max_int);
}

struct ByLengthThenText {
  bool operator()(const std::string &a, const std::string &b) const {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  }
};

struct Problem {
  std::vector<Symbol> vars;
  std::vector<std::vector<Value>> domains;
  /// Multi-variable conjuncts, bucketed by the deepest variable they use.
  std::vector<std::vector<ExprRef>> checks;
  bool unsat = false;
  std::optional<std::string> unknown;
};

std::optional<Value> lookup(const Problem &p, const std::vector<Value> &cur,
                            const Symbol &s) {
  auto it = std::lower_bound(p.vars.begin(), p.vars.end(), s);
  if (it == p.vars.end() || !(*it == s))
    return std::nullopt;
  return cur[static_cast<size_t>(it - p.vars.begin())];
}

bool holds(const ExprRef &c, const Resolver &r) {
  auto v = evaluate(c, r);
  return v && v->is_bool() && v->as_bool();
}

Problem prepare(const PathConstraint &raw, int bound) {
  Problem p;
  PathConstraint c;
  for (const auto &k : raw) {
    if (const Expr *o = find_opaque(k)) {
      p.unknown = o->kind == ExprKind::Unknown
                      ? "unknown value: " + o->note
                      : "unmodeled api: (" + std::string(sym_kind_name(o->sym.kind)) +
                            " " + o->sym.name() + ")";
      return p;
    }
    c.push_back(simplify(k));
  }
  auto sorts = infer_sorts(c);
  for (const auto &[s, _] : sorts)
    p.vars.push_back(s);
  int nstr = 0;
  for (const auto &[_, sort] : sorts)
    nstr += sort == Sort::Str;
  std::vector<Value> ints = int_domain(bound);
  std::vector<Value> strs = nstr ? string_domain(c, nstr) : std::vector<Value>{};
  for (const auto &[s, sort] : sorts) {
    if (sort == Sort::Bool)
      p.domains.push_back({Value::of_bool(false), Value::of_bool(true)});
    else if (sort == Sort::Str)
      p.domains.push_back(strs);
    else
      p.domains.push_back(ints);
  }
  p.checks.resize(p.vars.size());
  for (const auto &k : c) {
    std::set<Symbol> syms;
    collect_symbols(k, syms);
    if (syms.empty()) {
      if (!holds(k, [](const Symbol &) { return std::nullopt; })) {
        p.unsat = true;
        return p;
      }
      continue;
    }
    size_t deepest = 0;
    for (const auto &s : syms)
      deepest = std::max(deepest, static_cast<size_t>(
                                      std::lower_bound(p.vars.begin(), p.vars.end(), s) -
                                      p.vars.begin()));
    if (syms.size() == 1) {
      // Unary conjuncts prune the domain up front.
      auto &dom = p.domains[deepest];
      Symbol s = *syms.begin();
      std::vector<Value> kept;
      for (const auto &v : dom)
        if (holds(k, [&](const Symbol &q) -> std::optional<Value> {
              if (q == s)
                return v;
              return std::nullopt;
            }))
          kept.push_back(v);
      dom = std::move(kept);
      if (dom.empty()) {
        p.unsat = true;
        return p;
      }
    } else {
      p.checks[deepest].push_back(k);
    }
  }
  return p;
}

bool level_ok(const Problem &p, const std::vector<Value> &cur, size_t d) {
  Resolver r = [&](const Symbol &s) { return lookup(p, cur, s); };
  for (const auto &k : p.checks[d])
    if (!holds(k, r))
      return false;
  return true;
}

bool search(const Problem &p, std::vector<Value> &cur, size_t d) {
  if (d == p.vars.size())
    return true;
  for (const auto &v : p.domains[d]) {
    cur[d] = v;
    if (level_ok(p, cur, d) && search(p, cur, d + 1))
      return true;
  }
  return false;
}

SolveResult finish(const Problem &p, const std::vector<Value> &cur) {
  SolveResult r;
  r.status = SolveStatus::Sat;
  for (size_t i = 0; i < p.vars.size(); ++i)
    r.assignment[p.vars[i]] = cur[i];
  return r;
}

std::optional<SolveResult> trivial(const Problem &p) {
  if (p.unknown)
    return SolveResult{SolveStatus::Unknown, {}, *p.unknown};
  if (p.unsat)
    return SolveResult{SolveStatus::Unsat, {}, {}};
  if (p.vars.empty())
    return SolveResult{SolveStatus::Sat, {}, {}};
  return std::nullopt;
}

} // namespace

std::map<Symbol, Sort> infer_sorts(const PathConstraint &c) {
  std::map<Symbol, Sort> sorts;
  for (const auto &k : c) {
    std::set<Symbol> syms;
    collect_symbols(k, syms);
    for (const auto &s : syms)
      sorts.emplace(s, Sort::Any);
  }
  // A few passes let equalities between symbols propagate.
  for (int pass = 0; pass < 3; ++pass)
    for (const auto &k : c)
      infer(k, Sort::Bool, sorts);
  for (auto &[_, s] : sorts)
    if (s == Sort::Any)
      s = Sort::Int;
  return sorts;
}

std::vector<Value> int_domain(int bound) {
  std::vector<Value> d{Value::of_int(0)};
  for (int i = 1; i <= bound; ++i) {
    d.push_back(Value::of_int(i));
    d.push_back(Value::of_int(-i));
  }
  return d;
}

std::vector<Value> string_domain(const PathConstraint &c, int string_symbols) {
  std::set<std::string> lits;
  int64_t max_int = 0;
  for (const auto &k : c)
    collect_literals(k, lits, max_int);
  std::set<std::string, ByLengthThenText> out{""};
  size_t max_len = static_cast<size_t>(max_int);
  for (const auto &l : lits) {
    max_len = std::max(max_len, l.size());
    for (size_t i = 0; i < l.size(); ++i)
      for (size_t n = 1; i + n <= l.size(); ++n)
        out.insert(l.substr(i, n));
    for (const auto &r : lits)
      out.insert(l + r);
  }
  max_len = std::min<size_t>(max_len + 1, 16);
  size_t want = static_cast<size_t>(string_symbols) + 1;
  for (size_t len = 1; len <= max_len; ++len) {
    std::string s(len, 'a');
    size_t got = 0;
    for (;;) {
      if (!lits.count(s)) {
        out.insert(s);
        if (++got == want)
          break;
      }
      // Next string of this length in lexicographic order.
      size_t i = len;
      while (i > 0 && s[i - 1] == 'z')
        s[--i] = 'a';
      if (i == 0)
        break;
      ++s[i - 1];
    }
  }
  std::vector<Value> d;
  for (const auto &s : out)
    d.push_back(Value::of_str(s));
  return d;
}

SolveResult decide_serial(const PathConstraint &c, int domain_bound) {
  Problem p = prepare(c, domain_bound);
  if (auto t = trivial(p))
    return *t;
  std::vector<Value> cur(p.vars.size());
  if (search(p, cur, 0))
    return finish(p, cur);
  return {SolveStatus::Unsat, {}, {}};
}

SolveResult decide_parallel(const PathConstraint &c, int domain_bound) {
  Problem p = prepare(c, domain_bound);
  if (auto t = trivial(p))
    return *t;
  const auto &first = p.domains[0];
  long n = static_cast<long>(first.size());
  std::vector<std::vector<Value>> found(first.size());
  std::atomic<long> best{n};
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    if (i > best.load(std::memory_order_relaxed))
      continue;
    std::vector<Value> cur(p.vars.size());
    cur[0] = first[static_cast<size_t>(i)];
    if (level_ok(p, cur, 0) && search(p, cur, 1)) {
      found[static_cast<size_t>(i)] = std::move(cur);
      long prev = best.load();
      while (i < prev && !best.compare_exchange_weak(prev, i)) {
      }
    }
  }
  long b = best.load();
  if (b == n)
    return {SolveStatus::Unsat, {}, {}};
  return finish(p, found[static_cast<size_t>(b)]);
}

SolveResult decide(const PathConstraint &c, int domain_bound) {
  // Parallel only when there is real search work behind the first variable.
  std::set<Symbol> syms;
  for (const auto &k : c)
    collect_symbols(k, syms);
  if (syms.size() >= 3 && domain_bound >= 16 && omp_get_max_threads() > 1)
    return decide_parallel(c, domain_bound);
  return decide_serial(c, domain_bound);
}

PathConstraint precondition(const SymResult &post, const PathConstraint &c) {
  std::map<Symbol, ExprRef> sub;
  for (const auto &[loc, e] : post.state.assignments)
    sub[location_symbol(loc)] = e;
  PathConstraint out;
  auto add = [&](const ExprRef &k) {
    ExprRef s = simplify(k);
    if (s->kind == ExprKind::Lit && s->lit.is_bool()) {
      if (s->lit.as_bool())
        return true;
      out = {mk_bool(false)};
      return false;
    }
    out.push_back(s);
    return true;
  };
  for (const auto &k : post.constraint)
    if (!add(k))
      return out;
  for (const auto &k : c)
    if (!add(substitute(k, sub)))
      return out;
  return out;
}

SolveResult satisfies(const SymResult &post, const PathConstraint &c, int domain_bound,
                      PathConstraint *residual) {
  PathConstraint r = precondition(post, c);
  if (residual)
    *residual = r;
  if (post.state.havoc)
    return {SolveStatus::Unknown, {}, "state unknown after " + *post.state.havoc};
  return decide(r, domain_bound);
}

std::optional<int> repetition_expand(const SymState &post,
                                     const PathConstraint &residual, int k_max,
                                     const Resolver &base) {
  std::map<Symbol, int64_t> step;
  std::set<Symbol> syms;
  for (const auto &k : residual)
    collect_symbols(k, syms);
  for (const auto &s : syms) {
    auto loc = symbol_location(s);
    if (!loc)
      continue;
    auto it = post.assignments.find(*loc);
    if (it == post.assignments.end())
      continue;
    ExprRef e = simplify(it->second);
    if (e->kind == ExprKind::Sym && e->sym == s) {
      step[s] = 0;
    } else if (e->kind == ExprKind::Arith && e->arith == ArithOp::Add &&
               e->kids[0]->kind == ExprKind::Sym && e->kids[0]->sym == s &&
               e->kids[1]->kind == ExprKind::Lit && e->kids[1]->lit.is_int()) {
      step[s] = e->kids[1]->lit.as_int();
    } else {
      return std::nullopt;
    }
  }
  for (int k = 0; k <= k_max; ++k) {
    Resolver r = [&](const Symbol &s) -> std::optional<Value> {
      auto b = base(s);
      auto it = step.find(s);
      if (!b || it == step.end())
        return b;
      return apply_arith(ArithOp::Add, *b, Value::of_int(it->second * k));
    };
    auto ok = evaluate_constraint(residual, r);
    if (ok && *ok)
      return k;
  }
  return std::nullopt;
}

ExprRef ground_boot(const ExprRef &e, const App &app, const SymState &entry) {
  std::set<Symbol> syms;
  collect_symbols(e, syms);
  std::map<Symbol, ExprRef> sub;
  for (const auto &s : syms) {
    auto loc = symbol_location(s);
    if (!loc)
      continue;
    const std::string &l = *loc;
    if (s.kind == SymKind::StaticField) {
      sub[s] = mk_int(0);
    } else if (s.kind == SymKind::InstanceField) {
      sub[s] = mk_unknown("instance field at a fresh start");
    } else if (l.rfind("text:", 0) == 0) {
      auto dot = l.find('.', 5);
      ActivityId act = l.substr(5, dot - 5);
      const Activity *a = entry.fresh.count(act) ? app.activity(act) : nullptr;
      const WidgetDecl *w = a ? a->layout.find(l.substr(dot + 1)) : nullptr;
      sub[s] = w ? mk_str(w->initial_text) : mk_unknown("text of an absent activity");
    } else if (l.rfind("intent:", 0) == 0) {
      auto colon = l.find(':', 7);
      ActivityId act = l.substr(7, colon - 7);
      if (!entry.fresh.count(act))
        sub[s] = mk_unknown("extras of an absent activity");
      else if (entry.free_extras_for == act)
        sub[s] = mk_sym(SymKind::Input, "extra:" + l.substr(7), entry.generation,
                        Sort::Str);
      else
        sub[s] = mk_str("");
    }
  }
  return simplify(substitute(e, sub));
}

SymResult transition_effect(const GuiModel &m, const Transition &t, const App &app,
                            int generation) {
  const Event &e = t.witness.back();
  ActivityId act;
  if (e.is_entry())
    act = e.target;
  else if (!t.roots.empty())
    act = t.roots[0].activity;
  else if (auto it = m.states.find(t.src); it != m.states.end())
    act = it->second.representative.activity;
  return execute_event(app, e, act, t.roots, generation);
}

namespace {

struct Step {
  Event event;
  int gen;
};

class ChainSearch {
public:
  ChainSearch(const GuiModel &m, const App &app, const SolverOptions &opts)
      : m_(m), app_(app), opts_(opts) {}

  void run(const PathConstraint &c, const EventSummary &sigma) {
    dfs(c, sigma.source, {{sigma.event, 0}}, 0, 1);
  }

  SolveOutcome outcome() {
    SolveOutcome o;
    std::vector<std::pair<size_t, std::string>> keys;
    for (const auto &[text, seq] : found_)
      keys.push_back({seq.size(), text});
    std::sort(keys.begin(), keys.end());
    for (const auto &[_, text] : keys)
      if (o.candidates.size() < opts_.max_candidates)
        o.candidates.push_back(found_.at(text));
    if (o.candidates.empty()) {
      o.unknown = !unknown_.empty();
      o.reason = o.unknown ? unknown_
                           : budget_hit_ ? "search budget exhausted"
                                         : "no chain of summaries satisfies the constraint";
    }
    return o;
  }

private:
  // Backward through one transition; [false] when the chain cannot hold.
  PathConstraint back(const PathConstraint &r, size_t ti, int gen) {
    const Transition &t = m_.transitions[ti];
    SymResult post;
    try {
      post = transition_effect(m_, t, app_, gen);
    } catch (const std::exception &) {
      return {mk_bool(false)};
    }
    if (post.state.havoc)
      return {mk_bool(false)};
    PathConstraint out = precondition(post, r);
    if (post.state.boot_heap) {
      for (auto &k : out)
        k = ground_boot(k, app_, post.state);
    }
    return out;
  }

  static bool is_false(const PathConstraint &r) {
    for (const auto &k : r)
      if (k->kind == ExprKind::Lit && k->lit.is_bool() && !k->lit.as_bool())
        return true;
    return false;
  }

  // Composes `route` backwards in front of `tail`.
  bool through(const std::vector<size_t> &route, PathConstraint &r,
               std::vector<Step> &tail, int &gen) {
    for (auto it = route.rbegin(); it != route.rend(); ++it) {
      r = back(r, *it, gen);
      tail.insert(tail.begin(), {m_.transitions[*it].witness.back(), gen});
      ++gen;
      if (is_false(r))
        return false;
    }
    return true;
  }

  void emit(const PathConstraint &r, std::vector<Step> tail) {
    SolveResult s = decide(r, opts_.domain_bound);
    if (s.status == SolveStatus::Unknown) {
      if (unknown_.empty())
        unknown_ = s.reason;
      return;
    }
    if (s.status != SolveStatus::Sat)
      return;
    for (const auto &[sym, v] : s.assignment) {
      if (!is_free_choice(sym) || !v.is_str())
        continue;
      for (auto &st : tail) {
        if (st.gen != sym.gen)
          continue;
        if (sym.sig.rfind("payload:", 0) == 0)
          st.event.text = v.as_str();
        else
          st.event.extras[sym.sig.substr(sym.sig.find(':', 6) + 1)] = v.as_str();
      }
    }
    EventSequence seq;
    for (const auto &st : tail)
      seq.push_back(st.event);
    found_.emplace(sequence_to_text(seq), std::move(seq));
  }

  void dfs(const PathConstraint &r, const std::string &cur, std::vector<Step> tail,
           int depth, int gen) {
    if (++nodes_ > opts_.node_budget) {
      budget_hit_ = true;
      return;
    }
    if (found_.size() >= opts_.max_candidates)
      return;
    // Reach `cur` directly from a fresh start.
    if (cur == kBootState) {
      emit(r, tail);
    } else if (auto route = m_.find_route(kBootState, cur)) {
      PathConstraint rr = r;
      std::vector<Step> t2 = tail;
      int g = gen;
      if (through(*route, rr, t2, g))
        emit(rr, std::move(t2));
    }
    if (depth >= opts_.recursion_bound || cur == kBootState)
      return;
    // Put another recorded event in front.
    std::map<std::string, std::optional<std::vector<size_t>>> routes;
    for (size_t ti = 0; ti < m_.transitions.size(); ++ti) {
      const Transition &t = m_.transitions[ti];
      if (t.src == kBootState)
        continue;
      auto rit = routes.find(t.dst);
      if (rit == routes.end())
        rit = routes.emplace(t.dst, m_.find_route(t.dst, cur)).first;
      if (!rit->second)
        continue;
      PathConstraint rr = r;
      std::vector<Step> t2 = tail;
      int g = gen;
      if (!through(*rit->second, rr, t2, g))
        continue;
      SymResult post;
      try {
        post = transition_effect(m_, t, app_, g);
      } catch (const std::exception &) {
        continue;
      }
      if (post.state.havoc || !writes_free(post.state, rr))
        continue;
      int reps = 1;
      if (t.src == t.dst) {
        Resolver boot = [](const Symbol &s) -> std::optional<Value> {
          if (s.kind == SymKind::StaticField && s.gen == 0)
            return Value::of_int(0);
          return std::nullopt;
        };
        if (auto k = repetition_expand(post.state, rr, opts_.k_max, boot); k && *k > 1)
          reps = *k;
      }
      for (int rep = 0; rep < reps; ++rep) {
        rr = back(rr, ti, g);
        t2.insert(t2.begin(), {t.witness.back(), g});
        ++g;
        if (is_false(rr))
          break;
      }
      if (is_false(rr))
        continue;
      dfs(rr, t.src, std::move(t2), depth + 1, g);
    }
  }

  static bool writes_free(const SymState &post, const PathConstraint &r) {
    std::set<Symbol> syms;
    for (const auto &k : r)
      collect_symbols(k, syms);
    for (const auto &s : syms)
      if (auto loc = symbol_location(s); loc && post.assignments.count(*loc))
        return true;
    return false;
  }

  const GuiModel &m_;
  const App &app_;
  const SolverOptions &opts_;
  std::map<std::string, EventSequence> found_;
  std::string unknown_;
  int nodes_ = 0;
  bool budget_hit_ = false;
};

} // namespace

SolveOutcome solve_summary(const GuiModel &m, const EventSummary &sigma,
                           const App &app, SymCache &cache,
                           const SolverOptions &opts) {
  SolveOutcome o;
  auto c = constraint_of_summary(sigma, app, cache);
  if (!c) {
    auto f = cache.failures();
    o.reason = "symbolic execution failed: " + f[sigma.id];
    return o;
  }
  if (c->state.havoc) {
    o.unknown = true;
    o.reason = "state unknown after " + *c->state.havoc;
    return o;
  }
  // Cheap feasibility check with every symbol free.
  SolveResult alone = decide(c->constraint, opts.domain_bound);
  if (alone.status == SolveStatus::Unknown) {
    o.unknown = true;
    o.reason = alone.reason;
    return o;
  }
  if (alone.status == SolveStatus::Unsat) {
    o.reason = "path constraint is unsatisfiable";
    return o;
  }
  if (sigma.source.empty() ||
      (sigma.source != kBootState && !m.states.count(sigma.source))) {
    o.reason = "unknown source state";
    return o;
  }
  ChainSearch s(m, app, opts);
  s.run(c->constraint, sigma);
  return s.outcome();
}

} // namespace apex
