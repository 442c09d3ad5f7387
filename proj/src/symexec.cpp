#include "apex/symexec.h"

#include <algorithm>

namespace apex {

namespace {

bool starts_with(const std::string &s, std::string_view p) {
  return s.compare(0, p.size(), p) == 0;
}

ExprRef make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

bool is_lit(const ExprRef &e) { return e->kind == ExprKind::Lit; }

bool lit_numeric(const ExprRef &e, int64_t v) {
  return is_lit(e) && e->lit.is_int() && e->lit.as_int() == v;
}

const char *strop_name(StrOpKind k) {
  switch (k) {
  case StrOpKind::Concat: return "str.concat";
  case StrOpKind::Equals: return "str.equals";
  case StrOpKind::Length: return "str.length";
  }
  return "?";
}

Sort sort_of_location(const std::string &loc) {
  return starts_with(loc, "text:") || starts_with(loc, "intent:") ? Sort::Str
                                                                   : Sort::Any;
}

} // namespace

const char *sym_kind_name(SymKind k) {
  switch (k) {
  case SymKind::StaticField: return "$static-field";
  case SymKind::InstanceField: return "$instance-field";
  case SymKind::ApiReturn: return "$api-return";
  case SymKind::Input: return "$input";
  }
  return "?";
}

std::string Symbol::name() const {
  return gen == 0 ? sig : sig + "@" + std::to_string(gen);
}

ExprRef mk_lit(Value v) {
  Expr e;
  e.kind = ExprKind::Lit;
  e.lit = std::move(v);
  return make(std::move(e));
}
ExprRef mk_int(int64_t i) { return mk_lit(Value::of_int(i)); }
ExprRef mk_bool(bool b) { return mk_lit(Value::of_bool(b)); }
ExprRef mk_str(std::string s) { return mk_lit(Value::of_str(std::move(s))); }

ExprRef mk_sym(SymKind k, std::string sig, int gen, Sort sort) {
  Expr e;
  e.kind = ExprKind::Sym;
  e.sym = {k, std::move(sig), gen};
  e.sort = sort;
  return make(std::move(e));
}

ExprRef mk_arith(ArithOp op, ExprRef a, ExprRef b) {
  Expr e;
  e.kind = ExprKind::Arith;
  e.arith = op;
  e.kids = {std::move(a), std::move(b)};
  return make(std::move(e));
}

ExprRef mk_cmp(CmpOp op, ExprRef a, ExprRef b) {
  Expr e;
  e.kind = ExprKind::Cmp;
  e.cmp = op;
  e.kids = {std::move(a), std::move(b)};
  return make(std::move(e));
}

ExprRef mk_and(std::vector<ExprRef> kids) {
  Expr e;
  e.kind = ExprKind::And;
  e.kids = std::move(kids);
  return make(std::move(e));
}

ExprRef mk_or(std::vector<ExprRef> kids) {
  Expr e;
  e.kind = ExprKind::Or;
  e.kids = std::move(kids);
  return make(std::move(e));
}

ExprRef mk_not(ExprRef a) {
  Expr e;
  e.kind = ExprKind::Not;
  e.kids = {std::move(a)};
  return make(std::move(e));
}

ExprRef mk_strop(StrOpKind op, std::vector<ExprRef> args) {
  Expr e;
  e.kind = ExprKind::StrOp;
  e.strop = op;
  e.kids = std::move(args);
  return make(std::move(e));
}

ExprRef mk_obj(std::string site) {
  Expr e;
  e.kind = ExprKind::Obj;
  e.note = std::move(site);
  return make(std::move(e));
}

ExprRef mk_unknown(std::string reason) {
  Expr e;
  e.kind = ExprKind::Unknown;
  e.note = std::move(reason);
  return make(std::move(e));
}

bool expr_equal(const ExprRef &a, const ExprRef &b) {
  if (a == b)
    return true;
  if (!a || !b || a->kind != b->kind || a->kids.size() != b->kids.size())
    return false;
  switch (a->kind) {
  case ExprKind::Lit:
    return a->lit == b->lit;
  case ExprKind::Sym:
    return a->sym == b->sym;
  case ExprKind::Arith:
    if (a->arith != b->arith)
      return false;
    break;
  case ExprKind::Cmp:
    if (a->cmp != b->cmp)
      return false;
    break;
  case ExprKind::StrOp:
    if (a->strop != b->strop)
      return false;
    break;
  case ExprKind::Obj:
  case ExprKind::Unknown:
    return a->note == b->note;
  default:
    break;
  }
  for (size_t i = 0; i < a->kids.size(); ++i)
    if (!expr_equal(a->kids[i], b->kids[i]))
      return false;
  return true;
}

bool is_boolean(const ExprRef &e) {
  switch (e->kind) {
  case ExprKind::Lit:
    return e->lit.is_bool();
  case ExprKind::Sym:
    return e->sort == Sort::Bool;
  case ExprKind::Cmp:
  case ExprKind::And:
  case ExprKind::Or:
  case ExprKind::Not:
    return true;
  case ExprKind::StrOp:
    return e->strop == StrOpKind::Equals;
  default:
    return false;
  }
}

std::string to_sexpr(const ExprRef &e) {
  auto list = [&](const std::string &head) {
    std::string s = "(" + head;
    for (const auto &k : e->kids)
      s += " " + to_sexpr(k);
    return s + ")";
  };
  switch (e->kind) {
  case ExprKind::Lit:
    return e->lit.to_literal();
  case ExprKind::Sym:
    return "(" + std::string(sym_kind_name(e->sym.kind)) + " " + e->sym.name() + ")";
  case ExprKind::Arith:
    return list(arith_symbol(e->arith));
  case ExprKind::Cmp:
    return list(cmp_symbol(e->cmp));
  case ExprKind::And:
    return e->kids.empty() ? "true" : list("and");
  case ExprKind::Or:
    return e->kids.empty() ? "false" : list("or");
  case ExprKind::Not:
    return list("not");
  case ExprKind::StrOp:
    return list(strop_name(e->strop));
  case ExprKind::Obj:
    return "(new " + e->note + ")";
  case ExprKind::Unknown:
    return "(unknown " + quote(e->note) + ")";
  }
  return "?";
}

std::string assignment_sexpr(const std::string &location, const ExprRef &e) {
  Symbol s = location_symbol(location);
  return "(= (" + std::string(sym_kind_name(s.kind)) + " " + s.name() + ") " +
         to_sexpr(e) + ")";
}

ExprRef simplify(const ExprRef &e) {
  switch (e->kind) {
  case ExprKind::Lit:
  case ExprKind::Sym:
  case ExprKind::Obj:
  case ExprKind::Unknown:
    return e;
  case ExprKind::Arith: {
    ExprRef a = simplify(e->kids[0]), b = simplify(e->kids[1]);
    ArithOp op = e->arith;
    if (is_lit(a) && is_lit(b)) {
      if (auto v = apply_arith(op, a->lit, b->lit))
        return mk_lit(*v);
      return mk_arith(op, a, b);
    }
    if (op == ArithOp::Sub && is_lit(b) && b->lit.is_int()) {
      op = ArithOp::Add;
      b = mk_lit(*apply_arith(ArithOp::Sub, Value::of_int(0), b->lit));
    }
    if ((op == ArithOp::Add || op == ArithOp::Mul) && is_lit(a) && !is_lit(b))
      std::swap(a, b);
    if (op == ArithOp::Add && lit_numeric(b, 0))
      return a;
    if ((op == ArithOp::Mul || op == ArithOp::Div) && lit_numeric(b, 1))
      return a;
    if (op == ArithOp::Mul && lit_numeric(b, 0))
      return b;
    // (x + c1) + c2 -> x + (c1 + c2)
    if (op == ArithOp::Add && is_lit(b) && a->kind == ExprKind::Arith &&
        a->arith == ArithOp::Add && is_lit(a->kids[1])) {
      auto c = apply_arith(ArithOp::Add, a->kids[1]->lit, b->lit);
      if (c)
        return simplify(mk_arith(ArithOp::Add, a->kids[0], mk_lit(*c)));
    }
    return mk_arith(op, a, b);
  }
  case ExprKind::Cmp: {
    ExprRef a = simplify(e->kids[0]), b = simplify(e->kids[1]);
    if (is_lit(a) && is_lit(b)) {
      if (auto v = apply_cmp(e->cmp, a->lit, b->lit))
        return mk_bool(*v);
      return mk_cmp(e->cmp, a, b);
    }
    if (e->cmp == CmpOp::Eq || e->cmp == CmpOp::Ne) {
      if (is_lit(a) && is_boolean(b))
        std::swap(a, b);
      if (is_boolean(a) && is_lit(b) && b->lit.is_numeric() &&
          !a->lit.is_str()) {
        int64_t n = b->lit.numeric();
        if (n == 0 || n == 1) {
          bool positive = (n == 1) == (e->cmp == CmpOp::Eq);
          return positive ? a : simplify(mk_not(a));
        }
        return mk_bool(e->cmp == CmpOp::Ne);
      }
    }
    return mk_cmp(e->cmp, a, b);
  }
  case ExprKind::Not: {
    ExprRef a = simplify(e->kids[0]);
    if (is_lit(a) && a->lit.is_bool())
      return mk_bool(!a->lit.as_bool());
    if (a->kind == ExprKind::Not)
      return a->kids[0];
    return mk_not(a);
  }
  case ExprKind::And:
  case ExprKind::Or: {
    bool is_and = e->kind == ExprKind::And;
    std::vector<ExprRef> out;
    for (const auto &k : e->kids) {
      ExprRef s = simplify(k);
      if (is_lit(s) && s->lit.is_bool()) {
        if (s->lit.as_bool() == is_and)
          continue; // identity element
        return mk_bool(!is_and);
      }
      if (s->kind == e->kind)
        out.insert(out.end(), s->kids.begin(), s->kids.end());
      else
        out.push_back(s);
    }
    if (out.empty())
      return mk_bool(is_and);
    if (out.size() == 1)
      return out[0];
    return is_and ? mk_and(std::move(out)) : mk_or(std::move(out));
  }
  case ExprKind::StrOp: {
    std::vector<ExprRef> args;
    bool all_str = true;
    for (const auto &k : e->kids) {
      args.push_back(simplify(k));
      all_str = all_str && is_lit(args.back()) && args.back()->lit.is_str();
    }
    if (all_str) {
      switch (e->strop) {
      case StrOpKind::Concat:
        return mk_str(args[0]->lit.as_str() + args[1]->lit.as_str());
      case StrOpKind::Equals:
        return mk_bool(args[0]->lit.as_str() == args[1]->lit.as_str());
      case StrOpKind::Length:
        return mk_int(static_cast<int64_t>(args[0]->lit.as_str().size()));
      }
    }
    return mk_strop(e->strop, std::move(args));
  }
  }
  return e;
}

void collect_symbols(const ExprRef &e, std::set<Symbol> &out) {
  if (e->kind == ExprKind::Sym)
    out.insert(e->sym);
  for (const auto &k : e->kids)
    collect_symbols(k, out);
}

const Expr *find_opaque(const ExprRef &e) {
  if (e->kind == ExprKind::Unknown ||
      (e->kind == ExprKind::Sym && e->sym.kind == SymKind::ApiReturn))
    return e.get();
  for (const auto &k : e->kids)
    if (const Expr *o = find_opaque(k))
      return o;
  return nullptr;
}

std::optional<Value> evaluate(const ExprRef &e, const Resolver &r) {
  switch (e->kind) {
  case ExprKind::Lit:
    return e->lit;
  case ExprKind::Sym:
    return r(e->sym);
  case ExprKind::Arith: {
    auto a = evaluate(e->kids[0], r), b = evaluate(e->kids[1], r);
    if (!a || !b)
      return std::nullopt;
    return apply_arith(e->arith, *a, *b);
  }
  case ExprKind::Cmp: {
    auto a = evaluate(e->kids[0], r), b = evaluate(e->kids[1], r);
    if (!a || !b)
      return std::nullopt;
    auto c = apply_cmp(e->cmp, *a, *b);
    if (!c)
      return std::nullopt;
    return Value::of_bool(*c);
  }
  case ExprKind::And:
  case ExprKind::Or: {
    bool is_and = e->kind == ExprKind::And;
    bool acc = is_and;
    for (const auto &k : e->kids) {
      auto v = evaluate(k, r);
      if (!v || !v->is_bool())
        return std::nullopt;
      acc = is_and ? (acc && v->as_bool()) : (acc || v->as_bool());
    }
    return Value::of_bool(acc);
  }
  case ExprKind::Not: {
    auto v = evaluate(e->kids[0], r);
    if (!v || !v->is_bool())
      return std::nullopt;
    return Value::of_bool(!v->as_bool());
  }
  case ExprKind::StrOp: {
    std::vector<std::string> args;
    for (const auto &k : e->kids) {
      auto v = evaluate(k, r);
      if (!v || !v->is_str())
        return std::nullopt;
      args.push_back(v->as_str());
    }
    switch (e->strop) {
    case StrOpKind::Concat: return Value::of_str(args[0] + args[1]);
    case StrOpKind::Equals: return Value::of_bool(args[0] == args[1]);
    case StrOpKind::Length:
      return Value::of_int(static_cast<int64_t>(args[0].size()));
    }
    return std::nullopt;
  }
  case ExprKind::Obj:
  case ExprKind::Unknown:
    return std::nullopt;
  }
  return std::nullopt;
}

std::optional<Value> evaluate(const ExprRef &e, const Valuation &v) {
  return evaluate(e, [&](const Symbol &s) -> std::optional<Value> {
    auto it = v.find(s);
    if (it == v.end())
      return std::nullopt;
    return it->second;
  });
}

ExprRef substitute(const ExprRef &e, const std::map<Symbol, ExprRef> &sub) {
  if (e->kind == ExprKind::Sym) {
    auto it = sub.find(e->sym);
    return it == sub.end() ? e : it->second;
  }
  if (e->kids.empty())
    return e;
  bool changed = false;
  std::vector<ExprRef> kids;
  for (const auto &k : e->kids) {
    kids.push_back(substitute(k, sub));
    changed = changed || kids.back() != k;
  }
  if (!changed)
    return e;
  Expr copy = *e;
  copy.kids = std::move(kids);
  return make(std::move(copy));
}

Symbol location_symbol(const std::string &loc) {
  if (starts_with(loc, "sf:"))
    return {SymKind::StaticField, loc.substr(3), 0};
  if (starts_with(loc, "if:"))
    return {SymKind::InstanceField, loc.substr(3), 0};
  return {SymKind::Input, loc, 0};
}

std::optional<std::string> symbol_location(const Symbol &s) {
  if (s.gen != 0)
    return std::nullopt;
  switch (s.kind) {
  case SymKind::StaticField: return "sf:" + s.sig;
  case SymKind::InstanceField: return "if:" + s.sig;
  case SymKind::Input:
    if (starts_with(s.sig, "text:") || starts_with(s.sig, "intent:"))
      return s.sig;
    return std::nullopt;
  case SymKind::ApiReturn: return std::nullopt;
  }
  return std::nullopt;
}

bool is_free_choice(const Symbol &s) {
  return s.kind == SymKind::Input &&
         (starts_with(s.sig, "payload:") || starts_with(s.sig, "extra:"));
}

std::string canonical_keyword(const Instr &ins) {
  switch (ins.op) {
  case Opcode::Const: return "$const";
  case Opcode::Move: return "$move";
  case Opcode::BinOp: return "$binop";
  case Opcode::If: return "$if";
  case Opcode::Goto: return "$goto";
  case Opcode::SGet: return "$sget";
  case Opcode::SPut: return "$sput";
  case Opcode::IGet: return "$iget";
  case Opcode::IPut: return "$iput";
  case Opcode::New: return "$new";
  case Opcode::AGet: return "$aget";
  case Opcode::APut: return "$aput";
  case Opcode::Invoke: return "$invoke";
  case Opcode::MoveResult: return "$move-result";
  case Opcode::Api: return "$api";
  case Opcode::Return: return "$return";
  }
  return "?";
}

std::string statement_root_keyword(const Instr &ins) {
  if (ins.op == Opcode::SPut || ins.op == Opcode::IPut || ins.op == Opcode::APut)
    return "=";
  return canonical_keyword(ins);
}

const std::vector<std::string> &canonical_keywords() {
  static const std::vector<std::string> k = {
      "$const", "$move", "$binop", "$if",  "$goto",        "$sget",
      "$sput",  "$iget", "$iput",  "$new", "$aget",        "$aput",
      "$invoke", "$move-result", "$api", "$return", "="};
  return k;
}

namespace {

class Exec {
public:
  Exec(const App &app, SymState &st, PathConstraint &pc, const RootEnv &env)
      : app_(app), st_(st), pc_(pc), env_(env) {}

  void run(const Path &p) {
    if (p.stmts.empty())
      return;
    std::vector<ExprRef> args;
    for (const auto &v : env_.args)
      args.push_back(mk_lit(v));
    push(app_.method_at(p.root), args);
    for (size_t i = 0; i < p.stmts.size(); ++i) {
      const Stmt &s = p.stmts[i];
      if (frames_.empty())
        throw IntegrityError("path continues after the root returned at " +
                             s.method + ":" + std::to_string(s.index));
      Frame &f = frames_.back();
      if (s.method != f.m->sig || s.index != f.pc)
        throw IntegrityError("path statement " + s.method + ":" +
                             std::to_string(s.index) + " does not follow " +
                             f.m->sig + ":" + std::to_string(f.pc));
      const Stmt *next = i + 1 < p.stmts.size() ? &p.stmts[i + 1] : nullptr;
      step(s.index, next);
    }
    if (!frames_.empty())
      throw IntegrityError("path ends inside " + frames_.back().m->sig);
  }

private:
  struct Frame {
    const Method *m;
    std::vector<ExprRef> regs;
    ExprRef last;
    int pc = 0;
  };

  void push(const Method &m, const std::vector<ExprRef> &args) {
    Frame f{&m, {}, nullptr, 0};
    f.regs.assign(static_cast<size_t>(std::max(m.register_count, 1)), mk_int(0));
    for (size_t i = 0; i < args.size() && i < f.regs.size(); ++i)
      f.regs[i] = args[i];
    frames_.push_back(std::move(f));
  }

  void assume(ExprRef c) {
    c = simplify(c);
    if (is_lit(c) && c->lit.is_bool() && c->lit.as_bool())
      return;
    pc_.push_back(c);
  }

  ExprRef initial(const std::string &loc) {
    if (st_.havoc)
      return mk_unknown("after " + *st_.havoc);
    if (starts_with(loc, "sf:")) {
      if (st_.boot_heap)
        return mk_int(0);
    } else if (starts_with(loc, "text:")) {
      auto dot = loc.find('.', 5);
      ActivityId act = loc.substr(5, dot - 5);
      if (st_.fresh.count(act)) {
        const Activity *a = app_.activity(act);
        const WidgetDecl *w = a ? a->layout.find(loc.substr(dot + 1)) : nullptr;
        if (!w)
          return mk_unknown("no widget for " + loc);
        return mk_str(w->initial_text);
      }
    } else if (starts_with(loc, "intent:")) {
      auto colon = loc.find(':', 7);
      ActivityId act = loc.substr(7, colon - 7);
      if (st_.fresh.count(act)) {
        if (st_.free_extras_for == act)
          return mk_sym(SymKind::Input, "extra:" + loc.substr(7), st_.generation,
                        Sort::Str);
        return mk_str("");
      }
    }
    st_.reads.insert(loc);
    Symbol s = location_symbol(loc);
    return mk_sym(s.kind, s.sig, 0, sort_of_location(loc));
  }

  ExprRef read(const std::string &loc) {
    if (st_.havoc)
      return mk_unknown("after " + *st_.havoc);
    auto it = st_.assignments.find(loc);
    return it != st_.assignments.end() ? it->second : initial(loc);
  }

  void write(const std::string &loc, ExprRef v) { st_.assignments[loc] = std::move(v); }

  static std::string lit_text(const ExprRef &e) {
    if (is_lit(e) && e->lit.is_str())
      return e->lit.as_str();
    return "?";
  }

  std::string text_location(const ExprRef &w) {
    if (!is_lit(w) || !w->lit.is_str())
      return {};
    return "text:" + env_.activity + "." + w->lit.as_str();
  }

  ExprRef call_api(const Instr &ins, const std::vector<ExprRef> &a,
                   const Method &m, int pc) {
    const std::string &n = ins.name;
    const ApiSpec *spec = find_api(n);
    if (!spec)
      throw UnsupportedError("api '" + n + "' has no symbolic model");
    if (!spec->modeled) {
      std::string base = n + "@" + m.sig + ":" + std::to_string(pc);
      int occ = site_counts_[base]++;
      return mk_sym(SymKind::ApiReturn, base + "#" + std::to_string(occ),
                    st_.generation);
    }
    if (n == "ui.startActivity") {
      st_.effects.push_back("ui.startActivity(" + lit_text(a[0]) + ")");
      return nullptr;
    }
    if (n == "ui.finish") {
      st_.effects.push_back("ui.finish()");
      return nullptr;
    }
    if (n == "ui.setHandler") {
      st_.effects.push_back("ui.setHandler(" + lit_text(a[0]) + "," +
                            lit_text(a[1]) + ")");
      return nullptr;
    }
    if (n == "sys.registerReceiver") {
      st_.effects.push_back("sys.registerReceiver(" + lit_text(a[0]) + "," +
                            lit_text(a[1]) + ")");
      return nullptr;
    }
    if (n == "ui.setText") {
      std::string loc = text_location(a[0]);
      if (loc.empty())
        st_.havoc = "ui.setText on a symbolic widget";
      else
        write(loc, a[1]);
      return nullptr;
    }
    if (n == "ui.getText") {
      std::string loc = text_location(a[0]);
      return loc.empty() ? mk_unknown("ui.getText on a symbolic widget") : read(loc);
    }
    if (n == "intent.getExtra") {
      if (!is_lit(a[0]) || !a[0]->lit.is_str())
        return mk_unknown("intent.getExtra with a symbolic key");
      return read("intent:" + env_.activity + ":" + a[0]->lit.as_str());
    }
    if (n == "str.equals")
      return simplify(mk_strop(StrOpKind::Equals, {a[0], a[1]}));
    if (n == "str.length")
      return simplify(mk_strop(StrOpKind::Length, {a[0]}));
    if (n == "str.concat")
      return simplify(mk_strop(StrOpKind::Concat, {a[0], a[1]}));
    throw UnsupportedError("api '" + n + "' has no symbolic model");
  }

  SymObject *object_of(const ExprRef &e) {
    if (e->kind != ExprKind::Obj)
      return nullptr;
    auto it = st_.objects.find(e->note);
    return it == st_.objects.end() ? nullptr : &it->second;
  }

  // Field location of a pre-existing object reached through a symbol.
  static std::string field_location(const ExprRef &base, const std::string &field) {
    if (base->kind != ExprKind::Sym)
      return {};
    return "if:" + base->sym.name() + "." + field;
  }

  std::optional<std::string> array_slot(SymObject &arr, const ExprRef &idx) {
    if (!is_lit(idx) || !idx->lit.is_numeric())
      return std::nullopt;
    int64_t i = idx->lit.numeric();
    if (arr.length < 0 || i < 0 || i >= arr.length) {
      assume(mk_bool(false)); // the concrete run traps here
      return std::string("oob");
    }
    return std::to_string(i);
  }

  void step(int idx, const Stmt *next) {
    Frame &f = frames_.back();
    const Method &m = *f.m;
    const Instr &ins = m.body[static_cast<size_t>(idx)];
    auto reg = [&](int r) -> ExprRef & { return f.regs.at(static_cast<size_t>(r)); };
    int after = idx + 1;
    bool keep_last = false;
    switch (ins.op) {
    case Opcode::Const:
      reg(ins.dst) = mk_lit(*ins.imm);
      break;
    case Opcode::Move:
      reg(ins.dst) = reg(ins.a);
      break;
    case Opcode::BinOp: {
      ExprRef b = reg(ins.b);
      if (ins.arith == ArithOp::Div && !is_lit(b))
        assume(mk_cmp(CmpOp::Ne, b, mk_int(0)));
      ExprRef v = simplify(mk_arith(ins.arith, reg(ins.a), b));
      if (v->kind == ExprKind::Arith && is_lit(v->kids[0]) && is_lit(v->kids[1]))
        assume(mk_bool(false)); // constant operands that trap
      reg(ins.dst) = v;
      break;
    }
    case Opcode::If: {
      ExprRef cond =
          mk_cmp(ins.cmp, reg(ins.a), ins.imm ? mk_lit(*ins.imm) : reg(ins.b));
      if (!next || next->method != m.sig ||
          (next->index != ins.target && next->index != idx + 1))
        throw IntegrityError("branch at " + m.sig + ":" + std::to_string(idx) +
                             " is not followed by a successor");
      if (ins.target != idx + 1) {
        if (next->index == ins.target)
          assume(cond);
        else
          assume(mk_not(simplify(cond)));
      }
      after = next->index;
      break;
    }
    case Opcode::Goto:
      after = ins.target;
      break;
    case Opcode::SGet:
      reg(ins.dst) = read("sf:" + ins.name);
      break;
    case Opcode::SPut:
      write("sf:" + ins.name, reg(ins.a));
      break;
    case Opcode::IGet: {
      ExprRef base = reg(ins.b);
      if (SymObject *o = object_of(base)) {
        auto it = o->fields.find(ins.name);
        reg(ins.dst) = it == o->fields.end() ? mk_int(0) : it->second;
      } else if (auto loc = field_location(base, ins.name); !loc.empty()) {
        reg(ins.dst) = read(loc);
      } else {
        if (is_lit(base))
          assume(mk_bool(false));
        reg(ins.dst) = mk_unknown("field of an unknown object");
      }
      break;
    }
    case Opcode::IPut: {
      ExprRef base = reg(ins.b);
      if (SymObject *o = object_of(base))
        o->fields[ins.name] = reg(ins.a);
      else if (auto loc = field_location(base, ins.name); !loc.empty())
        write(loc, reg(ins.a));
      else if (is_lit(base))
        assume(mk_bool(false));
      else
        st_.havoc = "store through an unknown object";
      break;
    }
    case Opcode::New: {
      std::string base = m.sig + ":" + std::to_string(idx);
      std::string site = base + "#" + std::to_string(alloc_counts_[base]++);
      SymObject o;
      o.cls = ins.name;
      if (!ins.name.empty() && ins.name.front() == '[')
        o.length = std::stoll(ins.name.substr(1, ins.name.size() - 2));
      st_.objects[site] = std::move(o);
      reg(ins.dst) = mk_obj(site);
      break;
    }
    case Opcode::AGet: {
      SymObject *arr = object_of(reg(ins.b));
      auto slot = arr ? array_slot(*arr, reg(ins.c)) : std::nullopt;
      if (!slot) {
        reg(ins.dst) = mk_unknown(arr ? "symbolic array index" : "unknown array");
      } else {
        auto it = arr->fields.find(*slot);
        reg(ins.dst) = it == arr->fields.end() ? mk_int(0) : it->second;
      }
      break;
    }
    case Opcode::APut: {
      SymObject *arr = object_of(reg(ins.b));
      auto slot = arr ? array_slot(*arr, reg(ins.c)) : std::nullopt;
      if (!slot)
        st_.havoc = arr ? "symbolic array index" : "store into an unknown array";
      else
        arr->fields[*slot] = reg(ins.a);
      break;
    }
    case Opcode::Invoke: {
      std::vector<ExprRef> args;
      for (int r : ins.args)
        args.push_back(reg(r));
      f.pc = idx + 1;
      if (next && next->method == ins.name && next->index == 0) {
        push(app_.method_at(ins.name), args);
        return; // `f` may dangle after push
      }
      f.last = mk_unknown("opaque call to " + ins.name);
      st_.havoc = "opaque call to " + ins.name;
      return;
    }
    case Opcode::Api: {
      std::vector<ExprRef> args;
      for (int r : ins.args)
        args.push_back(reg(r));
      f.last = call_api(ins, args, m, idx);
      keep_last = true;
      break;
    }
    case Opcode::MoveResult:
      reg(ins.dst) = f.last ? f.last : mk_int(0);
      break;
    case Opcode::Return: {
      ExprRef v = ins.a >= 0 ? reg(ins.a) : nullptr;
      frames_.pop_back();
      if (!frames_.empty())
        frames_.back().last = v;
      return;
    }
    }
    if (!keep_last)
      f.last = nullptr;
    f.pc = after;
  }

  const App &app_;
  SymState &st_;
  PathConstraint &pc_;
  const RootEnv &env_;
  std::vector<Frame> frames_;
  std::map<std::string, int> site_counts_;
  std::map<std::string, int> alloc_counts_;
};

bool is_lifecycle(const App &app, const RootPath &r) {
  const Activity *a = app.activity(r.activity);
  if (!a)
    return false;
  return a->on_create == r.sig || a->on_pause == r.sig || a->on_stop == r.sig;
}

void mark_fresh(SymState &st, const ActivityId &act, bool keep_free_extras) {
  std::string text = "text:" + act + ".", intent = "intent:" + act + ":";
  for (auto it = st.assignments.begin(); it != st.assignments.end();) {
    if (starts_with(it->first, text) || starts_with(it->first, intent))
      it = st.assignments.erase(it);
    else
      ++it;
  }
  st.fresh.insert(act);
  if (!keep_free_extras && st.free_extras_for == act)
    st.free_extras_for.reset();
}

} // namespace

SymResult sym_execute(const SymState &s0, const Path &p, const App &app,
                      const RootEnv &env) {
  SymResult r{s0, {}};
  Exec ex(app, r.state, r.constraint, env);
  ex.run(p);
  return r;
}

SymState event_prelude(const App &app, const Event &e, const ActivityId &activity,
                       int generation) {
  (void)app;
  SymState st;
  st.generation = generation;
  if (e.is_entry()) {
    st.boot_heap = true;
    st.fresh.insert(e.target);
    if (e.kind == EventKind::Intent)
      st.free_extras_for = e.target;
  } else if (e.kind == EventKind::TextInput) {
    st.assignments["text:" + activity + "." + e.target] =
        mk_sym(SymKind::Input, "payload:" + activity + "." + e.target, generation,
               Sort::Str);
  }
  return st;
}

RootEnv root_env(const App &app, const Event &e, const std::vector<RootPath> &roots,
                 size_t i) {
  RootEnv env{roots[i].activity, {}};
  if (e.is_entry() || e.kind == EventKind::Back || is_lifecycle(app, roots[i]))
    return env;
  if (app.method_at(roots[i].sig).param_count >= 1)
    env.args.push_back(Value::of_str(e.target));
  return env;
}

SymResult execute_event(const App &app, const Event &e, const ActivityId &activity,
                        const std::vector<RootPath> &roots, int generation) {
  SymResult r{event_prelude(app, e, activity, generation), {}};
  for (size_t i = 0; i < roots.size(); ++i) {
    const Activity *act = app.activity(roots[i].activity);
    if (act && act->on_create == roots[i].sig)
      mark_fresh(r.state, roots[i].activity, i == 0 && e.is_entry());
    RootEnv env = root_env(app, e, roots, i);
    Exec ex(app, r.state, r.constraint, env);
    ex.run(roots[i].path);
  }
  // Activities started by the event show their declared texts afterwards.
  std::set<ActivityId> started = r.state.fresh;
  for (const auto &eff : r.state.effects)
    if (starts_with(eff, "ui.startActivity(") && eff != "ui.startActivity(?)")
      started.insert(eff.substr(17, eff.size() - 18));
  for (const auto &id : started)
    if (const Activity *act = app.activity(id))
      for (const auto &w : act->layout.widgets)
        r.state.assignments.emplace("text:" + id + "." + w.id, mk_str(w.initial_text));
  return r;
}

Resolver concrete_resolver(const RuntimeState &pre, const Event &e,
                           const EventResult &r, int generation) {
  std::map<std::string, Value> api;
  for (const auto &o : r.api_returns)
    api.emplace(o.site, o.value);
  return [pre, e, api, generation](const Symbol &s) -> std::optional<Value> {
    auto record = [&](const ActivityId &id) -> const ActivityRecord * {
      for (auto it = pre.stack.rbegin(); it != pre.stack.rend(); ++it)
        if (it->id == id)
          return &*it;
      return nullptr;
    };
    switch (s.kind) {
    case SymKind::StaticField:
      return pre.heap.static_value(s.sig);
    case SymKind::InstanceField:
      return std::nullopt;
    case SymKind::ApiReturn: {
      auto it = api.find(s.sig);
      if (it == api.end())
        return std::nullopt;
      return it->second;
    }
    case SymKind::Input:
      break;
    }
    const std::string &sig = s.sig;
    if (starts_with(sig, "payload:") && s.gen == generation) {
      auto dot = sig.find('.', 8);
      ActivityId act = sig.substr(8, dot - 8);
      std::string w = sig.substr(dot + 1);
      return Value::of_str(e.text ? *e.text : random_text(pre.seed, act, w));
    }
    if (starts_with(sig, "extra:") && s.gen == generation) {
      std::string key = sig.substr(sig.find(':', 6) + 1);
      auto it = e.extras.find(key);
      return Value::of_str(it == e.extras.end() ? "" : it->second);
    }
    if (s.gen != 0)
      return std::nullopt;
    if (starts_with(sig, "text:")) {
      auto dot = sig.find('.', 5);
      const ActivityRecord *rec = record(sig.substr(5, dot - 5));
      const WidgetState *w = rec ? rec->layout.find(sig.substr(dot + 1)) : nullptr;
      if (!w)
        return std::nullopt;
      return Value::of_str(w->text);
    }
    if (starts_with(sig, "intent:")) {
      auto colon = sig.find(':', 7);
      const ActivityRecord *rec = record(sig.substr(7, colon - 7));
      if (!rec)
        return std::nullopt;
      auto it = rec->extras.find(sig.substr(colon + 1));
      return Value::of_str(it == rec->extras.end() ? "" : it->second);
    }
    return std::nullopt;
  };
}

std::optional<std::string> check_post_state(const SymState &s, const Resolver &r,
                                            const RuntimeState &post) {
  if (s.havoc)
    return "state unknown after " + *s.havoc;
  for (const auto &[loc, e] : s.assignments) {
    std::optional<Value> concrete;
    if (starts_with(loc, "sf:")) {
      concrete = post.heap.static_value(loc.substr(3));
    } else if (starts_with(loc, "text:")) {
      auto dot = loc.find('.', 5);
      ActivityId act = loc.substr(5, dot - 5);
      for (auto it = post.stack.rbegin(); it != post.stack.rend(); ++it)
        if (it->id == act) {
          if (const WidgetState *w = it->layout.find(loc.substr(dot + 1)))
            concrete = Value::of_str(w->text);
          break;
        }
      if (!concrete)
        continue; // the activity is gone
    } else {
      continue;
    }
    if (e->kind == ExprKind::Obj) {
      if (!concrete->is_ref())
        return loc + ": expected an object reference";
      continue;
    }
    auto v = evaluate(e, r);
    if (!v)
      return loc + ": cannot evaluate " + to_sexpr(e);
    if (!(*v == *concrete))
      return loc + ": symbolic " + v->to_literal() + " vs concrete " +
             concrete->to_literal();
  }
  return std::nullopt;
}

std::optional<bool> evaluate_constraint(const PathConstraint &c, const Resolver &r) {
  for (const auto &k : c) {
    auto v = evaluate(k, r);
    if (!v || !v->is_bool())
      return std::nullopt;
    if (!v->as_bool())
      return false;
  }
  return true;
}

std::shared_ptr<const SymResult> SymCache::find(const std::string &id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : it->second;
}

std::shared_ptr<const SymResult> SymCache::insert(const std::string &id, SymResult r) {
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, fresh] =
      entries_.emplace(id, std::make_shared<const SymResult>(std::move(r)));
  (void)fresh;
  return it->second;
}

std::map<std::string, std::string> SymCache::failures() const {
  std::lock_guard<std::mutex> lock(mu_);
  return failed_;
}

void SymCache::fail(const std::string &id, std::string reason) {
  std::lock_guard<std::mutex> lock(mu_);
  failed_.emplace(id, std::move(reason));
}

size_t SymCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

std::shared_ptr<const SymResult> constraint_of_summary(const EventSummary &s,
                                                       const App &app,
                                                       SymCache &cache) {
  if (auto hit = cache.find(s.id))
    return hit;
  if (cache.failures().count(s.id))
    return nullptr;
  ActivityId act = s.activity;
  if (act.empty())
    act = s.event.is_entry() ? s.event.target
                             : s.path.root.substr(0, s.path.root.find('.'));
  try {
    std::vector<RootPath> roots;
    if (!s.path.empty())
      roots.push_back({s.path.root, act, s.path});
    return cache.insert(s.id, execute_event(app, s.event, act, roots));
  } catch (const std::exception &ex) {
    cache.fail(s.id, ex.what());
    return nullptr;
  }
}

std::string constraint_to_string(const PathConstraint &c) {
  if (c.empty())
    return "true";
  std::string out;
  for (const auto &k : c) {
    if (!out.empty())
      out += " && ";
    out += to_sexpr(k);
  }
  return out;
}

} // namespace apex
