// Random bounded constraints and a brute-force satisfiability oracle.
#ifndef APEX_TESTS_CONSTRAINT_GEN_H
#define APEX_TESTS_CONSTRAINT_GEN_H

#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "apex/solver.h"

namespace apex::testing {

// Random constraints over ints x, y in [-B, B], a bool p and a string s over
// {a,b,c}, with string literals over {a,b}.
struct ConstraintGen {
  std::mt19937 rng;
  ExprRef x = mk_sym(SymKind::StaticField, "G.x");
  ExprRef y = mk_sym(SymKind::StaticField, "G.y");
  ExprRef p = mk_sym(SymKind::StaticField, "G.p", 0, Sort::Bool);
  ExprRef s = mk_sym(SymKind::Input, "text:G.s", 0, Sort::Str);

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

  ExprRef lit_str() {
    static const std::vector<std::string> lits = {"", "a", "b", "ab", "ba", "aa", "bb"};
    return mk_str(lits[static_cast<size_t>(pick(static_cast<int>(lits.size())))]);
  }

  ExprRef term() {
    switch (pick(6)) {
    case 0: return x;
    case 1: return y;
    case 2: return mk_arith(ArithOp::Add, x, y);
    case 3: return mk_arith(ArithOp::Sub, x, y);
    case 4: return mk_arith(ArithOp::Mul, x, mk_int(pick(3) + 1));
    default: return mk_arith(ArithOp::Add, x, mk_int(pick(5) - 2));
    }
  }

  ExprRef atom() {
    switch (pick(7)) {
    case 0:
    case 1:
      return mk_cmp(static_cast<CmpOp>(pick(6)), term(), mk_int(pick(9) - 4));
    case 2:
      return mk_cmp(static_cast<CmpOp>(pick(6)), term(), term());
    case 3:
      return pick(2) ? p : mk_cmp(CmpOp::Eq, p, mk_cmp(CmpOp::Lt, x, y));
    case 4:
      return mk_strop(StrOpKind::Equals, {s, lit_str()});
    case 5:
      return mk_cmp(static_cast<CmpOp>(pick(6)), mk_strop(StrOpKind::Length, {s}),
                    mk_int(pick(4)));
    default:
      return mk_strop(StrOpKind::Equals,
                      {pick(2) ? mk_strop(StrOpKind::Concat, {s, lit_str()})
                               : mk_strop(StrOpKind::Concat, {lit_str(), s}),
                       lit_str()});
    }
  }

  PathConstraint constraint() {
    PathConstraint c;
    int n = pick(3) + 1;
    for (int i = 0; i < n; ++i)
      c.push_back(pick(4) == 0 ? mk_not(atom()) : atom());
    return c;
  }
};

inline std::vector<std::string> strings_abc(size_t max_len) {
  std::vector<std::string> out{""};
  for (size_t i = 0; out[i].size() < max_len; ++i)
    for (char ch : {'a', 'b', 'c'})
      out.push_back(out[i] + ch);
  return out;
}

inline bool oracle_sat(const PathConstraint &c, int bound) {
  std::set<Symbol> syms;
  for (const auto &k : c)
    collect_symbols(k, syms);
  static const auto strs = strings_abc(4);
  std::vector<Symbol> vars(syms.begin(), syms.end());
  std::vector<std::vector<Value>> doms;
  for (const auto &v : vars) {
    std::vector<Value> d;
    if (v.sig == "G.p") {
      d = {Value::of_bool(false), Value::of_bool(true)};
    } else if (v.sig == "text:G.s") {
      for (const auto &s : strs)
        d.push_back(Value::of_str(s));
    } else {
      for (int i = -bound; i <= bound; ++i)
        d.push_back(Value::of_int(i));
    }
    doms.push_back(std::move(d));
  }
  Valuation val;
  std::function<bool(size_t)> rec = [&](size_t i) {
    if (i == vars.size()) {
      auto ok = evaluate_constraint(c, [&](const Symbol &s) -> std::optional<Value> {
        return val.at(s);
      });
      return ok && *ok;
    }
    for (const auto &v : doms[i]) {
      val[vars[i]] = v;
      if (rec(i + 1))
        return true;
    }
    return false;
  };
  return rec(0);
}

} // namespace apex::testing

#endif
