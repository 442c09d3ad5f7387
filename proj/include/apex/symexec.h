//===-- symexec.h - Path-wise symbolic execution ---------------------------===//
//
// Interprets one statement path over a symbolic state whose values are
// expression trees, collecting the branch conditions the path commits to.
// Storage locations are named by strings:
//
//   sf:Cls.field        static field
//   if:<base>.field     instance field of a pre-existing object
//   text:Act.widget     current text of a widget
//   intent:Act:key      extra of the intent that started the activity
//
// Reading a location that has not been written yields a symbol standing for
// its value in the pre-state. Symbols named payload:Act.widget and
// extra:Act:key are free choices of the event itself (typed text, intent
// extras); they carry the generation of the event in a chained sequence.
//
//===---------------------------------------------------------------------===//
#ifndef APEX_SYMEXEC_H
#define APEX_SYMEXEC_H

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "apex/gui_model.h"

namespace apex {

enum class SymKind { StaticField, InstanceField, ApiReturn, Input };

/// "$static-field", "$instance-field", "$api-return", "$input".
const char *sym_kind_name(SymKind k);

enum class Sort { Any, Int, Bool, Str };

struct Symbol {
  SymKind kind = SymKind::StaticField;
  std::string sig;
  int gen = 0;
  bool operator==(const Symbol &) const = default;
  auto operator<=>(const Symbol &) const = default;
  /// "Main.x", "payload:A.t@2".
  std::string name() const;
};

enum class ExprKind { Lit, Sym, Arith, Cmp, And, Or, Not, StrOp, Obj, Unknown };
enum class StrOpKind { Concat, Equals, Length };

struct Expr;
using ExprRef = std::shared_ptr<const Expr>;

struct Expr {
  ExprKind kind = ExprKind::Lit;
  Value lit;
  Symbol sym;
  /// Sort hint for symbols; Any when nothing pins it down.
  Sort sort = Sort::Any;
  ArithOp arith = ArithOp::Add;
  CmpOp cmp = CmpOp::Eq;
  StrOpKind strop = StrOpKind::Concat;
  std::vector<ExprRef> kids;
  /// Allocation site (Obj) or reason (Unknown).
  std::string note;
};

ExprRef mk_lit(Value v);
ExprRef mk_int(int64_t i);
ExprRef mk_bool(bool b);
ExprRef mk_str(std::string s);
ExprRef mk_sym(SymKind k, std::string sig, int gen = 0, Sort sort = Sort::Any);
ExprRef mk_arith(ArithOp op, ExprRef a, ExprRef b);
ExprRef mk_cmp(CmpOp op, ExprRef a, ExprRef b);
ExprRef mk_and(std::vector<ExprRef> kids);
ExprRef mk_or(std::vector<ExprRef> kids);
ExprRef mk_not(ExprRef a);
ExprRef mk_strop(StrOpKind op, std::vector<ExprRef> args);
ExprRef mk_obj(std::string site);
ExprRef mk_unknown(std::string reason);

/// Structural equality.
bool expr_equal(const ExprRef &a, const ExprRef &b);
/// True for expressions that denote booleans by construction.
bool is_boolean(const ExprRef &e);
/// S-expression text: (>= ($static-field Main.x) 5).
std::string to_sexpr(const ExprRef &e);
/// Assignment node, e.g. (= ($static-field A1.cond) 1).
std::string assignment_sexpr(const std::string &location, const ExprRef &e);

ExprRef simplify(const ExprRef &e);

void collect_symbols(const ExprRef &e, std::set<Symbol> &out);
/// First Unknown node or $api-return symbol, if any.
const Expr *find_opaque(const ExprRef &e);

/// Value of a symbol, or nullopt when the resolver has none.
using Resolver = std::function<std::optional<Value>(const Symbol &)>;
using Valuation = std::map<Symbol, Value>;

/// Concrete value under the resolver; nullopt for traps, Unknown, objects
/// and unresolved symbols.
std::optional<Value> evaluate(const ExprRef &e, const Resolver &r);
std::optional<Value> evaluate(const ExprRef &e, const Valuation &v);

/// Replaces symbols found in `sub`.
ExprRef substitute(const ExprRef &e, const std::map<Symbol, ExprRef> &sub);

/// Location <-> pre-state symbol.
Symbol location_symbol(const std::string &location);
std::optional<std::string> symbol_location(const Symbol &s);
/// payload:/extra: inputs, chosen by the event rather than read from state.
bool is_free_choice(const Symbol &s);

/// Canonical keyword of an instruction family ("$aget", "$sput", ...).
std::string canonical_keyword(const Instr &ins);
/// Keyword of an instruction's effect tree root: "=" for stores.
std::string statement_root_keyword(const Instr &ins);
/// The full keyword set, 17 entries.
const std::vector<std::string> &canonical_keywords();

struct SymObject {
  std::string cls;
  int64_t length = -1;
  std::map<std::string, ExprRef> fields;
};

struct SymState {
  std::map<std::string, ExprRef> assignments;
  /// Objects allocated on the path, by allocation site.
  std::map<std::string, SymObject> objects;
  /// Modeled API effects in order, e.g. "ui.startActivity(A3)".
  std::vector<std::string> effects;
  /// Pre-state locations read before being written.
  std::set<std::string> reads;
  /// Entry event: statics start at their boot value.
  bool boot_heap = false;
  /// Activities instantiated during the event: texts start at their declared
  /// value and extras at "" (or free choice for the entry intent).
  std::set<ActivityId> fresh;
  std::optional<ActivityId> free_extras_for;
  /// Set when an opaque call may have changed state we cannot see.
  std::optional<std::string> havoc;
  int generation = 0;
};

using PathConstraint = std::vector<ExprRef>;

/// How one root runs: foreground activity and handler arguments.
struct RootEnv {
  ActivityId activity;
  std::vector<Value> args;
};

struct SymResult {
  SymState state;
  PathConstraint constraint;
};

class UnsupportedError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Interprets `p` from `s0`. Throws IntegrityError when the statements do not
/// follow the method bodies, UnsupportedError for constructs outside the
/// symbolic model.
SymResult sym_execute(const SymState &s0, const Path &p, const App &app,
                      const RootEnv &env);

/// State before the first root of `e` runs, seen from `activity`.
SymState event_prelude(const App &app, const Event &e, const ActivityId &activity,
                       int generation = 0);

/// Environment the runtime gives root `i` of an event.
RootEnv root_env(const App &app, const Event &e, const std::vector<RootPath> &roots,
                 size_t i);

/// All roots of one event application composed in order; `activity` is the
/// foreground activity when the event is dispatched.
SymResult execute_event(const App &app, const Event &e, const ActivityId &activity,
                        const std::vector<RootPath> &roots, int generation = 0);

/// Pre-state values of a concrete run: heap, texts and extras of `pre`, the
/// event's payload and extras, and the observed unmodeled API returns.
Resolver concrete_resolver(const RuntimeState &pre, const Event &e,
                           const EventResult &r, int generation = 0);

/// Compares every assignment of `s`, evaluated under `r`, with the concrete
/// post-state. Returns a description of the first mismatch.
std::optional<std::string> check_post_state(const SymState &s, const Resolver &r,
                                            const RuntimeState &post);

/// True when every conjunct evaluates to true.
std::optional<bool> evaluate_constraint(const PathConstraint &c, const Resolver &r);

/// Memo table for constraint_of_summary; insert-once.
class SymCache {
public:
  std::shared_ptr<const SymResult> find(const std::string &id) const;
  std::shared_ptr<const SymResult> insert(const std::string &id, SymResult r);
  /// Ids whose execution failed, with the reason.
  std::map<std::string, std::string> failures() const;
  void fail(const std::string &id, std::string reason);
  size_t size() const;

private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const SymResult>> entries_;
  std::map<std::string, std::string> failed_;
};

/// Symbolic execution of the summary's own path with a fresh pre-state.
/// Returns nullptr (and records the failure) when execution fails.
std::shared_ptr<const SymResult> constraint_of_summary(const EventSummary &s,
                                                       const App &app,
                                                       SymCache &cache);

std::string constraint_to_string(const PathConstraint &c);

} // namespace apex

#endif
