//===-- appir.h - Miniature event-driven app IR --------------------------===//
//
// An App is a manifest, a set of activities with declarative layouts, and
// register-bytecode methods. Apps are parsed from the line-oriented `.mapp`
// text format (see docs/mapp-format.md) and are immutable afterwards.
//
//===---------------------------------------------------------------------===//
#ifndef APEX_APPIR_H
#define APEX_APPIR_H

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "apex/event.h"
#include "apex/value.h"

namespace apex {

using MethodSig = std::string;
using ActivityId = std::string;

enum class WidgetKind { Button, TextField, ListItem };
enum class HandlerKind { Click, LongClick, Text };

const char *widget_kind_name(WidgetKind k);
const char *handler_kind_name(HandlerKind k);
/// The handler slot an event kind dispatches to, if any.
std::optional<HandlerKind> handler_kind_for(EventKind k);

struct WidgetDecl {
  std::string id;
  WidgetKind kind = WidgetKind::Button;
  std::map<HandlerKind, MethodSig> bindings;
  std::string initial_text;
  bool operator==(const WidgetDecl &) const = default;
};

struct LayoutDecl {
  std::vector<WidgetDecl> widgets;
  const WidgetDecl *find(std::string_view id) const;
  bool operator==(const LayoutDecl &) const = default;
};

struct Activity {
  ActivityId id;
  LayoutDecl layout;
  std::optional<MethodSig> on_create;
  std::optional<MethodSig> on_pause;
  std::optional<MethodSig> on_stop;
  bool operator==(const Activity &) const = default;
};

struct IntentFilter {
  ActivityId activity;
  std::string action;
  bool operator==(const IntentFilter &) const = default;
};

struct Manifest {
  ActivityId main_activity;
  std::vector<IntentFilter> intent_filters;
  bool operator==(const Manifest &) const = default;
};

/// One untyped instruction per bytecode family.
enum class Opcode {
  Const,
  Move,
  BinOp,
  If,
  Goto,
  SGet,
  SPut,
  IGet,
  IPut,
  New,
  AGet,
  APut,
  Invoke,
  MoveResult,
  Api,
  Return,
};

const char *opcode_name(Opcode op);

struct Instr {
  Opcode op = Opcode::Return;
  // Register operands. For stores (sput/iput/aput) `a` is the source value;
  // for loads `dst` is written. iget/iput/aget/aput use `b` as the object or
  // array register, aget/aput use `c` as the index register.
  int dst = -1;
  int a = -1;
  int b = -1;
  int c = -1;
  ArithOp arith = ArithOp::Add;
  CmpOp cmp = CmpOp::Eq;
  /// const literal, or the immediate right operand of `if`.
  std::optional<Value> imm;
  int target = -1;
  /// Field signature, field name, class name, method signature, or api name.
  std::string name;
  std::vector<int> args;
  /// Source line (1-based); not part of structural equality.
  int line = 0;

  bool is_branch() const { return op == Opcode::If || op == Opcode::Goto; }
  bool operator==(const Instr &o) const;
};

struct Method {
  MethodSig sig;
  int param_count = 0;
  int register_count = 0;
  std::vector<Instr> body;
  /// Sorted basic-block leaders: 0, branch targets, and the index after each
  /// branch or return. Block i spans [leaders[i], leaders[i+1]).
  std::vector<int> leaders;

  int block_of(int instr_index) const;
  int block_begin(int block) const { return leaders.at(block); }
  int block_end(int block) const;
  int block_count() const { return static_cast<int>(leaders.size()); }
  /// Class part of the signature ("A1" for "A1.onClick").
  std::string owner() const;
  bool operator==(const Method &o) const {
    return sig == o.sig && param_count == o.param_count &&
           register_count == o.register_count && body == o.body;
  }
};

struct App {
  std::string name;
  Manifest manifest;
  std::vector<Activity> activities;
  std::map<MethodSig, Method> methods;

  const Activity *activity(std::string_view id) const;
  const Method *method(std::string_view sig) const;
  const Method &method_at(std::string_view sig) const;
  int total_instructions() const;
  bool operator==(const App &) const = default;
};

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string &msg, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }
  /// The message without the "line:col:" prefix.
  const std::string &reason() const { return reason_; }

private:
  std::string reason_;
  int line_;
  int column_;
};

/// Parses and validates an app. Throws ParseError on any syntax or
/// validation failure.
App parse_app(std::string_view text);
App load_app_file(const std::string &path);

/// One instruction in .mapp syntax, branch targets as indices.
std::string instr_to_string(const Instr &ins);

/// Normalized text form; parse_app(serialize_app(a)) == a.
std::string serialize_app(const App &app);

/// Leader computation shared by the parser, interpreter and CFG builder.
std::vector<int> compute_leaders(const std::vector<Instr> &body);

/// Launch event for the main activity followed by one intent event per
/// manifest intent filter, in manifest order.
std::vector<Event> entry_events(const App &app);

struct ApiSpec {
  std::string name;
  int arity;
  bool returns_value;
  /// Unmodeled APIs produce opaque symbolic returns.
  bool modeled;
};

/// The closed API catalog. Versioned together with the IR.
const std::vector<ApiSpec> &api_catalog();
const ApiSpec *find_api(std::string_view name);
inline constexpr const char *kApiCatalogVersion = "apex-api/1";

} // namespace apex

#endif
