//===-- value.h - Runtime values and shared operator semantics ---------===//
//
// Concrete values of the miniature app IR. The arithmetic and comparison
// helpers here are the single definition of operator semantics; both the
// interpreter and the symbolic evaluator call them.
//
//===---------------------------------------------------------------------===//
#ifndef APEX_VALUE_H
#define APEX_VALUE_H

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace apex {

struct ObjRef {
  int64_t id = 0;
  bool operator==(const ObjRef &) const = default;
  auto operator<=>(const ObjRef &) const = default;
};

enum class ValueType { Int, Bool, Str, Ref };

class Value {
public:
  Value() : v_(int64_t{0}) {}
  static Value of_int(int64_t i) { return Value(Storage{i}); }
  static Value of_bool(bool b) { return Value(Storage{b}); }
  static Value of_str(std::string s) { return Value(Storage{std::move(s)}); }
  static Value of_ref(ObjRef r) { return Value(Storage{r}); }

  ValueType type() const { return static_cast<ValueType>(v_.index()); }
  bool is_int() const { return type() == ValueType::Int; }
  bool is_bool() const { return type() == ValueType::Bool; }
  bool is_str() const { return type() == ValueType::Str; }
  bool is_ref() const { return type() == ValueType::Ref; }
  /// Int or Bool; bools participate in arithmetic and ordering as 0/1.
  bool is_numeric() const { return is_int() || is_bool(); }

  int64_t as_int() const { return std::get<int64_t>(v_); }
  bool as_bool() const { return std::get<bool>(v_); }
  const std::string &as_str() const { return std::get<std::string>(v_); }
  ObjRef as_ref() const { return std::get<ObjRef>(v_); }
  int64_t numeric() const { return is_bool() ? (as_bool() ? 1 : 0) : as_int(); }

  /// Literal syntax as accepted by the IR parser: 5, -3, true, "text", @7.
  std::string to_literal() const;

  bool operator==(const Value &) const = default;
  auto operator<=>(const Value &) const = default;

private:
  using Storage = std::variant<int64_t, bool, std::string, ObjRef>;
  explicit Value(Storage s) : v_(std::move(s)) {}
  Storage v_;
};

enum class ArithOp { Add, Sub, Mul, Div };
enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

const char *arith_name(ArithOp op);   // "add" ...
const char *arith_symbol(ArithOp op); // "+" ...
const char *cmp_name(CmpOp op);       // "eq" ...
const char *cmp_symbol(CmpOp op);     // "==" ...
std::optional<ArithOp> parse_arith(const std::string &s);
std::optional<CmpOp> parse_cmp(const std::string &s);
CmpOp negate(CmpOp op);

/// 64-bit wrapping arithmetic on numeric operands. nullopt is a trap:
/// non-numeric operand or division by zero.
std::optional<Value> apply_arith(ArithOp op, const Value &a, const Value &b);

/// eq/ne are total (different types compare unequal, bool/int coerce);
/// ordering requires numeric operands and is a trap (nullopt) otherwise.
std::optional<bool> apply_cmp(CmpOp op, const Value &a, const Value &b);

std::string quote(const std::string &s);

} // namespace apex

#endif
