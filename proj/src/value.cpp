#include "apex/value.h"

#include "json.hpp"

namespace apex {

std::string quote(const std::string &s) { return nlohmann::json(s).dump(); }

std::string Value::to_literal() const {
  switch (type()) {
  case ValueType::Int:
    return std::to_string(as_int());
  case ValueType::Bool:
    return as_bool() ? "true" : "false";
  case ValueType::Str:
    return quote(as_str());
  case ValueType::Ref:
    return "@" + std::to_string(as_ref().id);
  }
  return "?";
}

const char *arith_name(ArithOp op) {
  switch (op) {
  case ArithOp::Add: return "add";
  case ArithOp::Sub: return "sub";
  case ArithOp::Mul: return "mul";
  case ArithOp::Div: return "div";
  }
  return "?";
}

const char *arith_symbol(ArithOp op) {
  switch (op) {
  case ArithOp::Add: return "+";
  case ArithOp::Sub: return "-";
  case ArithOp::Mul: return "*";
  case ArithOp::Div: return "/";
  }
  return "?";
}

const char *cmp_name(CmpOp op) {
  switch (op) {
  case CmpOp::Eq: return "eq";
  case CmpOp::Ne: return "ne";
  case CmpOp::Lt: return "lt";
  case CmpOp::Le: return "le";
  case CmpOp::Gt: return "gt";
  case CmpOp::Ge: return "ge";
  }
  return "?";
}

const char *cmp_symbol(CmpOp op) {
  switch (op) {
  case CmpOp::Eq: return "==";
  case CmpOp::Ne: return "!=";
  case CmpOp::Lt: return "<";
  case CmpOp::Le: return "<=";
  case CmpOp::Gt: return ">";
  case CmpOp::Ge: return ">=";
  }
  return "?";
}

std::optional<ArithOp> parse_arith(const std::string &s) {
  if (s == "add" || s == "+") return ArithOp::Add;
  if (s == "sub" || s == "-") return ArithOp::Sub;
  if (s == "mul" || s == "*") return ArithOp::Mul;
  if (s == "div" || s == "/") return ArithOp::Div;
  return std::nullopt;
}

std::optional<CmpOp> parse_cmp(const std::string &s) {
  if (s == "eq" || s == "==") return CmpOp::Eq;
  if (s == "ne" || s == "!=") return CmpOp::Ne;
  if (s == "lt" || s == "<") return CmpOp::Lt;
  if (s == "le" || s == "<=") return CmpOp::Le;
  if (s == "gt" || s == ">") return CmpOp::Gt;
  if (s == "ge" || s == ">=") return CmpOp::Ge;
  return std::nullopt;
}

CmpOp negate(CmpOp op) {
  switch (op) {
  case CmpOp::Eq: return CmpOp::Ne;
  case CmpOp::Ne: return CmpOp::Eq;
  case CmpOp::Lt: return CmpOp::Ge;
  case CmpOp::Le: return CmpOp::Gt;
  case CmpOp::Gt: return CmpOp::Le;
  case CmpOp::Ge: return CmpOp::Lt;
  }
  return op;
}

std::optional<Value> apply_arith(ArithOp op, const Value &a, const Value &b) {
  if (!a.is_numeric() || !b.is_numeric())
    return std::nullopt;
  // Unsigned arithmetic gives two's-complement wrapping without UB.
  uint64_t x = static_cast<uint64_t>(a.numeric());
  uint64_t y = static_cast<uint64_t>(b.numeric());
  switch (op) {
  case ArithOp::Add:
    return Value::of_int(static_cast<int64_t>(x + y));
  case ArithOp::Sub:
    return Value::of_int(static_cast<int64_t>(x - y));
  case ArithOp::Mul:
    return Value::of_int(static_cast<int64_t>(x * y));
  case ArithOp::Div: {
    int64_t d = b.numeric();
    int64_t n = a.numeric();
    if (d == 0)
      return std::nullopt;
    if (d == -1)
      return Value::of_int(static_cast<int64_t>(0 - x));
    return Value::of_int(n / d);
  }
  }
  return std::nullopt;
}

std::optional<bool> apply_cmp(CmpOp op, const Value &a, const Value &b) {
  if (op == CmpOp::Eq || op == CmpOp::Ne) {
    bool eq;
    if (a.is_numeric() && b.is_numeric())
      eq = a.numeric() == b.numeric();
    else
      eq = a == b;
    return op == CmpOp::Eq ? eq : !eq;
  }
  if (!a.is_numeric() || !b.is_numeric())
    return std::nullopt;
  int64_t x = a.numeric(), y = b.numeric();
  switch (op) {
  case CmpOp::Lt: return x < y;
  case CmpOp::Le: return x <= y;
  case CmpOp::Gt: return x > y;
  case CmpOp::Ge: return x >= y;
  default: break;
  }
  return std::nullopt;
}

} // namespace apex
