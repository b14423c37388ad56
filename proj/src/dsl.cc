#include "graphsmith/dsl.h"

#include <sstream>

namespace graphsmith::dsl {

namespace {

Expr single(Symbol s) {
  Expr e;
  e.terms.push_back(Term{1, std::move(s)});
  return e;
}

const char* op_text(RelOp op) {
  switch (op) {
    case RelOp::kEq: return "=";
    case RelOp::kLe: return "<=";
    case RelOp::kGe: return ">=";
    case RelOp::kNe: return "!=";
  }
  return "?";
}

std::string symbol_text(const Symbol& s) {
  switch (s.kind) {
    case SymKind::kDim: return "dim(" + std::to_string(s.input) + ")";
    case SymKind::kLen: return "len(" + std::to_string(s.input) + "," + to_string(*s.index) + ")";
    case SymKind::kAttr:
      return s.index ? s.attr + "[" + to_string(*s.index) + "]" : s.attr;
    case SymKind::kBound: return "i" + std::to_string(s.level);
  }
  return "?";
}

}  // namespace

Expr dim(int input) {
  Symbol s;
  s.kind = SymKind::kDim;
  s.input = input;
  return single(std::move(s));
}

Expr len(int input, Expr index) {
  Symbol s;
  s.kind = SymKind::kLen;
  s.input = input;
  s.index = std::make_shared<const Expr>(std::move(index));
  return single(std::move(s));
}

Expr attr(std::string name) {
  Symbol s;
  s.kind = SymKind::kAttr;
  s.attr = std::move(name);
  return single(std::move(s));
}

Expr attr(std::string name, Expr position) {
  Symbol s;
  s.kind = SymKind::kAttr;
  s.attr = std::move(name);
  s.index = std::make_shared<const Expr>(std::move(position));
  return single(std::move(s));
}

Expr bound(int level) {
  Symbol s;
  s.kind = SymKind::kBound;
  s.level = level;
  return single(std::move(s));
}

Expr operator+(Expr a, const Expr& b) {
  a.constant += b.constant;
  a.terms.insert(a.terms.end(), b.terms.begin(), b.terms.end());
  return a;
}

Expr operator*(int64_t c, Expr a) {
  a.constant *= c;
  for (Term& t : a.terms) t.coef *= c;
  return a;
}

Expr operator-(Expr a) { return -1 * std::move(a); }

Expr operator-(Expr a, const Expr& b) { return std::move(a) + (-1 * b); }

Rel eq(Expr a, Expr b) { return Rel{std::move(a), RelOp::kEq, std::move(b)}; }
Rel le(Expr a, Expr b) { return Rel{std::move(a), RelOp::kLe, std::move(b)}; }
Rel ge(Expr a, Expr b) { return Rel{std::move(a), RelOp::kGe, std::move(b)}; }
Rel ne(Expr a, Expr b) { return Rel{std::move(a), RelOp::kNe, std::move(b)}; }

Constraint forall(int level, Expr upper, Constraint body) {
  return ForAll{level, std::move(upper), std::nullopt, std::make_shared<const Constraint>(std::move(body))};
}

Constraint forall(int level, Expr upper, Rel guard, Constraint body) {
  return ForAll{level, std::move(upper), std::move(guard), std::make_shared<const Constraint>(std::move(body))};
}

bool holds(RelOp op, int64_t lhs, int64_t rhs) {
  switch (op) {
    case RelOp::kEq: return lhs == rhs;
    case RelOp::kLe: return lhs <= rhs;
    case RelOp::kGe: return lhs >= rhs;
    case RelOp::kNe: return lhs != rhs;
  }
  return false;
}

std::string to_string(const Expr& e) {
  std::ostringstream os;
  bool first = true;
  for (const Term& t : e.terms) {
    if (!first) os << (t.coef < 0 ? " - " : " + ");
    else if (t.coef < 0) os << "-";
    const int64_t c = t.coef < 0 ? -t.coef : t.coef;
    if (c != 1) os << c << "*";
    os << symbol_text(t.sym);
    first = false;
  }
  if (first) {
    os << e.constant;
  } else if (e.constant != 0) {
    os << (e.constant < 0 ? " - " : " + ") << (e.constant < 0 ? -e.constant : e.constant);
  }
  return os.str();
}

std::string to_string(const Rel& r) { return to_string(r.lhs) + " " + op_text(r.op) + " " + to_string(r.rhs); }

std::string to_string(const Constraint& c) {
  if (const auto* r = std::get_if<Rel>(&c.node)) return to_string(*r);
  const auto& fa = std::get<ForAll>(c.node);
  std::string s = "forall i" + std::to_string(fa.level) + " in 1.." + to_string(fa.upper);
  if (fa.guard) s += " if " + to_string(*fa.guard);
  return s + ": " + to_string(*fa.body);
}

}  // namespace graphsmith::dsl
