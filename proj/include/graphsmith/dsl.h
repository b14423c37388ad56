#pragma once

// Constraint templates over symbolic tensor structures.
//
// Symbols:
//   dim(k)            rank of input k (0-based input index)
//   len(k, i)         length of dimension i (1-based) of input k
//   attr("a")         scalar attribute
//   attr("a", j)      position j (1-based) of a list attribute
//   bound(level)      variable bound by the enclosing forall at that nesting level
//
// Expressions are affine. Index, position, range and guard expressions may
// not mention len(); they are resolved once their symbols are assigned, which
// is what turns a template into ground constraints.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace graphsmith::dsl {

struct Expr;

enum class SymKind : uint8_t { kDim, kLen, kAttr, kBound };

struct Symbol {
  SymKind kind = SymKind::kDim;
  int input = 0;                       // kDim, kLen
  int level = 0;                       // kBound
  std::string attr;                    // kAttr
  int attr_index = -1;                 // kAttr, resolved against the OpSpec schema
  std::shared_ptr<const Expr> index;   // kLen: dimension; kAttr: list position (null for scalars)
};

struct Term {
  int64_t coef = 1;
  Symbol sym;
};

struct Expr {
  int64_t constant = 0;
  std::vector<Term> terms;

  Expr() = default;
  Expr(int64_t c) : constant(c) {}  // NOLINT: literals mix freely into expressions
  Expr(int c) : constant(c) {}      // NOLINT
};

Expr dim(int input);
Expr len(int input, Expr index);
Expr attr(std::string name);
Expr attr(std::string name, Expr position);
Expr bound(int level);

Expr operator+(Expr a, const Expr& b);
Expr operator-(Expr a, const Expr& b);
Expr operator*(int64_t c, Expr a);
Expr operator-(Expr a);

enum class RelOp : uint8_t { kEq, kLe, kGe, kNe };

struct Rel {
  Expr lhs;
  RelOp op = RelOp::kEq;
  Expr rhs;
};

struct Constraint;

// For bound(level) in 1..upper, restricted to iterations where guard holds.
struct ForAll {
  int level = 0;
  Expr upper;
  std::optional<Rel> guard;
  std::shared_ptr<const Constraint> body;
};

struct Constraint {
  std::variant<Rel, ForAll> node;
  Constraint(Rel r) : node(std::move(r)) {}      // NOLINT
  Constraint(ForAll f) : node(std::move(f)) {}   // NOLINT
};

Rel eq(Expr a, Expr b);
Rel le(Expr a, Expr b);
Rel ge(Expr a, Expr b);
Rel ne(Expr a, Expr b);

Constraint forall(int level, Expr upper, Constraint body);
Constraint forall(int level, Expr upper, Rel guard, Constraint body);

// Visits every symbol. `structural` is true for symbols inside index,
// position, range or guard expressions.
template <typename F>
void visit_symbols(const Expr& e, bool structural, F&& f);

template <typename F>
void visit_symbols(const Constraint& c, F&& f);

bool holds(RelOp op, int64_t lhs, int64_t rhs);

std::string to_string(const Expr& e);
std::string to_string(const Rel& r);
std::string to_string(const Constraint& c);

// ---------------------------------------------------------------------------

template <typename F>
void visit_symbols(const Expr& e, bool structural, F&& f) {
  for (const Term& t : e.terms) {
    f(t.sym, structural);
    if (t.sym.index) visit_symbols(*t.sym.index, true, f);
  }
}

template <typename F>
void visit_symbols(const Constraint& c, F&& f) {
  if (const auto* r = std::get_if<Rel>(&c.node)) {
    visit_symbols(r->lhs, false, f);
    visit_symbols(r->rhs, false, f);
    return;
  }
  const auto& fa = std::get<ForAll>(c.node);
  visit_symbols(fa.upper, true, f);
  if (fa.guard) {
    visit_symbols(fa.guard->lhs, true, f);
    visit_symbols(fa.guard->rhs, true, f);
  }
  visit_symbols(*fa.body, f);
}

}  // namespace graphsmith::dsl
