#pragma once

// Instantiation-based, backtrack-free solver for operation-level constraints.
//
// Variables are instantiated group by group: the indegree, the first input's
// structure, the attributes, then each remaining input's structure. After
// every assignment, templates whose index/range symbols are now known are
// unrolled into ground affine relations, and every ground relation left with
// a single unassigned variable narrows that variable's domain. Each value is
// drawn uniformly from the narrowed domain, so every satisfying point is
// reachable and no assignment is ever revoked.

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "graphsmith/graph.h"
#include "graphsmith/opspec.h"
#include "graphsmith/rng.h"

namespace graphsmith {

inline constexpr int64_t kUnbounded = int64_t{1} << 40;

// Integer interval minus a set of excluded points.
class Domain {
 public:
  Domain() = default;
  Domain(int64_t lo, int64_t hi) : lo_(lo), hi_(hi) {}

  int64_t lo() const { return lo_; }
  int64_t hi() const { return hi_; }
  const std::vector<int64_t>& excluded() const { return excluded_; }

  bool contains(int64_t v) const;
  bool empty() const { return size() == 0; }
  int64_t size() const;
  bool finite() const { return hi_ < kUnbounded; }

  void restrict(int64_t lo, int64_t hi);
  void exclude(int64_t v);
  void fix(int64_t v) { restrict(v, v); }

  // k-th smallest member, 0-based.
  int64_t nth(int64_t k) const;

  Domain intersect(int64_t lo, int64_t hi) const;

  bool operator==(const Domain&) const = default;

 private:
  int64_t lo_ = 1;
  int64_t hi_ = kUnbounded;
  std::vector<int64_t> excluded_;  // sorted, inside [lo_, hi_]
};

enum class VarKind : uint8_t { kDim, kLen, kAttr };

struct VarRef {
  VarKind kind = VarKind::kDim;
  int input = 0;      // kDim, kLen
  int attr = 0;       // kAttr: schema index
  int64_t index = 1;  // kLen: dimension (1-based); kAttr: list position (1-based)
  bool operator==(const VarRef&) const = default;
};

std::string to_string(const VarRef& v, const OpSpec& spec);

// Affine relation over solver variables: sum(coef * var) + constant (op) 0.
struct GroundRel {
  std::vector<std::pair<int64_t, int>> terms;  // (coef, slot)
  int64_t constant = 0;
  dsl::RelOp op = dsl::RelOp::kEq;
};

// One step of the instantiation order.
struct OrderGroup {
  enum class Kind : uint8_t { kIndegree, kTensor, kAttrs };
  Kind kind = Kind::kIndegree;
  int input = -1;                   // kTensor
  std::vector<std::string> attrs;   // kAttrs, schema order
};

// Groups G1..G_{indegree+2}: indegree, input 0, attributes, inputs 1..k-1.
std::vector<OrderGroup> instantiation_order(const OpSpec& spec, int indegree);

struct SolverLimits {
  int64_t max_dim = 5;  // bound for freshly sampled ranks
  int64_t max_len = 5;  // bound for freshly sampled lengths
};

struct SolveStats {
  uint64_t solves = 0;
  uint64_t reused_inputs = 0;
  uint64_t fresh_inputs = 0;
  uint64_t candidates_checked = 0;
  uint64_t ground_constraints = 0;
  uint64_t backtracks = 0;  // committed assignments revoked; stays 0

  SolveStats& operator+=(const SolveStats& o);
};

// Partial instantiation for one op: domains, values, ground relations and
// templates still waiting for their index/range symbols.
class InstantiationState {
 public:
  InstantiationState(const OpSpec& spec, int indegree);

  const OpSpec& spec() const { return *spec_; }
  int indegree() const { return indegree_; }

  int slot(const VarRef& v) const;
  VarRef var_at(int slot) const;
  bool assigned(const VarRef& v) const { return assigned_[static_cast<size_t>(slot(v))]; }
  int64_t value(const VarRef& v) const;
  const Domain& domain(const VarRef& v) const { return domains_[static_cast<size_t>(slot(v))]; }

  const std::vector<GroundRel>& ground() const { return ground_; }
  size_t pending_templates() const { return pending_.size(); }

  // Records var = value (must lie in the current domain), then eliminates
  // and propagates. Throws EmptyDomain if a domain empties.
  void assign(const VarRef& v, int64_t value);

  // Unrolls every pending template whose structural symbols are assigned.
  // With `force_upto`, templates with elim_pos <= force_upto that cannot be
  // unrolled raise OrderViolation.
  void eliminate(int64_t force_upto = -1);

  // Narrows domains using ground relations with one unassigned variable.
  void propagate();

  // Number of positions of a list attribute (requires dim(0) assigned).
  int64_t list_count(int attr) const;

  // True if every ground relation whose unassigned variables all belong to
  // the lengths of `input` holds once those lengths take `lens`, and every
  // length lies in its domain. Requires dim(input) assigned.
  bool accepts_lengths(int input, std::span<const int64_t> lens) const;

 private:
  std::optional<int64_t> structural_value(const dsl::Expr& e, const int64_t* bound) const;
  bool unroll(const dsl::Constraint& c, int64_t* bound, std::vector<GroundRel>& out) const;
  bool lower(const dsl::Rel& r, const int64_t* bound, std::vector<GroundRel>& out) const;
  void narrow(const GroundRel& g);
  void fail(const std::string& why) const;

  const OpSpec* spec_;
  int indegree_;
  int len_base_;
  int attr_base_;
  std::vector<Domain> domains_;
  std::vector<int64_t> values_;
  std::vector<char> assigned_;
  std::vector<GroundRel> ground_;
  std::vector<int> pending_;  // indices into spec.templates(indegree)
};

// Draws uniformly from the variable's domain; fresh ranks/lengths are first
// intersected with the generation bounds (falling back to the smallest
// feasible value if the intersection is empty). Assigns and propagates.
int64_t sample_assign(InstantiationState& state, const VarRef& v, Rng& rng, const SolverLimits& limits);

struct PoolEntry {
  EdgeId edge = 0;
  TensorStruct shape;
};

struct Reuse {
  EdgeId edge = 0;
  bool operator==(const Reuse&) const = default;
};
struct Fresh {
  TensorStruct shape;
  bool operator==(const Fresh&) const = default;
};
using InputChoice = std::variant<Reuse, Fresh>;

struct OpSolution {
  AttrMap attrs;  // includes "indegree"
  std::vector<InputChoice> inputs;
  std::vector<TensorStruct> input_shapes;
};

// Solves one op. At the start of each tensor group a Bernoulli(picking_rate)
// draw decides whether to try reusing a pool tensor consistent with the
// current instantiation; otherwise (or with no match) the structure is
// sampled variable by variable.
OpSolution solve_op(const OpSpec& spec, int indegree, std::span<const PoolEntry> pool, double picking_rate, Rng& rng,
                    const SolverLimits& limits = {}, SolveStats* stats = nullptr);

}  // namespace graphsmith
