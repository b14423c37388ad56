#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "graphsmith/dsl.h"
#include "graphsmith/graph.h"
#include "graphsmith/tensor.h"
#include "graphsmith/tensor_value.h"

namespace graphsmith {

// Upper bound on tensor rank anywhere in the system, including derived
// outputs of rank-increasing ops.
inline constexpr int64_t kMaxRank = 8;

struct AttrSpec {
  std::string name;
  int64_t lo = 0;
  int64_t hi = 0;
  // Present for list attributes: number of positions as an expression over
  // dim(0). Absent for scalars.
  std::optional<dsl::Expr> count;

  bool is_list() const { return count.has_value(); }
};

// Position of a symbol in the instantiation order. Groups: 0 indegree,
// 1 first input, 2 attributes, k+2 input k for k >= 1. Inside a tensor group
// the rank precedes the lengths; inside the attribute group attributes follow
// schema order.
int64_t order_position(const dsl::Symbol& s);
int64_t tensor_group(int input);

// A constraint template plus the two order positions that make it legal:
// every structural symbol (index/range/guard) sits at deps_pos or earlier,
// and the template must be ground before anything at elim_pos is sampled.
struct Template {
  dsl::Constraint constraint;
  int64_t deps_pos = -1;
  int64_t elim_pos = -1;
};

using ShapeSpan = std::span<const TensorStruct>;
using ValueSpan = std::span<const TensorValue>;

using ConstraintBuilder = std::function<std::vector<dsl::Constraint>(int indegree)>;
using OutFn = std::function<std::vector<TensorStruct>(const AttrMap&, ShapeSpan)>;
using Checker = std::function<bool(const AttrMap&, ShapeSpan)>;
using Kernel = std::function<std::vector<TensorValue>(const AttrMap&, ValueSpan)>;

// One operation type. `constraints` is the template set the solver works
// from; `checker` restates the same shape rules directly and serves as the
// independent oracle.
struct OpSpec {
  std::string name;
  std::vector<int> indegrees;
  std::vector<AttrSpec> attrs;
  ConstraintBuilder constraints;
  OutFn out_fn;
  Checker checker;
  Kernel kernel;  // empty if no numeric kernel
  // Input slots whose synthesized data must stay away from zero.
  std::vector<int> divisor_inputs;

  bool has_kernel() const { return static_cast<bool>(kernel); }
  bool accepts_indegree(int k) const;
  int attr_index(const std::string& attr_name) const;

  // Templates for a given indegree with attribute symbols resolved.
  const std::vector<Template>& templates(int indegree) const;

  // Populated by Registry::add.
  std::map<int, std::vector<Template>> compiled;
};

class Registry {
 public:
  // Throws DuplicateOp, or OrderViolation when a template's index/range
  // symbols are not ordered ahead of the variables it constrains.
  void add(OpSpec spec);

  const OpSpec& get(const std::string& name) const;
  const OpSpec* find(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name) != nullptr; }

  const std::vector<std::unique_ptr<OpSpec>>& ops() const { return ops_; }
  std::vector<std::string> names() const;
  size_t size() const { return ops_.size(); }

  nlohmann::json manifest() const;

 private:
  std::vector<std::unique_ptr<OpSpec>> ops_;
  std::map<std::string, const OpSpec*, std::less<>> by_name_;
};

// The built-in operation set. Built once; immutable afterwards.
const Registry& builtin_registry();
Registry make_builtin_registry();

// Schema-level well-formedness shared by both validity routes: indegree in
// the domain, exactly the declared attributes present, scalar/list kinds and
// static value ranges respected. List lengths are left to each route.
bool attrs_well_formed(const OpSpec& spec, const AttrMap& attrs, size_t indegree);

// Validity through the hand-written checker.
bool check(const OpSpec& spec, const AttrMap& attrs, ShapeSpan inputs);

// Validity by direct evaluation of the constraint templates.
bool check_templates(const OpSpec& spec, const AttrMap& attrs, ShapeSpan inputs);

// Output structures; throws PreconditionError if check() fails.
std::vector<TensorStruct> infer_outputs(const OpSpec& spec, const AttrMap& attrs, ShapeSpan inputs);

// Full graph validity: acyclic, every op known and accepted by its checker,
// stored output edges equal to recomputed outputs. Returns an empty string on
// success, otherwise a description of the first problem.
std::string validate_graph(const Graph& g, const Registry& registry);

}  // namespace graphsmith
