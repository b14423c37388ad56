#include "graphsmith/opspec.h"

#include <algorithm>

#include "graphsmith/errors.h"

namespace graphsmith {

using dsl::Constraint;
using dsl::Expr;
using dsl::ForAll;
using dsl::Rel;
using dsl::SymKind;
using dsl::Symbol;

int64_t tensor_group(int input) { return input == 0 ? 1 : input + 2; }

int64_t order_position(const Symbol& s) {
  switch (s.kind) {
    case SymKind::kDim: return tensor_group(s.input) * 1000;
    case SymKind::kLen: return tensor_group(s.input) * 1000 + 1;
    case SymKind::kAttr: return 2000 + s.attr_index;
    case SymKind::kBound: return -1;
  }
  return -1;
}

bool OpSpec::accepts_indegree(int k) const {
  return std::find(indegrees.begin(), indegrees.end(), k) != indegrees.end();
}

int OpSpec::attr_index(const std::string& attr_name) const {
  for (size_t i = 0; i < attrs.size(); ++i)
    if (attrs[i].name == attr_name) return static_cast<int>(i);
  return -1;
}

const std::vector<Template>& OpSpec::templates(int indegree) const {
  auto it = compiled.find(indegree);
  if (it == compiled.end()) throw PreconditionError(name + ": indegree " + std::to_string(indegree) + " not in domain");
  return it->second;
}

namespace {

// Rebuilds an expression with attribute symbols resolved to schema indices.
Expr resolve(const OpSpec& spec, const Expr& e, bool structural, int indegree) {
  Expr out;
  out.constant = e.constant;
  for (const auto& t : e.terms) {
    Symbol s = t.sym;
    if (structural && s.kind == SymKind::kLen) {
      throw OrderViolation(spec.name + ": len() may not appear in index, range or guard expressions");
    }
    if (s.kind == SymKind::kDim || s.kind == SymKind::kLen) {
      if (s.input < 0 || s.input >= indegree) {
        throw OrderViolation(spec.name + ": reference to input " + std::to_string(s.input) + " beyond indegree " +
                             std::to_string(indegree));
      }
    }
    if (s.kind == SymKind::kAttr) {
      s.attr_index = spec.attr_index(s.attr);
      if (s.attr_index < 0) throw OrderViolation(spec.name + ": unknown attribute '" + s.attr + "'");
      const bool is_list = spec.attrs[static_cast<size_t>(s.attr_index)].is_list();
      if (is_list != static_cast<bool>(s.index)) {
        throw OrderViolation(spec.name + ": attribute '" + s.attr + "' used with wrong arity");
      }
    }
    if (s.index) s.index = std::make_shared<const Expr>(resolve(spec, *s.index, true, indegree));
    out.terms.push_back(dsl::Term{t.coef, std::move(s)});
  }
  return out;
}

Rel resolve(const OpSpec& spec, const Rel& r, bool structural, int indegree) {
  return Rel{resolve(spec, r.lhs, structural, indegree), r.op, resolve(spec, r.rhs, structural, indegree)};
}

Constraint resolve(const OpSpec& spec, const Constraint& c, int indegree) {
  if (const auto* r = std::get_if<Rel>(&c.node)) return resolve(spec, *r, false, indegree);
  const auto& fa = std::get<ForAll>(c.node);
  ForAll out;
  out.level = fa.level;
  out.upper = resolve(spec, fa.upper, true, indegree);
  if (fa.guard) out.guard = resolve(spec, *fa.guard, true, indegree);
  out.body = std::make_shared<const Constraint>(resolve(spec, *fa.body, indegree));
  return out;
}

Template annotate(const OpSpec& spec, Constraint c) {
  Template t{std::move(c)};
  dsl::visit_symbols(t.constraint, [&](const Symbol& s, bool structural) {
    const int64_t pos = order_position(s);
    if (pos < 0) return;
    if (structural) {
      t.deps_pos = std::max(t.deps_pos, pos);
    } else {
      t.elim_pos = std::max(t.elim_pos, pos);
      // A length reference also constrains the rank it indexes into.
      if (s.kind == SymKind::kLen) t.elim_pos = std::max(t.elim_pos, pos);
    }
  });
  if (t.elim_pos < 0) {
    throw OrderViolation(spec.name + ": template constrains no variable: " + dsl::to_string(t.constraint));
  }
  if (t.deps_pos >= t.elim_pos) {
    throw OrderViolation(spec.name + ": template depends on symbols ordered at or after the variables it constrains: " +
                         dsl::to_string(t.constraint));
  }
  return t;
}

void compile(OpSpec& spec) {
  if (spec.indegrees.empty()) throw OrderViolation(spec.name + ": empty indegree domain");
  for (const auto& a : spec.attrs) {
    if (a.lo > a.hi) throw OrderViolation(spec.name + ": empty domain for attribute '" + a.name + "'");
    if (a.count) {
      dsl::visit_symbols(*a.count, true, [&](const Symbol& s, bool) {
        if (s.kind != SymKind::kDim || s.input != 0) {
          throw OrderViolation(spec.name + ": list length of '" + a.name + "' must depend on dim(0) only");
        }
      });
    }
  }
  spec.compiled.clear();
  for (int k : spec.indegrees) {
    std::vector<Template> ts;
    if (spec.constraints) {
      for (const Constraint& c : spec.constraints(k)) ts.push_back(annotate(spec, resolve(spec, c, k)));
    }
    spec.compiled.emplace(k, std::move(ts));
  }
}

// ---------------------------------------------------------------------------
// Direct evaluation of templates on a concrete point.

struct ConcreteEnv {
  const OpSpec& spec;
  const AttrMap& attrs;
  ShapeSpan inputs;
  int64_t bound[8] = {};
};

std::optional<int64_t> eval(const Expr& e, const ConcreteEnv& env);

std::optional<int64_t> value_of(const Symbol& s, const ConcreteEnv& env) {
  switch (s.kind) {
    case SymKind::kDim:
      if (static_cast<size_t>(s.input) >= env.inputs.size()) return std::nullopt;
      return env.inputs[static_cast<size_t>(s.input)].dim();
    case SymKind::kLen: {
      if (static_cast<size_t>(s.input) >= env.inputs.size()) return std::nullopt;
      const auto& in = env.inputs[static_cast<size_t>(s.input)];
      auto i = eval(*s.index, env);
      if (!i || *i < 1 || *i > in.dim()) return std::nullopt;
      return in.at(*i);
    }
    case SymKind::kAttr: {
      const auto& a = env.spec.attrs[static_cast<size_t>(s.attr_index)];
      auto it = env.attrs.find(a.name);
      if (it == env.attrs.end()) return std::nullopt;
      if (!s.index) {
        if (const auto* v = std::get_if<int64_t>(&it->second)) return *v;
        return std::nullopt;
      }
      const auto* list = std::get_if<std::vector<int64_t>>(&it->second);
      auto j = eval(*s.index, env);
      if (!list || !j || *j < 1 || *j > static_cast<int64_t>(list->size())) return std::nullopt;
      return (*list)[static_cast<size_t>(*j - 1)];
    }
    case SymKind::kBound: return env.bound[s.level];
  }
  return std::nullopt;
}

std::optional<int64_t> eval(const Expr& e, const ConcreteEnv& env) {
  int64_t v = e.constant;
  for (const auto& t : e.terms) {
    auto x = value_of(t.sym, env);
    if (!x) return std::nullopt;
    v += t.coef * *x;
  }
  return v;
}

bool eval_rel(const Rel& r, const ConcreteEnv& env) {
  auto a = eval(r.lhs, env);
  auto b = eval(r.rhs, env);
  return a && b && dsl::holds(r.op, *a, *b);
}

bool eval_constraint(const Constraint& c, ConcreteEnv& env) {
  if (const auto* r = std::get_if<Rel>(&c.node)) return eval_rel(*r, env);
  const auto& fa = std::get<ForAll>(c.node);
  auto upper = eval(fa.upper, env);
  if (!upper) return false;
  for (int64_t i = 1; i <= *upper; ++i) {
    env.bound[fa.level] = i;
    if (fa.guard && !eval_rel(*fa.guard, env)) continue;
    if (!eval_constraint(*fa.body, env)) return false;
  }
  return true;
}

}  // namespace

void Registry::add(OpSpec spec) {
  if (by_name_.count(spec.name)) throw DuplicateOp("operation '" + spec.name + "' registered twice");
  compile(spec);
  ops_.push_back(std::make_unique<OpSpec>(std::move(spec)));
  by_name_.emplace(ops_.back()->name, ops_.back().get());
}

const OpSpec* Registry::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

const OpSpec& Registry::get(const std::string& name) const {
  const OpSpec* s = find(name);
  if (!s) throw UnknownOp("unknown operation '" + name + "'");
  return *s;
}

std::vector<std::string> Registry::names() const {
  std::vector<std::string> out;
  for (const auto& op : ops_) out.push_back(op->name);
  return out;
}

nlohmann::json Registry::manifest() const {
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& op : ops_) {
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : op->attrs) {
      attrs.push_back({{"name", a.name},
                       {"lo", a.lo},
                       {"hi", a.hi},
                       {"list", a.is_list()},
                       {"count", a.count ? dsl::to_string(*a.count) : std::string("1")}});
    }
    ops.push_back({{"name", op->name}, {"indegrees", op->indegrees}, {"attrs", attrs}, {"kernel", op->has_kernel()}});
  }
  return {{"version", 1}, {"ops", ops}};
}

bool attrs_well_formed(const OpSpec& spec, const AttrMap& attrs, size_t indegree) {
  if (!spec.accepts_indegree(static_cast<int>(indegree))) return false;
  size_t seen = 0;
  for (const auto& [name, value] : attrs) {
    if (name == kIndegreeAttr) {
      const auto* v = std::get_if<int64_t>(&value);
      if (!v || *v != static_cast<int64_t>(indegree)) return false;
      continue;
    }
    const int idx = spec.attr_index(name);
    if (idx < 0) return false;
    const AttrSpec& a = spec.attrs[static_cast<size_t>(idx)];
    auto in_range = [&](int64_t v) { return v >= a.lo && v <= a.hi; };
    if (a.is_list()) {
      const auto* list = std::get_if<std::vector<int64_t>>(&value);
      if (!list || !std::all_of(list->begin(), list->end(), in_range)) return false;
    } else {
      const auto* v = std::get_if<int64_t>(&value);
      if (!v || !in_range(*v)) return false;
    }
    ++seen;
  }
  return seen == spec.attrs.size();
}

bool check(const OpSpec& spec, const AttrMap& attrs, ShapeSpan inputs) {
  if (!attrs_well_formed(spec, attrs, inputs.size())) return false;
  for (const auto& in : inputs)
    if (in.lens.empty()) return false;
  return spec.checker(attrs, inputs);
}

bool check_templates(const OpSpec& spec, const AttrMap& attrs, ShapeSpan inputs) {
  if (!attrs_well_formed(spec, attrs, inputs.size())) return false;
  for (const auto& in : inputs)
    if (in.lens.empty()) return false;
  ConcreteEnv env{spec, attrs, inputs};
  for (const auto& a : spec.attrs) {
    if (!a.count) continue;
    auto n = eval(*a.count, env);
    if (!n || *n != static_cast<int64_t>(attr_list(attrs, a.name).size())) return false;
  }
  for (const auto& t : spec.templates(static_cast<int>(inputs.size()))) {
    if (!eval_constraint(t.constraint, env)) return false;
  }
  return true;
}

std::vector<TensorStruct> infer_outputs(const OpSpec& spec, const AttrMap& attrs, ShapeSpan inputs) {
  if (!check(spec, attrs, inputs)) {
    std::string shapes;
    for (const auto& in : inputs) shapes += to_string(in);
    throw PreconditionError(spec.name + ": inputs " + shapes + " violate the operation's constraints");
  }
  return spec.out_fn(attrs, inputs);
}

std::string validate_graph(const Graph& g, const Registry& registry) {
  try {
    topo_order(g);
  } catch (const CycleError& e) {
    return e.what();
  }
  for (const auto& node : g.nodes()) {
    if (const auto* ph = std::get_if<PlaceholderNode>(&node)) {
      if (g.edge(ph->output).shape != ph->shape) return "placeholder " + std::to_string(ph->id) + ": edge shape mismatch";
      if (ph->shape.lens.empty()) return "placeholder " + std::to_string(ph->id) + ": rank 0";
      continue;
    }
    const auto& op = std::get<OpNode>(node);
    const OpSpec* spec = registry.find(op.type);
    const std::string where = "op " + std::to_string(op.id) + " (" + op.type + ")";
    if (!spec) return where + ": not in registry";
    std::vector<TensorStruct> ins;
    for (EdgeId e : op.inputs) ins.push_back(g.edge(e).shape);
    if (!check(*spec, op.attrs, ins)) return where + ": constraints violated";
    const auto outs = spec->out_fn(op.attrs, ins);
    if (outs.size() != op.outputs.size()) return where + ": wrong number of outputs";
    for (size_t i = 0; i < outs.size(); ++i) {
      if (g.edge(op.outputs[i]).shape != outs[i]) return where + ": output " + std::to_string(i) + " shape mismatch";
    }
  }
  return {};
}

}  // namespace graphsmith
