#include "graphsmith/solver.h"

#include <algorithm>
#include <limits>

#include "graphsmith/errors.h"

namespace graphsmith {

using dsl::Constraint;
using dsl::Expr;
using dsl::ForAll;
using dsl::Rel;
using dsl::RelOp;
using dsl::SymKind;

namespace {

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int64_t ceil_div(int64_t a, int64_t b) { return -floor_div(-a, b); }

constexpr int64_t kNoForce = -1;

}  // namespace

// ---------------------------------------------------------------------------
// Domain

bool Domain::contains(int64_t v) const {
  return v >= lo_ && v <= hi_ && !std::binary_search(excluded_.begin(), excluded_.end(), v);
}

int64_t Domain::size() const {
  if (lo_ > hi_) return 0;
  return hi_ - lo_ + 1 - static_cast<int64_t>(excluded_.size());
}

void Domain::restrict(int64_t lo, int64_t hi) {
  lo_ = std::max(lo_, lo);
  hi_ = std::min(hi_, hi);
  std::erase_if(excluded_, [&](int64_t v) { return v < lo_ || v > hi_; });
  // Tighten bounds past excluded endpoints.
  while (lo_ <= hi_ && !excluded_.empty() && excluded_.front() == lo_) {
    excluded_.erase(excluded_.begin());
    ++lo_;
  }
  while (lo_ <= hi_ && !excluded_.empty() && excluded_.back() == hi_) {
    excluded_.pop_back();
    --hi_;
  }
}

void Domain::exclude(int64_t v) {
  if (v < lo_ || v > hi_) return;
  auto it = std::lower_bound(excluded_.begin(), excluded_.end(), v);
  if (it != excluded_.end() && *it == v) return;
  excluded_.insert(it, v);
  restrict(lo_, hi_);
}

int64_t Domain::nth(int64_t k) const {
  int64_t v = lo_ + k;
  for (int64_t x : excluded_) {
    if (x <= v) ++v;
    else break;
  }
  return v;
}

Domain Domain::intersect(int64_t lo, int64_t hi) const {
  Domain d = *this;
  d.restrict(lo, hi);
  return d;
}

std::string to_string(const VarRef& v, const OpSpec& spec) {
  switch (v.kind) {
    case VarKind::kDim: return "dim(" + std::to_string(v.input) + ")";
    case VarKind::kLen: return "len(" + std::to_string(v.input) + "," + std::to_string(v.index) + ")";
    case VarKind::kAttr: {
      const auto& a = spec.attrs[static_cast<size_t>(v.attr)];
      return a.is_list() ? a.name + "[" + std::to_string(v.index) + "]" : a.name;
    }
  }
  return "?";
}

SolveStats& SolveStats::operator+=(const SolveStats& o) {
  solves += o.solves;
  reused_inputs += o.reused_inputs;
  fresh_inputs += o.fresh_inputs;
  candidates_checked += o.candidates_checked;
  ground_constraints += o.ground_constraints;
  backtracks += o.backtracks;
  return *this;
}

std::vector<OrderGroup> instantiation_order(const OpSpec& spec, int indegree) {
  std::vector<OrderGroup> groups;
  groups.push_back({OrderGroup::Kind::kIndegree, -1, {}});
  groups.push_back({OrderGroup::Kind::kTensor, 0, {}});
  OrderGroup attrs{OrderGroup::Kind::kAttrs, -1, {}};
  for (const auto& a : spec.attrs) attrs.attrs.push_back(a.name);
  groups.push_back(std::move(attrs));
  for (int k = 1; k < indegree; ++k) groups.push_back({OrderGroup::Kind::kTensor, k, {}});
  return groups;
}

// ---------------------------------------------------------------------------
// InstantiationState

InstantiationState::InstantiationState(const OpSpec& spec, int indegree)
    : spec_(&spec), indegree_(indegree) {
  if (!spec.accepts_indegree(indegree)) {
    throw PreconditionError(spec.name + ": indegree " + std::to_string(indegree) + " not in domain");
  }
  len_base_ = indegree;
  attr_base_ = len_base_ + indegree * static_cast<int>(kMaxRank);
  const size_t n = static_cast<size_t>(attr_base_) + spec.attrs.size() * static_cast<size_t>(kMaxRank);
  domains_.resize(n);
  values_.assign(n, 0);
  assigned_.assign(n, 0);
  for (int k = 0; k < indegree; ++k) domains_[static_cast<size_t>(k)] = Domain(1, kMaxRank);
  for (size_t a = 0; a < spec.attrs.size(); ++a) {
    for (int64_t j = 0; j < kMaxRank; ++j) {
      domains_[static_cast<size_t>(attr_base_) + a * kMaxRank + static_cast<size_t>(j)] =
          Domain(spec.attrs[a].lo, spec.attrs[a].hi);
    }
  }
  const auto& ts = spec.templates(indegree);
  for (size_t i = 0; i < ts.size(); ++i) pending_.push_back(static_cast<int>(i));
  eliminate();
  propagate();
}

int InstantiationState::slot(const VarRef& v) const {
  switch (v.kind) {
    case VarKind::kDim: return v.input;
    case VarKind::kLen: return len_base_ + v.input * static_cast<int>(kMaxRank) + static_cast<int>(v.index - 1);
    case VarKind::kAttr: return attr_base_ + v.attr * static_cast<int>(kMaxRank) + static_cast<int>(v.index - 1);
  }
  return -1;
}

VarRef InstantiationState::var_at(int s) const {
  if (s < len_base_) return VarRef{VarKind::kDim, s, 0, 1};
  if (s < attr_base_) {
    const int off = s - len_base_;
    return VarRef{VarKind::kLen, off / static_cast<int>(kMaxRank), 0, off % kMaxRank + 1};
  }
  const int off = s - attr_base_;
  return VarRef{VarKind::kAttr, 0, off / static_cast<int>(kMaxRank), off % kMaxRank + 1};
}

int64_t InstantiationState::value(const VarRef& v) const {
  const int s = slot(v);
  if (!assigned_[static_cast<size_t>(s)]) throw PreconditionError("variable " + to_string(v, *spec_) + " not assigned");
  return values_[static_cast<size_t>(s)];
}

void InstantiationState::fail(const std::string& why) const {
  throw EmptyDomain(spec_->name + " (indegree " + std::to_string(indegree_) + "): " + why);
}

std::optional<int64_t> InstantiationState::structural_value(const Expr& e, const int64_t* bound) const {
  int64_t v = e.constant;
  for (const auto& t : e.terms) {
    const auto& s = t.sym;
    int sl = -1;
    switch (s.kind) {
      case SymKind::kBound: v += t.coef * bound[s.level]; continue;
      case SymKind::kDim: sl = s.input; break;
      case SymKind::kAttr: {
        int64_t pos = 1;
        if (s.index) {
          auto p = structural_value(*s.index, bound);
          if (!p) return std::nullopt;
          pos = *p;
          if (!assigned_[0]) return std::nullopt;
          if (pos < 1 || pos > list_count(s.attr_index)) return std::nullopt;
        }
        sl = attr_base_ + s.attr_index * static_cast<int>(kMaxRank) + static_cast<int>(pos - 1);
        break;
      }
      case SymKind::kLen: return std::nullopt;  // rejected at registration
    }
    if (!assigned_[static_cast<size_t>(sl)]) return std::nullopt;
    v += t.coef * values_[static_cast<size_t>(sl)];
  }
  return v;
}

int64_t InstantiationState::list_count(int attr) const {
  const auto& a = spec_->attrs[static_cast<size_t>(attr)];
  if (!a.count) return 1;
  int64_t dummy[1] = {0};
  auto n = structural_value(*a.count, dummy);
  if (!n) throw OrderViolation(spec_->name + ": length of '" + a.name + "' needed before dim(0) is assigned");
  return *n;
}

bool InstantiationState::lower(const Rel& r, const int64_t* bound, std::vector<GroundRel>& out) const {
  GroundRel g;
  g.op = r.op;
  std::vector<GroundRel> implied;
  bool contradiction = false;
  auto add_side = [&](const Expr& e, int64_t sign) -> bool {
    g.constant += sign * e.constant;
    for (const auto& t : e.terms) {
      const auto& s = t.sym;
      const int64_t c = sign * t.coef;
      switch (s.kind) {
        case SymKind::kBound: g.constant += c * bound[s.level]; break;
        case SymKind::kDim: g.terms.emplace_back(c, s.input); break;
        case SymKind::kLen: {
          auto i = structural_value(*s.index, bound);
          if (!i) return false;
          if (*i < 1 || *i > kMaxRank) {
            contradiction = true;
            break;
          }
          g.terms.emplace_back(c, slot(VarRef{VarKind::kLen, s.input, 0, *i}));
          // The index must exist: dim(input) >= i.
          implied.push_back(GroundRel{{{1, s.input}}, -*i, RelOp::kGe});
          break;
        }
        case SymKind::kAttr: {
          int64_t pos = 1;
          if (s.index) {
            auto p = structural_value(*s.index, bound);
            if (!p || !assigned_[0]) return false;
            pos = *p;
            if (pos < 1 || pos > list_count(s.attr_index)) {
              contradiction = true;
              break;
            }
          }
          g.terms.emplace_back(c, slot(VarRef{VarKind::kAttr, 0, s.attr_index, pos}));
          break;
        }
      }
    }
    return true;
  };
  if (!add_side(r.lhs, 1) || !add_side(r.rhs, -1)) return false;
  if (contradiction) {
    out.push_back(GroundRel{{}, 1, RelOp::kEq});
    return true;
  }
  std::sort(g.terms.begin(), g.terms.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<std::pair<int64_t, int>> merged;
  for (const auto& t : g.terms) {
    if (!merged.empty() && merged.back().second == t.second) merged.back().first += t.first;
    else merged.push_back(t);
  }
  std::erase_if(merged, [](const auto& t) { return t.first == 0; });
  g.terms = std::move(merged);
  out.push_back(std::move(g));
  for (auto& i : implied) out.push_back(std::move(i));
  return true;
}

bool InstantiationState::unroll(const Constraint& c, int64_t* bound, std::vector<GroundRel>& out) const {
  if (const auto* r = std::get_if<Rel>(&c.node)) return lower(*r, bound, out);
  const auto& fa = std::get<ForAll>(c.node);
  auto upper = structural_value(fa.upper, bound);
  if (!upper) return false;
  for (int64_t i = 1; i <= *upper; ++i) {
    bound[fa.level] = i;
    if (fa.guard) {
      auto a = structural_value(fa.guard->lhs, bound);
      auto b = structural_value(fa.guard->rhs, bound);
      if (!a || !b) return false;
      if (!dsl::holds(fa.guard->op, *a, *b)) continue;
    }
    if (!unroll(*fa.body, bound, out)) return false;
  }
  return true;
}

void InstantiationState::eliminate(int64_t force_upto) {
  const auto& ts = spec_->templates(indegree_);
  std::vector<int> still;
  std::vector<GroundRel> tmp;
  for (int idx : pending_) {
    tmp.clear();
    int64_t bound[8] = {};
    const Template& t = ts[static_cast<size_t>(idx)];
    if (unroll(t.constraint, bound, tmp)) {
      for (auto& g : tmp) ground_.push_back(std::move(g));
    } else if (force_upto != kNoForce && t.elim_pos <= force_upto) {
      throw OrderViolation(spec_->name + ": template not ground when required: " + dsl::to_string(t.constraint));
    } else {
      still.push_back(idx);
    }
  }
  pending_ = std::move(still);
}

void InstantiationState::narrow(const GroundRel& g) {
  int unknown = -1;
  int64_t coef = 0;
  int64_t sum = g.constant;
  for (const auto& [c, s] : g.terms) {
    if (assigned_[static_cast<size_t>(s)]) {
      sum += c * values_[static_cast<size_t>(s)];
    } else if (unknown < 0) {
      unknown = s;
      coef = c;
    } else {
      return;  // two or more unassigned: deferred
    }
  }
  auto describe = [&] {
    std::string s;
    for (const auto& [c, sl] : g.terms) s += (s.empty() ? "" : " + ") + std::to_string(c) + "*" + to_string(var_at(sl), *spec_);
    return s + " + " + std::to_string(g.constant) + (g.op == RelOp::kEq ? " = 0" : g.op == RelOp::kLe ? " <= 0" : g.op == RelOp::kGe ? " >= 0" : " != 0");
  };
  if (unknown < 0) {
    if (!dsl::holds(g.op, sum, 0)) fail("violated ground constraint " + describe());
    return;
  }
  Domain& d = domains_[static_cast<size_t>(unknown)];
  const int64_t rhs = -sum;  // coef * v (op) rhs
  switch (g.op) {
    case RelOp::kEq:
      if (rhs % coef != 0) fail("no integer solution for " + describe());
      d.fix(rhs / coef);
      break;
    case RelOp::kLe:
      if (coef > 0) d.restrict(std::numeric_limits<int64_t>::min(), floor_div(rhs, coef));
      else d.restrict(ceil_div(rhs, coef), std::numeric_limits<int64_t>::max());
      break;
    case RelOp::kGe:
      if (coef > 0) d.restrict(ceil_div(rhs, coef), std::numeric_limits<int64_t>::max());
      else d.restrict(std::numeric_limits<int64_t>::min(), floor_div(rhs, coef));
      break;
    case RelOp::kNe:
      if (rhs % coef == 0) d.exclude(rhs / coef);
      break;
  }
  if (d.empty()) fail("domain of " + to_string(var_at(unknown), *spec_) + " emptied by " + describe());
}

void InstantiationState::propagate() {
  // Only assignments make a relation single-unknown, so one pass reaches the
  // fixpoint.
  for (const auto& g : ground_) narrow(g);
}

void InstantiationState::assign(const VarRef& v, int64_t value) {
  const size_t s = static_cast<size_t>(slot(v));
  if (assigned_[s]) throw PreconditionError("variable " + to_string(v, *spec_) + " assigned twice");
  if (!domains_[s].contains(value)) {
    fail("value " + std::to_string(value) + " outside the domain of " + to_string(v, *spec_));
  }
  values_[s] = value;
  assigned_[s] = 1;
  domains_[s].fix(value);
  eliminate();
  propagate();
}

bool InstantiationState::accepts_lengths(int input, std::span<const int64_t> lens) const {
  const int64_t d = value(VarRef{VarKind::kDim, input, 0, 1});
  if (static_cast<int64_t>(lens.size()) != d) return false;
  const int first = slot(VarRef{VarKind::kLen, input, 0, 1});
  const int last = first + static_cast<int>(d);
  for (int64_t i = 0; i < d; ++i) {
    if (!domains_[static_cast<size_t>(first + i)].contains(lens[static_cast<size_t>(i)])) return false;
  }
  for (const auto& g : ground_) {
    int64_t sum = g.constant;
    bool local = true;
    bool touches = false;
    for (const auto& [c, s] : g.terms) {
      if (assigned_[static_cast<size_t>(s)]) {
        sum += c * values_[static_cast<size_t>(s)];
      } else if (s >= first && s < last) {
        sum += c * lens[static_cast<size_t>(s - first)];
        touches = true;
      } else {
        local = false;
        break;
      }
    }
    if (local && touches && !dsl::holds(g.op, sum, 0)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

int64_t sample_assign(InstantiationState& state, const VarRef& v, Rng& rng, const SolverLimits& limits) {
  const Domain& dom = state.domain(v);
  Domain pick = dom;
  if (v.kind == VarKind::kDim) pick = dom.intersect(1, limits.max_dim);
  if (v.kind == VarKind::kLen) pick = dom.intersect(1, limits.max_len);
  int64_t value;
  if (pick.empty()) {
    // Forced outside the generation bounds by an earlier (reused) tensor.
    value = dom.nth(0);
  } else {
    if (!pick.finite()) throw EmptyDomain(state.spec().name + ": unbounded domain for " + to_string(v, state.spec()));
    value = pick.nth(rng.uniform(0, pick.size() - 1));
  }
  state.assign(v, value);
  return value;
}

OpSolution solve_op(const OpSpec& spec, int indegree, std::span<const PoolEntry> pool, double picking_rate, Rng& rng,
                    const SolverLimits& limits, SolveStats* stats) {
  SolveStats local;
  InstantiationState state(spec, indegree);
  OpSolution sol;
  sol.inputs.resize(static_cast<size_t>(indegree));
  sol.input_shapes.resize(static_cast<size_t>(indegree));

  std::vector<std::vector<size_t>> by_dim(static_cast<size_t>(kMaxRank) + 1);
  if (picking_rate > 0) {
    for (size_t i = 0; i < pool.size(); ++i) {
      const int64_t d = pool[i].shape.dim();
      if (d >= 1 && d <= kMaxRank) by_dim[static_cast<size_t>(d)].push_back(i);
    }
  }

  for (const auto& group : instantiation_order(spec, indegree)) {
    if (group.kind == OrderGroup::Kind::kIndegree) continue;

    if (group.kind == OrderGroup::Kind::kAttrs) {
      for (size_t a = 0; a < spec.attrs.size(); ++a) {
        state.eliminate(2000 + static_cast<int64_t>(a));
        const int64_t n = state.list_count(static_cast<int>(a));
        std::vector<int64_t> values;
        for (int64_t j = 1; j <= n; ++j) {
          values.push_back(sample_assign(state, VarRef{VarKind::kAttr, 0, static_cast<int>(a), j}, rng, limits));
        }
        if (spec.attrs[a].is_list()) sol.attrs[spec.attrs[a].name] = std::move(values);
        else sol.attrs[spec.attrs[a].name] = values.at(0);
      }
      continue;
    }

    const int k = group.input;
    const int64_t dim_pos = tensor_group(k) * 1000;
    const VarRef dim_var{VarKind::kDim, k, 0, 1};
    state.eliminate(dim_pos);

    const bool try_reuse = rng.bernoulli(picking_rate);
    if (try_reuse && !pool.empty()) {
      std::vector<size_t> matches;
      for (int64_t d = 1; d <= kMaxRank; ++d) {
        const auto& cands = by_dim[static_cast<size_t>(d)];
        if (cands.empty() || !state.domain(dim_var).contains(d)) continue;
        InstantiationState scratch = state;
        try {
          scratch.assign(dim_var, d);
          scratch.eliminate(dim_pos + 1);
        } catch (const EmptyDomain&) {
          continue;
        }
        for (size_t idx : cands) {
          ++local.candidates_checked;
          if (scratch.accepts_lengths(k, pool[idx].shape.lens)) matches.push_back(idx);
        }
      }
      if (!matches.empty()) {
        std::sort(matches.begin(), matches.end());
        const PoolEntry& chosen = pool[matches[rng.index(matches.size())]];
        try {
          state.assign(dim_var, chosen.shape.dim());
          state.eliminate(dim_pos + 1);
          for (int64_t i = 1; i <= chosen.shape.dim(); ++i) {
            state.assign(VarRef{VarKind::kLen, k, 0, i}, chosen.shape.at(i));
          }
        } catch (const EmptyDomain&) {
          ++local.backtracks;
          if (stats) *stats += local;
          throw;
        }
        sol.inputs[static_cast<size_t>(k)] = Reuse{chosen.edge};
        sol.input_shapes[static_cast<size_t>(k)] = chosen.shape;
        ++local.reused_inputs;
        continue;
      }
    }

    const int64_t d = sample_assign(state, dim_var, rng, limits);
    state.eliminate(dim_pos + 1);
    TensorStruct shape;
    for (int64_t i = 1; i <= d; ++i) shape.lens.push_back(sample_assign(state, VarRef{VarKind::kLen, k, 0, i}, rng, limits));
    sol.inputs[static_cast<size_t>(k)] = Fresh{shape};
    sol.input_shapes[static_cast<size_t>(k)] = std::move(shape);
    ++local.fresh_inputs;
  }

  state.eliminate(std::numeric_limits<int64_t>::max());
  sol.attrs[kIndegreeAttr] = static_cast<int64_t>(indegree);
  ++local.solves;
  local.ground_constraints += state.ground().size();
  if (stats) *stats += local;
  return sol;
}

}  // namespace graphsmith
