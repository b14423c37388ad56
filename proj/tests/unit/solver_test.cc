#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "graphsmith/errors.h"
#include "graphsmith/solver.h"
#include "../support/enumerate.h"

namespace graphsmith {
namespace {

const Registry& reg() { return builtin_registry(); }

VarRef dimv(int k) { return {VarKind::kDim, k, 0, 1}; }
VarRef lenv(int k, int64_t i) { return {VarKind::kLen, k, 0, i}; }
VarRef attrv(const OpSpec& s, const std::string& name, int64_t pos = 1) {
  return {VarKind::kAttr, 0, s.attr_index(name), pos};
}

TEST(Domain, RestrictExcludeNth) {
  Domain d(1, 5);
  d.exclude(2);
  EXPECT_EQ(d.size(), 4);
  EXPECT_FALSE(d.contains(2));
  EXPECT_EQ(d.nth(0), 1);
  EXPECT_EQ(d.nth(1), 3);
  EXPECT_EQ(d.nth(3), 5);
  d.exclude(1);
  d.restrict(1, 4);
  EXPECT_EQ(d.lo(), 3);
  EXPECT_EQ(d.size(), 2);
  d.fix(3);
  EXPECT_EQ(d.size(), 1);
  d.restrict(4, 4);
  EXPECT_TRUE(d.empty());
}

TEST(Order, ConcatGroups) {
  const auto groups = instantiation_order(reg().get("Concat"), 2);
  ASSERT_EQ(groups.size(), 4u);
  EXPECT_EQ(groups[0].kind, OrderGroup::Kind::kIndegree);
  EXPECT_EQ(groups[1].kind, OrderGroup::Kind::kTensor);
  EXPECT_EQ(groups[1].input, 0);
  EXPECT_EQ(groups[2].kind, OrderGroup::Kind::kAttrs);
  EXPECT_EQ(groups[2].attrs, (std::vector<std::string>{"axis"}));
  EXPECT_EQ(groups[3].input, 1);
}

TEST(Order, UnaryHasEmptyAttrGroup) {
  const auto groups = instantiation_order(reg().get("Relu"), 1);
  ASSERT_EQ(groups.size(), 3u);
  EXPECT_EQ(groups[2].kind, OrderGroup::Kind::kAttrs);
  EXPECT_TRUE(groups[2].attrs.empty());
}

TEST(Order, AttributesAlwaysThirdGroup) {
  for (const auto& op : reg().ops()) {
    for (int k : op->indegrees) {
      const auto groups = instantiation_order(*op, k);
      ASSERT_EQ(groups.size(), static_cast<size_t>(k) + 2) << op->name;
      EXPECT_EQ(groups[2].kind, OrderGroup::Kind::kAttrs) << op->name;
      EXPECT_EQ(groups[2].attrs.size(), op->attrs.size()) << op->name;
    }
  }
}

TEST(Eliminate, ConcatSkipsAxis) {
  const OpSpec& concat = reg().get("Concat");
  InstantiationState st(concat, 2);
  st.assign(dimv(0), 3);
  st.assign(lenv(0, 1), 2);
  st.assign(lenv(0, 2), 5);
  st.assign(lenv(0, 3), 4);
  st.assign(attrv(concat, "axis"), 2);
  st.assign(dimv(1), 3);
  EXPECT_EQ(st.domain(lenv(1, 1)), Domain(2, 2));
  EXPECT_EQ(st.domain(lenv(1, 3)), Domain(4, 4));
  EXPECT_GT(st.domain(lenv(1, 2)).size(), 5);  // the axis length stays free
  EXPECT_EQ(st.pending_templates(), 0u);
}

TEST(Eliminate, SingleUnrolling) {
  InstantiationState st(reg().get("Add"), 2);
  st.assign(dimv(0), 1);
  st.assign(lenv(0, 1), 4);
  st.assign(dimv(1), 1);
  EXPECT_EQ(st.domain(lenv(1, 1)), Domain(4, 4));
}

TEST(Eliminate, PendingUntilRankKnown) {
  InstantiationState st(reg().get("Add"), 2);
  const size_t before = st.pending_templates();
  EXPECT_GT(before, 0u);
  const size_t ground_before = st.ground().size();
  st.assign(dimv(0), 2);
  EXPECT_GT(st.ground().size(), ground_before);  // dim(1) = dim(0) is ground now
  EXPECT_EQ(st.domain(dimv(1)), Domain(2, 2));
}

TEST(Eliminate, ForcedTooEarlyRaises) {
  InstantiationState st(reg().get("Add"), 2);
  EXPECT_THROW(st.eliminate(INT64_MAX), OrderViolation);
}

TEST(Propagate, NoSingleUnknownLeavesDomains) {
  InstantiationState st(reg().get("Add"), 2);
  const Domain before = st.domain(dimv(1));
  st.propagate();
  EXPECT_EQ(st.domain(dimv(1)), before);
}

TEST(Propagate, GemmCollapsesInnerDimension) {
  const OpSpec& gemm = reg().get("Gemm");
  InstantiationState st(gemm, 2);
  st.assign(dimv(0), 2);
  st.assign(lenv(0, 1), 4);
  st.assign(lenv(0, 2), 7);
  st.assign(attrv(gemm, "transA"), 0);
  st.assign(attrv(gemm, "transB"), 0);
  EXPECT_EQ(st.domain(dimv(1)), Domain(2, 2));
  st.assign(dimv(1), 2);
  EXPECT_EQ(st.domain(lenv(1, 1)), Domain(7, 7));

  // Brute force: exactly the rank-2 shapes with 7 rows are accepted.
  const AttrMap attrs{{kIndegreeAttr, int64_t{2}}, {"transA", int64_t{0}}, {"transB", int64_t{0}}};
  for (const auto& b : testing::all_shapes(1, 2, 8)) {
    const std::vector<TensorStruct> ins{{4, 7}, b};
    EXPECT_EQ(check(gemm, attrs, ins), b.dim() == 2 && b.at(1) == 7) << to_string(b);
  }
}

TEST(Propagate, AssignOutsideDomainRaises) {
  InstantiationState st(reg().get("Add"), 2);
  st.assign(dimv(0), 2);
  EXPECT_THROW(st.assign(dimv(1), 3), EmptyDomain);
}

TEST(SampleAssign, SingletonDomain) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    InstantiationState st(reg().get("Add"), 2);
    st.assign(dimv(0), 3);
    EXPECT_EQ(sample_assign(st, dimv(1), rng, {}), 3);
  }
}

TEST(SampleAssign, UniformOverOneToFive) {
  Rng rng(2);
  std::map<int64_t, int> counts;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    InstantiationState st(reg().get("Relu"), 1);
    ++counts[sample_assign(st, dimv(0), rng, {5, 5})];
  }
  ASSERT_EQ(counts.size(), 5u);
  double chi2 = 0;
  for (const auto& [v, c] : counts) {
    EXPECT_GE(v, 1);
    EXPECT_LE(v, 5);
    chi2 += std::pow(c - n / 5.0, 2) / (n / 5.0);
  }
  EXPECT_LT(chi2, 18.467);  // chi-square, 4 degrees of freedom, p = 0.001
}

TEST(SampleAssign, ExcludedPointNeverDrawn) {
  const OpSpec& tr = reg().get("Transpose");
  InstantiationState base(tr, 1);
  base.assign(dimv(0), 5);
  for (int64_t i = 1; i <= 5; ++i) base.assign(lenv(0, i), 1);
  base.assign(attrv(tr, "perm", 1), 2);
  const Domain& d = base.domain(attrv(tr, "perm", 2));
  EXPECT_EQ(d.lo(), 1);
  EXPECT_EQ(d.hi(), 5);
  EXPECT_FALSE(d.contains(2));
  Rng rng(3);
  std::set<int64_t> seen;
  for (int i = 0; i < 10000; ++i) {
    InstantiationState st = base;
    seen.insert(sample_assign(st, attrv(tr, "perm", 2), rng, {}));
  }
  EXPECT_EQ(seen, (std::set<int64_t>{1, 3, 4, 5}));
}

TEST(SolveOp, ConcatReusesFirstInput) {
  const OpSpec& concat = reg().get("Concat");
  const std::vector<PoolEntry> pool{{7, {2, 3}}};
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    const OpSolution sol = solve_op(concat, 2, pool, 1.0, rng);
    ASSERT_EQ(sol.inputs[0], InputChoice(Reuse{7}));
    EXPECT_EQ(sol.input_shapes[0], TensorStruct({2, 3}));
    const auto& y = sol.input_shapes[1];
    ASSERT_EQ(y.dim(), 2);
    if (attr_int(sol.attrs, "axis") == 1) EXPECT_EQ(y.at(2), 3);
    if (attr_int(sol.attrs, "axis") == 2) EXPECT_EQ(y.at(1), 2);
    EXPECT_TRUE(check(concat, sol.attrs, sol.input_shapes));
  }
}

TEST(SolveOp, PickingRateZeroIsAlwaysFresh) {
  const std::vector<PoolEntry> pool{{0, {2, 3}}, {1, {3}}};
  Rng rng(5);
  for (const auto& op : reg().ops()) {
    for (int k : op->indegrees) {
      const OpSolution sol = solve_op(*op, k, pool, 0.0, rng);
      for (const auto& in : sol.inputs) EXPECT_TRUE(std::holds_alternative<Fresh>(in)) << op->name;
    }
  }
}

TEST(SolveOp, AddAfterReuseIsExact) {
  const std::vector<PoolEntry> pool{{0, {2, 3}}};
  Rng rng(6);
  SolveStats stats;
  for (int i = 0; i < 10000; ++i) {
    const OpSolution sol = solve_op(reg().get("Add"), 2, pool, 1.0, rng, {2, 3}, &stats);
    EXPECT_EQ(sol.input_shapes[0], TensorStruct({2, 3}));
    EXPECT_EQ(sol.input_shapes[1], TensorStruct({2, 3}));
  }
  EXPECT_EQ(stats.backtracks, 0u);
  EXPECT_EQ(stats.reused_inputs, 20000u);
}

TEST(SolveOp, SoundForEveryOp) {
  Rng rng(7);
  SolveStats stats;
  for (const auto& op : reg().ops()) {
    std::vector<PoolEntry> pool;
    for (int t = 0; t < 2000; ++t) {
      const int k = op->indegrees[rng.index(op->indegrees.size())];
      const OpSolution sol = solve_op(*op, k, pool, 0.9, rng, {}, &stats);
      ASSERT_TRUE(check(*op, sol.attrs, sol.input_shapes)) << op->name;
      ASSERT_TRUE(check_templates(*op, sol.attrs, sol.input_shapes)) << op->name;
      for (const auto& s : infer_outputs(*op, sol.attrs, sol.input_shapes)) {
        if (pool.size() < 64) pool.push_back({static_cast<EdgeId>(pool.size()), s});
      }
    }
  }
  EXPECT_EQ(stats.backtracks, 0u);
  EXPECT_GT(stats.reused_inputs, 0u);
}

// Distinct solver outputs versus every checker-satisfying point.
void expect_complete(const std::string& name, int indegree, int seeds) {
  const OpSpec& op = reg().get(name);
  std::set<std::string> expected;
  testing::EnumBounds b;
  testing::enumerate_points(op, indegree, b, [&](const AttrMap& attrs, const std::vector<TensorStruct>& ins) {
    if (check(op, attrs, ins)) expected.insert(testing::point_key(attrs, ins));
  });
  std::set<std::string> seen;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(static_cast<uint64_t>(s));
    const OpSolution sol = solve_op(op, indegree, {}, 0.97, rng, {2, 3});
    seen.insert(testing::point_key(sol.attrs, sol.input_shapes));
  }
  EXPECT_EQ(seen, expected) << name << " indegree " << indegree << ": " << seen.size() << " vs " << expected.size();
}

TEST(Completeness, SmallInstances) {
  expect_complete("Add", 2, 20000);
  expect_complete("Concat", 2, 20000);
  expect_complete("MatMul", 2, 20000);
  expect_complete("Gemm", 2, 20000);
  expect_complete("Gemm", 3, 20000);
  expect_complete("Softmax", 1, 20000);
}

}  // namespace
}  // namespace graphsmith
