#include <algorithm>
#include <cmath>
#include <limits>

#include "common.h"

namespace graphsmith::ops {

using namespace dsl;

namespace {

OpSpec softmax(std::string name, bool log) {
  OpSpec s;
  s.name = std::move(name);
  s.indegrees = {1};
  s.attrs = {{"axis", 1, kMaxRank, {}}};
  s.constraints = [](int) { return std::vector<Constraint>{le(attr("axis"), dim(0))}; };
  s.checker = [](const AttrMap& a, ShapeSpan in) { return attr_int(a, "axis") <= in[0].dim(); };
  s.out_fn = [](const AttrMap&, ShapeSpan in) { return one(in[0]); };
  s.kernel = [log](const AttrMap& a, ValueSpan in) {
    const AxisView v = axis_view(in[0].shape, attr_int(a, "axis"));
    TensorValue out(in[0].shape);
    const auto& x = in[0].data;
    for (int64_t o = 0; o < v.outer; ++o) {
      for (int64_t i = 0; i < v.inner; ++i) {
        auto at = [&](int64_t j) { return static_cast<size_t>((o * v.n + j) * v.inner + i); };
        double m = -std::numeric_limits<double>::infinity();
        for (int64_t j = 0; j < v.n; ++j) m = std::max(m, static_cast<double>(x[at(j)]));
        double sum = 0;
        for (int64_t j = 0; j < v.n; ++j) sum += std::exp(x[at(j)] - m);
        for (int64_t j = 0; j < v.n; ++j) {
          const double e = x[at(j)] - m;
          out.data[at(j)] = static_cast<float>(log ? e - std::log(sum) : std::exp(e) / sum);
        }
      }
    }
    return std::vector<TensorValue>{std::move(out)};
  };
  return s;
}

enum class Red { kSum, kMean, kProd, kL1, kMax, kMin, kL2, kSumSquare };

TensorStruct reduced_shape(const TensorStruct& x, int64_t axis, bool keep) {
  TensorStruct out = x;
  if (keep) out.lens[static_cast<size_t>(axis - 1)] = 1;
  else out.lens.erase(out.lens.begin() + axis - 1);
  return out;
}

OpSpec reduce(std::string name, Red red) {
  OpSpec s;
  s.name = std::move(name);
  s.indegrees = {1};
  s.attrs = {{"axis", 1, kMaxRank, {}}, {"keepdims", 0, 1, {}}};
  // The output keeps at least one dimension.
  s.constraints = [](int) {
    return std::vector<Constraint>{le(attr("axis"), dim(0)), ge(attr("keepdims") + dim(0), 2)};
  };
  s.checker = [](const AttrMap& a, ShapeSpan in) {
    const int64_t d = in[0].dim();
    if (attr_int(a, "axis") > d) return false;
    return d > 1 || attr_int(a, "keepdims") == 1;
  };
  s.out_fn = [](const AttrMap& a, ShapeSpan in) {
    return one(reduced_shape(in[0], attr_int(a, "axis"), attr_int(a, "keepdims") == 1));
  };
  s.kernel = [red](const AttrMap& a, ValueSpan in) {
    const int64_t axis = attr_int(a, "axis");
    const AxisView v = axis_view(in[0].shape, axis);
    TensorValue out(reduced_shape(in[0].shape, axis, attr_int(a, "keepdims") == 1));
    const auto& x = in[0].data;
    for (int64_t o = 0; o < v.outer; ++o) {
      for (int64_t i = 0; i < v.inner; ++i) {
        double acc = 0;
        if (red == Red::kProd) acc = 1;
        if (red == Red::kMax) acc = -std::numeric_limits<double>::infinity();
        if (red == Red::kMin) acc = std::numeric_limits<double>::infinity();
        for (int64_t j = 0; j < v.n; ++j) {
          const double e = x[static_cast<size_t>((o * v.n + j) * v.inner + i)];
          switch (red) {
            case Red::kSum:
            case Red::kMean: acc += e; break;
            case Red::kProd: acc *= e; break;
            case Red::kL1: acc += std::fabs(e); break;
            case Red::kMax: acc = std::isnan(e) || std::isnan(acc) ? NAN : std::max(acc, e); break;
            case Red::kMin: acc = std::isnan(e) || std::isnan(acc) ? NAN : std::min(acc, e); break;
            case Red::kL2:
            case Red::kSumSquare: acc += e * e; break;
          }
        }
        if (red == Red::kMean) acc /= static_cast<double>(v.n);
        if (red == Red::kL2) acc = std::sqrt(acc);
        out.data[static_cast<size_t>(o * v.inner + i)] = static_cast<float>(acc);
      }
    }
    return std::vector<TensorValue>{std::move(out)};
  };
  return s;
}

}  // namespace

void register_reduce(Registry& r) {
  r.add(softmax("Softmax", false));
  r.add(softmax("LogSoftmax", true));
  r.add(reduce("ReduceSum", Red::kSum));
  r.add(reduce("ReduceMean", Red::kMean));
  r.add(reduce("ReduceProd", Red::kProd));
  r.add(reduce("ReduceL1", Red::kL1));
  r.add(reduce("ReduceMax", Red::kMax));
  r.add(reduce("ReduceMin", Red::kMin));
  r.add(reduce("ReduceL2", Red::kL2));
  r.add(reduce("ReduceSumSquare", Red::kSumSquare));
}

}  // namespace graphsmith::ops
