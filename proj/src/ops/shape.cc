#include <algorithm>
#include <set>

#include "common.h"

namespace graphsmith::ops {

using namespace dsl;

namespace {

// Data is unchanged, only the structure differs.
Kernel relabel(OutFn out_fn) {
  return [out_fn](const AttrMap& a, ValueSpan in) {
    std::vector<TensorStruct> shapes{in[0].shape};
    TensorValue out(out_fn(a, shapes)[0], in[0].data);
    return std::vector<TensorValue>{std::move(out)};
  };
}

OpSpec reshape() {
  OpSpec s;
  s.name = "Reshape";
  s.indegrees = {1};
  s.checker = [](const AttrMap&, ShapeSpan) { return true; };
  s.out_fn = [](const AttrMap&, ShapeSpan in) { return one(TensorStruct{in[0].volume()}); };
  s.kernel = relabel(s.out_fn);
  return s;
}

OpSpec flatten() {
  OpSpec s;
  s.name = "Flatten";
  s.indegrees = {1};
  s.attrs = {{"axis", 1, kMaxRank + 1, {}}};
  s.constraints = [](int) { return std::vector<Constraint>{le(attr("axis"), dim(0) + 1)}; };
  s.checker = [](const AttrMap& a, ShapeSpan in) { return attr_int(a, "axis") <= in[0].dim() + 1; };
  s.out_fn = [](const AttrMap& a, ShapeSpan in) {
    const int64_t axis = attr_int(a, "axis");
    int64_t left = 1, right = 1;
    for (int64_t i = 1; i <= in[0].dim(); ++i) (i < axis ? left : right) *= in[0].at(i);
    return one(TensorStruct{left, right});
  };
  s.kernel = relabel(s.out_fn);
  return s;
}

// Removes the leading axis, which must have length 1.
OpSpec squeeze() {
  OpSpec s;
  s.name = "Squeeze";
  s.indegrees = {1};
  s.constraints = [](int) { return std::vector<Constraint>{ge(dim(0), 2), eq(len(0, 1), 1)}; };
  s.checker = [](const AttrMap&, ShapeSpan in) { return in[0].dim() >= 2 && in[0].lens[0] == 1; };
  s.out_fn = [](const AttrMap&, ShapeSpan in) {
    return one(TensorStruct(std::vector<int64_t>(in[0].lens.begin() + 1, in[0].lens.end())));
  };
  s.kernel = relabel(s.out_fn);
  return s;
}

OpSpec unsqueeze() {
  OpSpec s;
  s.name = "Unsqueeze";
  s.indegrees = {1};
  s.attrs = {{"axis", 1, kMaxRank + 1, {}}};
  s.constraints = [](int) { return std::vector<Constraint>{le(dim(0), 5), le(attr("axis"), dim(0) + 1)}; };
  s.checker = [](const AttrMap& a, ShapeSpan in) {
    return in[0].dim() <= 5 && attr_int(a, "axis") <= in[0].dim() + 1;
  };
  s.out_fn = [](const AttrMap& a, ShapeSpan in) {
    TensorStruct out = in[0];
    out.lens.insert(out.lens.begin() + attr_int(a, "axis") - 1, 1);
    return one(out);
  };
  s.kernel = relabel(s.out_fn);
  return s;
}

OpSpec transpose() {
  OpSpec s;
  s.name = "Transpose";
  s.indegrees = {1};
  s.attrs = {{"perm", 1, kMaxRank, dim(0)}};
  s.constraints = [](int) {
    return std::vector<Constraint>{
        forall(1, dim(0), le(attr("perm", bound(1)), dim(0))),
        forall(1, dim(0), forall(2, dim(0), ne(bound(2), bound(1)), ne(attr("perm", bound(1)), attr("perm", bound(2))))),
    };
  };
  s.checker = [](const AttrMap& a, ShapeSpan in) {
    const auto& perm = attr_list(a, "perm");
    if (static_cast<int64_t>(perm.size()) != in[0].dim()) return false;
    std::vector<int64_t> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (size_t i = 0; i < sorted.size(); ++i)
      if (sorted[i] != static_cast<int64_t>(i) + 1) return false;
    return true;
  };
  s.out_fn = [](const AttrMap& a, ShapeSpan in) {
    TensorStruct out;
    for (int64_t p : attr_list(a, "perm")) out.lens.push_back(in[0].at(p));
    return one(out);
  };
  s.kernel = [out_fn = s.out_fn](const AttrMap& a, ValueSpan in) {
    const auto& perm = attr_list(a, "perm");
    const auto src_strides = strides_of(in[0].shape);
    std::vector<TensorStruct> shapes{in[0].shape};
    TensorValue out(out_fn(a, shapes)[0]);
    size_t o = 0;
    for_each_index(out.shape, [&](const std::vector<int64_t>& idx) {
      int64_t off = 0;
      for (size_t i = 0; i < idx.size(); ++i) off += idx[i] * src_strides[static_cast<size_t>(perm[i] - 1)];
      out.data[o++] = in[0].data[static_cast<size_t>(off)];
    });
    return std::vector<TensorValue>{std::move(out)};
  };
  return s;
}

OpSpec concat() {
  OpSpec s;
  s.name = "Concat";
  s.indegrees = {2, 3, 4};
  s.attrs = {{"axis", 1, kMaxRank, {}}};
  s.constraints = [](int indegree) {
    std::vector<Constraint> cs{le(attr("axis"), dim(0))};
    for (int k = 1; k < indegree; ++k) {
      cs.push_back(eq(dim(k), dim(0)));
      cs.push_back(forall(1, dim(0), ne(bound(1), attr("axis")), eq(len(k, bound(1)), len(0, bound(1)))));
    }
    return cs;
  };
  s.checker = [](const AttrMap& a, ShapeSpan in) {
    const int64_t axis = attr_int(a, "axis");
    if (axis > in[0].dim()) return false;
    for (const auto& t : in) {
      if (t.dim() != in[0].dim()) return false;
      for (int64_t i = 1; i <= t.dim(); ++i)
        if (i != axis && t.at(i) != in[0].at(i)) return false;
    }
    return true;
  };
  s.out_fn = [](const AttrMap& a, ShapeSpan in) {
    const size_t ax = static_cast<size_t>(attr_int(a, "axis") - 1);
    TensorStruct out = in[0];
    for (size_t k = 1; k < in.size(); ++k) out.lens[ax] += in[k].lens[ax];
    return one(out);
  };
  s.kernel = [out_fn = s.out_fn](const AttrMap& a, ValueSpan in) {
    const int64_t axis = attr_int(a, "axis");
    std::vector<TensorStruct> shapes;
    for (const auto& t : in) shapes.push_back(t.shape);
    TensorValue out(out_fn(a, shapes)[0]);
    const AxisView ov = axis_view(out.shape, axis);
    int64_t offset = 0;  // along the axis
    for (const auto& t : in) {
      const AxisView v = axis_view(t.shape, axis);
      for (int64_t o = 0; o < v.outer; ++o) {
        const auto src = t.data.begin() + o * v.n * v.inner;
        std::copy(src, src + v.n * v.inner, out.data.begin() + (o * ov.n + offset) * ov.inner);
      }
      offset += v.n;
    }
    return std::vector<TensorValue>{std::move(out)};
  };
  return s;
}

// Near-equal parts; the first (len mod n) parts are one longer.
std::vector<int64_t> split_sizes(int64_t len, int64_t n) {
  std::vector<int64_t> sizes;
  for (int64_t j = 0; j < n; ++j) sizes.push_back(len / n + (j < len % n ? 1 : 0));
  return sizes;
}

OpSpec split() {
  OpSpec s;
  s.name = "Split";
  s.indegrees = {1};
  s.attrs = {{"axis", 1, kMaxRank, {}}, {"num_outputs", 1, 3, {}}};
  s.constraints = [](int) {
    return std::vector<Constraint>{le(attr("axis"), dim(0)), le(attr("num_outputs"), len(0, attr("axis")))};
  };
  s.checker = [](const AttrMap& a, ShapeSpan in) {
    const int64_t axis = attr_int(a, "axis");
    return axis <= in[0].dim() && attr_int(a, "num_outputs") <= in[0].at(axis);
  };
  s.out_fn = [](const AttrMap& a, ShapeSpan in) {
    const int64_t axis = attr_int(a, "axis");
    std::vector<TensorStruct> outs;
    for (int64_t n : split_sizes(in[0].at(axis), attr_int(a, "num_outputs"))) {
      TensorStruct t = in[0];
      t.lens[static_cast<size_t>(axis - 1)] = n;
      outs.push_back(t);
    }
    return outs;
  };
  s.kernel = [out_fn = s.out_fn](const AttrMap& a, ValueSpan in) {
    const int64_t axis = attr_int(a, "axis");
    std::vector<TensorStruct> shapes{in[0].shape};
    const AxisView v = axis_view(in[0].shape, axis);
    std::vector<TensorValue> outs;
    int64_t offset = 0;
    for (auto& shape : out_fn(a, shapes)) {
      TensorValue out(shape);
      const int64_t n = shape.at(axis);
      for (int64_t o = 0; o < v.outer; ++o) {
        const auto src = in[0].data.begin() + (o * v.n + offset) * v.inner;
        std::copy(src, src + n * v.inner, out.data.begin() + o * n * v.inner);
      }
      offset += n;
      outs.push_back(std::move(out));
    }
    return outs;
  };
  return s;
}

// Constant zero padding.
OpSpec pad() {
  OpSpec s;
  s.name = "Pad";
  s.indegrees = {1};
  s.attrs = {{"pads_begin", 0, 2, dim(0)}, {"pads_end", 0, 2, dim(0)}};
  s.checker = [](const AttrMap& a, ShapeSpan in) {
    const auto d = static_cast<size_t>(in[0].dim());
    return attr_list(a, "pads_begin").size() == d && attr_list(a, "pads_end").size() == d;
  };
  s.out_fn = [](const AttrMap& a, ShapeSpan in) {
    TensorStruct out = in[0];
    const auto& pb = attr_list(a, "pads_begin");
    const auto& pe = attr_list(a, "pads_end");
    for (size_t i = 0; i < out.lens.size(); ++i) out.lens[i] += pb[i] + pe[i];
    return one(out);
  };
  s.kernel = [out_fn = s.out_fn](const AttrMap& a, ValueSpan in) {
    const auto& pb = attr_list(a, "pads_begin");
    std::vector<TensorStruct> shapes{in[0].shape};
    TensorValue out(out_fn(a, shapes)[0]);
    const auto ost = strides_of(out.shape);
    size_t i = 0;
    for_each_index(in[0].shape, [&](const std::vector<int64_t>& idx) {
      int64_t off = 0;
      for (size_t k = 0; k < idx.size(); ++k) off += (idx[k] + pb[k]) * ost[k];
      out.data[static_cast<size_t>(off)] = in[0].data[i++];
    });
    return std::vector<TensorValue>{std::move(out)};
  };
  return s;
}

}  // namespace

void register_shape(Registry& r) {
  r.add(reshape());
  r.add(flatten());
  r.add(squeeze());
  r.add(unsqueeze());
  r.add(transpose());
  r.add(concat());
  r.add(split());
  r.add(pad());
}

}  // namespace graphsmith::ops
