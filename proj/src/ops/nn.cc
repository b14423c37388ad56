#include <algorithm>
#include <cmath>
#include <limits>

#include "common.h"

namespace graphsmith::ops {

using namespace dsl;

namespace {

int64_t floor_div(int64_t a, int64_t b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

// ---------------------------------------------------------------------------
// MatMul: equal ranks >= 2, equal batch dims, a[d] == b[d-1].

TensorStruct matmul_shape(const TensorStruct& a, const TensorStruct& b) {
  TensorStruct out = a;
  out.lens.back() = b.lens.back();
  return out;
}

OpSpec matmul() {
  OpSpec s;
  s.name = "MatMul";
  s.indegrees = {2};
  s.constraints = [](int) {
    return std::vector<Constraint>{
        ge(dim(0), 2),
        eq(dim(1), dim(0)),
        forall(1, dim(0) - 2, eq(len(1, bound(1)), len(0, bound(1)))),
        eq(len(1, dim(1) - 1), len(0, dim(0))),
    };
  };
  s.checker = [](const AttrMap&, ShapeSpan in) {
    const auto& a = in[0].lens;
    const auto& b = in[1].lens;
    if (a.size() < 2 || a.size() != b.size()) return false;
    const size_t d = a.size();
    for (size_t i = 0; i + 2 < d; ++i)
      if (a[i] != b[i]) return false;
    return a[d - 1] == b[d - 2];
  };
  s.out_fn = [](const AttrMap&, ShapeSpan in) { return one(matmul_shape(in[0], in[1])); };
  s.kernel = [](const AttrMap&, ValueSpan in) {
    const auto& a = in[0];
    const auto& b = in[1];
    TensorValue out(matmul_shape(a.shape, b.shape));
    const int64_t d = a.shape.dim();
    const int64_t m = a.shape.at(d - 1), k = a.shape.at(d), n = b.shape.at(d);
    const int64_t batch = a.shape.volume() / (m * k);
    for (int64_t bt = 0; bt < batch; ++bt) {
      const float* pa = a.data.data() + bt * m * k;
      const float* pb = b.data.data() + bt * k * n;
      float* po = out.data.data() + bt * m * n;
      for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) {
          double acc = 0;
          for (int64_t t = 0; t < k; ++t) acc += static_cast<double>(pa[i * k + t]) * pb[t * n + j];
          po[i * n + j] = static_cast<float>(acc);
        }
      }
    }
    return std::vector<TensorValue>{std::move(out)};
  };
  return s;
}

// ---------------------------------------------------------------------------
// Gemm: Y = op(A) op(B) (+ C), op transposes when the flag is set. C must be
// exactly [M, N].

OpSpec gemm() {
  OpSpec s;
  s.name = "Gemm";
  s.indegrees = {2, 3};
  s.attrs = {{"transA", 0, 1, {}}, {"transB", 0, 1, {}}};
  s.constraints = [](int indegree) {
    std::vector<Constraint> cs{
        eq(dim(0), 2),
        eq(dim(1), 2),
        eq(len(1, 1 + attr("transB")), len(0, 2 - attr("transA"))),
    };
    if (indegree == 3) {
      cs.push_back(eq(dim(2), 2));
      cs.push_back(eq(len(2, 1), len(0, 1 + attr("transA"))));
      cs.push_back(eq(len(2, 2), len(1, 2 - attr("transB"))));
    }
    return cs;
  };
  s.checker = [](const AttrMap& at, ShapeSpan in) {
    if (in[0].dim() != 2 || in[1].dim() != 2) return false;
    const bool ta = attr_int(at, "transA") == 1, tb = attr_int(at, "transB") == 1;
    const int64_t m = ta ? in[0].lens[1] : in[0].lens[0];
    const int64_t ka = ta ? in[0].lens[0] : in[0].lens[1];
    const int64_t kb = tb ? in[1].lens[1] : in[1].lens[0];
    const int64_t n = tb ? in[1].lens[0] : in[1].lens[1];
    if (ka != kb) return false;
    if (in.size() == 3) return in[2].lens == std::vector<int64_t>{m, n};
    return true;
  };
  s.out_fn = [](const AttrMap& at, ShapeSpan in) {
    const int64_t m = attr_int(at, "transA") ? in[0].lens[1] : in[0].lens[0];
    const int64_t n = attr_int(at, "transB") ? in[1].lens[0] : in[1].lens[1];
    return one(TensorStruct{m, n});
  };
  s.kernel = [out_fn = s.out_fn](const AttrMap& at, ValueSpan in) {
    std::vector<TensorStruct> shapes{in[0].shape, in[1].shape};
    TensorValue out(out_fn(at, shapes)[0]);
    const bool ta = attr_int(at, "transA") == 1, tb = attr_int(at, "transB") == 1;
    const int64_t m = out.shape.lens[0], n = out.shape.lens[1];
    const int64_t k = ta ? in[0].shape.lens[0] : in[0].shape.lens[1];
    const int64_t a_cols = in[0].shape.lens[1], b_cols = in[1].shape.lens[1];
    for (int64_t i = 0; i < m; ++i) {
      for (int64_t j = 0; j < n; ++j) {
        double acc = in.size() == 3 ? in[2].data[static_cast<size_t>(i * n + j)] : 0.0;
        for (int64_t t = 0; t < k; ++t) {
          const double x = in[0].data[static_cast<size_t>(ta ? t * a_cols + i : i * a_cols + t)];
          const double y = in[1].data[static_cast<size_t>(tb ? j * b_cols + t : t * b_cols + j)];
          acc += x * y;
        }
        out.data[static_cast<size_t>(i * n + j)] = static_cast<float>(acc);
      }
    }
    return std::vector<TensorValue>{std::move(out)};
  };
  return s;
}

// ---------------------------------------------------------------------------
// Sliding windows over the spatial dims (3..d) of an [N, C, spatial...] input.

struct Window {
  std::vector<int64_t> kernel, strides, pads_begin, pads_end;
};

int64_t window_out(int64_t x, int64_t k, int64_t s, int64_t pb, int64_t pe) { return floor_div(x + pb + pe - k, s) + 1; }

TensorStruct windowed_shape(const TensorStruct& x, int64_t channels, const Window& w) {
  TensorStruct out{x.lens[0], channels};
  for (size_t i = 0; i < w.kernel.size(); ++i) {
    out.lens.push_back(window_out(x.lens[i + 2], w.kernel[i], w.strides[i], w.pads_begin[i], w.pads_end[i]));
  }
  return out;
}

// Visits every in-bounds input position of the window that produces output
// spatial index `o`; f receives the input flat spatial offset and the kernel
// flat offset.
template <typename F>
void visit_window(const TensorStruct& x, const Window& w, const std::vector<int64_t>& o, F&& f) {
  const size_t ns = w.kernel.size();
  TensorStruct kshape(w.kernel);
  for_each_index(kshape, [&](const std::vector<int64_t>& k) {
    int64_t in_off = 0, k_off = 0;
    for (size_t i = 0; i < ns; ++i) {
      const int64_t p = o[i] * w.strides[i] - w.pads_begin[i] + k[i];
      if (p < 0 || p >= x.lens[i + 2]) return;
      in_off = in_off * x.lens[i + 2] + p;
      k_off = k_off * w.kernel[i] + k[i];
    }
    f(in_off, k_off);
  });
}

std::vector<int64_t> spatial_of(const TensorStruct& s) { return {s.lens.begin() + 2, s.lens.end()}; }

int64_t spatial_volume(const TensorStruct& s) {
  int64_t v = 1;
  for (size_t i = 2; i < s.lens.size(); ++i) v *= s.lens[i];
  return v;
}

// W: [M, C, k...], bias [M]. No groups, no dilation.
OpSpec conv() {
  OpSpec s;
  s.name = "Conv";
  s.indegrees = {2, 3};
  s.attrs = {{"pads_begin", 0, 1, dim(0) - 2}, {"pads_end", 0, 1, dim(0) - 2}, {"strides", 1, 2, dim(0) - 2}};
  s.constraints = [](int indegree) {
    std::vector<Constraint> cs{
        ge(dim(0), 3),
        le(dim(0), 5),
        eq(dim(1), dim(0)),
        eq(len(1, 2), len(0, 2)),
        forall(1, dim(0) - 2,
               le(len(1, bound(1) + 2), len(0, bound(1) + 2) + attr("pads_begin", bound(1)) + attr("pads_end", bound(1)))),
    };
    if (indegree == 3) {
      cs.push_back(eq(dim(2), 1));
      cs.push_back(eq(len(2, 1), len(1, 1)));
    }
    return cs;
  };
  s.checker = [](const AttrMap& a, ShapeSpan in) {
    const auto& x = in[0].lens;
    const auto& w = in[1].lens;
    if (x.size() < 3 || x.size() > 5 || w.size() != x.size() || w[1] != x[1]) return false;
    const size_t ns = x.size() - 2;
    const auto& pb = attr_list(a, "pads_begin");
    const auto& pe = attr_list(a, "pads_end");
    if (pb.size() != ns || pe.size() != ns || attr_list(a, "strides").size() != ns) return false;
    for (size_t i = 0; i < ns; ++i)
      if (w[i + 2] > x[i + 2] + pb[i] + pe[i]) return false;
    if (in.size() == 3) return in[2].lens == std::vector<int64_t>{w[0]};
    return true;
  };
  s.out_fn = [](const AttrMap& a, ShapeSpan in) {
    Window w{spatial_of(in[1]), attr_list(a, "strides"), attr_list(a, "pads_begin"), attr_list(a, "pads_end")};
    return one(windowed_shape(in[0], in[1].lens[0], w));
  };
  s.kernel = [](const AttrMap& a, ValueSpan in) {
    const auto& x = in[0];
    const auto& wt = in[1];
    Window w{spatial_of(wt.shape), attr_list(a, "strides"), attr_list(a, "pads_begin"), attr_list(a, "pads_end")};
    TensorValue out(windowed_shape(x.shape, wt.shape.lens[0], w));
    const int64_t batch = x.shape.lens[0], cin = x.shape.lens[1], cout = wt.shape.lens[0];
    const int64_t xs = spatial_volume(x.shape), ks = spatial_volume(wt.shape), os = spatial_volume(out.shape);
    TensorStruct oshape(spatial_of(out.shape));
    for (int64_t n = 0; n < batch; ++n) {
      for (int64_t m = 0; m < cout; ++m) {
        int64_t o_flat = 0;
        for_each_index(oshape, [&](const std::vector<int64_t>& o) {
          double acc = in.size() == 3 ? in[2].data[static_cast<size_t>(m)] : 0.0;
          for (int64_t c = 0; c < cin; ++c) {
            const float* px = x.data.data() + (n * cin + c) * xs;
            const float* pw = wt.data.data() + (m * cin + c) * ks;
            visit_window(x.shape, w, o, [&](int64_t io, int64_t ko) { acc += static_cast<double>(px[io]) * pw[ko]; });
          }
          out.data[static_cast<size_t>((n * cout + m) * os + o_flat++)] = static_cast<float>(acc);
        });
      }
    }
    return std::vector<TensorValue>{std::move(out)};
  };
  return s;
}

enum class Pool { kMax, kAverage, kLp };

// Pads never take part in the result: ignored by max, excluded from the
// average's count, zero for Lp (p = 2).
OpSpec pool(std::string name, Pool kind) {
  OpSpec s;
  s.name = std::move(name);
  s.indegrees = {1};
  s.attrs = {{"pads_begin", 0, 2, dim(0) - 2},
             {"pads_end", 0, 2, dim(0) - 2},
             {"kernel_shape", 1, 5, dim(0) - 2},
             {"strides", 1, 2, dim(0) - 2}};
  s.constraints = [](int) {
    const Expr k = attr("kernel_shape", bound(1));
    const Expr pb = attr("pads_begin", bound(1));
    const Expr pe = attr("pads_end", bound(1));
    return std::vector<Constraint>{
        ge(dim(0), 3),
        le(dim(0), 5),
        forall(1, dim(0) - 2, ge(k, pb + 1)),
        forall(1, dim(0) - 2, ge(k, pe + 1)),
        forall(1, dim(0) - 2, le(k, len(0, bound(1) + 2) + pb + pe)),
    };
  };
  s.checker = [](const AttrMap& a, ShapeSpan in) {
    const auto& x = in[0].lens;
    if (x.size() < 3 || x.size() > 5) return false;
    const size_t ns = x.size() - 2;
    const auto& pb = attr_list(a, "pads_begin");
    const auto& pe = attr_list(a, "pads_end");
    const auto& k = attr_list(a, "kernel_shape");
    if (pb.size() != ns || pe.size() != ns || k.size() != ns || attr_list(a, "strides").size() != ns) return false;
    for (size_t i = 0; i < ns; ++i) {
      if (pb[i] >= k[i] || pe[i] >= k[i]) return false;
      if (k[i] > x[i + 2] + pb[i] + pe[i]) return false;
    }
    return true;
  };
  s.out_fn = [](const AttrMap& a, ShapeSpan in) {
    Window w{attr_list(a, "kernel_shape"), attr_list(a, "strides"), attr_list(a, "pads_begin"), attr_list(a, "pads_end")};
    return one(windowed_shape(in[0], in[0].lens[1], w));
  };
  s.kernel = [kind](const AttrMap& a, ValueSpan in) {
    const auto& x = in[0];
    Window w{attr_list(a, "kernel_shape"), attr_list(a, "strides"), attr_list(a, "pads_begin"), attr_list(a, "pads_end")};
    TensorValue out(windowed_shape(x.shape, x.shape.lens[1], w));
    const int64_t planes = x.shape.lens[0] * x.shape.lens[1];
    const int64_t xs = spatial_volume(x.shape), os = spatial_volume(out.shape);
    TensorStruct oshape(spatial_of(out.shape));
    for (int64_t p = 0; p < planes; ++p) {
      const float* px = x.data.data() + p * xs;
      int64_t o_flat = 0;
      for_each_index(oshape, [&](const std::vector<int64_t>& o) {
        double acc = kind == Pool::kMax ? -std::numeric_limits<double>::infinity() : 0.0;
        int64_t count = 0;
        bool nan = false;
        visit_window(x.shape, w, o, [&](int64_t io, int64_t) {
          const double v = px[io];
          if (std::isnan(v)) nan = true;
          if (kind == Pool::kMax) acc = std::max(acc, v);
          else if (kind == Pool::kAverage) acc += v;
          else acc += v * v;
          ++count;
        });
        if (kind == Pool::kAverage) acc /= static_cast<double>(count);
        if (kind == Pool::kLp) acc = std::sqrt(acc);
        if (nan) acc = NAN;
        out.data[static_cast<size_t>(p * os + o_flat++)] = static_cast<float>(acc);
      });
    }
    return std::vector<TensorValue>{std::move(out)};
  };
  return s;
}

OpSpec global_pool(std::string name, bool average) {
  OpSpec s;
  s.name = std::move(name);
  s.indegrees = {1};
  s.constraints = [](int) { return std::vector<Constraint>{ge(dim(0), 3)}; };
  s.checker = [](const AttrMap&, ShapeSpan in) { return in[0].dim() >= 3; };
  s.out_fn = [](const AttrMap&, ShapeSpan in) {
    TensorStruct out = in[0];
    std::fill(out.lens.begin() + 2, out.lens.end(), 1);
    return one(out);
  };
  s.kernel = [average, out_fn = s.out_fn](const AttrMap& a, ValueSpan in) {
    std::vector<TensorStruct> shapes{in[0].shape};
    TensorValue out(out_fn(a, shapes)[0]);
    const int64_t xs = spatial_volume(in[0].shape);
    for (size_t p = 0; p < out.data.size(); ++p) {
      double acc = average ? 0.0 : -std::numeric_limits<double>::infinity();
      bool nan = false;
      for (int64_t i = 0; i < xs; ++i) {
        const double v = in[0].data[p * static_cast<size_t>(xs) + static_cast<size_t>(i)];
        if (std::isnan(v)) nan = true;
        acc = average ? acc + v : std::max(acc, v);
      }
      if (average) acc /= static_cast<double>(xs);
      out.data[p] = nan ? NAN : static_cast<float>(acc);
    }
    return std::vector<TensorValue>{std::move(out)};
  };
  return s;
}

}  // namespace

void register_nn(Registry& r) {
  r.add(matmul());
  r.add(gemm());
  r.add(conv());
  r.add(pool("MaxPool", Pool::kMax));
  r.add(pool("AveragePool", Pool::kAverage));
  r.add(pool("LpPool", Pool::kLp));
  r.add(global_pool("GlobalAveragePool", true));
  r.add(global_pool("GlobalMaxPool", false));
}

}  // namespace graphsmith::ops
